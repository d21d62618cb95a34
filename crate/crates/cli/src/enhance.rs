use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use irvision::enhance::{enhance_rgb, select_beta, AheParams, CdfNormalization, ClaheParams, EnhanceError, Method};
use irvision::pnm::{decode_pnm, encode_pnm, PnmImage};
use irvision::scalar::parse_exact;
use irvision::{Histogram256, Rational64};

use crate::output::{invalid, write_atomic, RunManifest};

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    He,
    Ahe,
    Clahe,
}

#[derive(Args)]
pub struct EnhanceArgs {
    /// PGM/PPM file, or a directory of them
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// AHE weight: "auto" or a positive number
    #[arg(long, default_value = "auto")]
    beta: String,
    /// CLAHE tile size, N or WxH
    #[arg(long, default_value = "32")]
    tile: String,
    /// CLAHE clip limit, a multiple of the flat bin height
    #[arg(long, default_value = "4.0")]
    clip: String,
    /// HE: normalize by n - cdf_min instead of n - 1
    #[arg(long)]
    classic: bool,
    /// AHE: count the level's own mass in the denominator
    #[arg(long)]
    include_current_level: bool,
    /// Output file, or output directory when the input is a directory
    #[arg(short, long)]
    output: PathBuf,
}

fn positive(name: &str, text: &str) -> Result<Rational64> {
    parse_exact(text)
        .filter(|v| *v > Rational64::from_integer(0))
        .ok_or_else(|| invalid(format!("--{name} must be a positive number, got {text:?}")))
}

fn tile_size(text: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().ok();
    let size = match text.split_once(['x', 'X']) {
        Some((w, h)) => parse(w).zip(parse(h)),
        None => parse(text).map(|n| (n, n)),
    };
    size.ok_or_else(|| invalid(format!("--tile must be N or WxH, got {text:?}")))
}

fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn method_of(a: &EnhanceArgs) -> Result<(Method<Rational64>, Value)> {
    let (method, params) = match a.method {
        MethodArg::He => {
            let norm = if a.classic { CdfNormalization::Classical } else { CdfNormalization::Total };
            (Method::Equalize(norm), json!({"normalization": if a.classic { "classical" } else { "total" }}))
        }
        MethodArg::Ahe => {
            let mut p = AheParams::default();
            if a.beta != "auto" {
                p.beta = Some(positive("beta", &a.beta)?);
            }
            p.include_current_level = a.include_current_level;
            let params = json!({
                "beta": p.beta.map(ratio_f64),
                "beta_mode": if p.beta.is_some() { "fixed" } else { "auto" },
                "low_threshold": p.low_threshold,
                "high_threshold": p.high_threshold,
                "include_current_level": p.include_current_level,
            });
            (Method::Adaptive(p), params)
        }
        MethodArg::Clahe => {
            let (w, h) = tile_size(&a.tile)?;
            let p = ClaheParams::new(w, h, positive("clip", &a.clip)?);
            let params = json!({"tile_width": w, "tile_height": h, "clip_limit": ratio_f64(p.clip_limit)});
            (Method::Clahe(p), params)
        }
    };
    let check = match &method {
        Method::Adaptive(p) => p.validate(),
        Method::Clahe(p) => p.validate(),
        Method::Equalize(_) => Ok(()),
    };
    check.map_err(|e| invalid(e.to_string()))?;
    Ok((method, params))
}

fn enhance_error(e: EnhanceError) -> anyhow::Error {
    match e {
        EnhanceError::NonFinite(_) => anyhow::Error::new(e),
        other => invalid(other.to_string()),
    }
}

/// β that auto mode resolves to, per channel.
fn resolved_betas(img: &PnmImage, p: &AheParams<Rational64>) -> Vec<f64> {
    let beta = |g: &irvision::Gray8Image| ratio_f64(p.beta.unwrap_or_else(|| select_beta(&Histogram256::of(g), p)));
    match img {
        PnmImage::Gray(g) => vec![beta(g)],
        PnmImage::Rgb(c) => (0..3).map(|i| beta(&c.channel(i))).collect(),
    }
}

fn enhance_file(input: &Path, output: &Path, method: &Method<Rational64>, params: &Value) -> Result<()> {
    let started = Instant::now();
    let bytes = fs::read(input).with_context(|| format!("cannot read {}", input.display()))?;
    let img = decode_pnm(&bytes).with_context(|| format!("cannot parse {}", input.display()))?;
    let out: PnmImage = match &img {
        PnmImage::Gray(g) => method.apply(g).map_err(enhance_error)?.into(),
        PnmImage::Rgb(c) => enhance_rgb(c, method).map_err(enhance_error)?.into(),
    };
    let mut params = params.clone();
    params["method"] = json!(method.name());
    if let Method::Adaptive(p) = method {
        params["resolved_beta"] = json!(resolved_betas(&img, p));
    }
    write_atomic(output, &encode_pnm(&out))?;
    let mut manifest = RunManifest::new("enhance", params, started);
    manifest.inputs.push(input.to_owned());
    manifest.outputs.push(output.to_owned());
    manifest.write_next_to(output)
}

fn is_pnm(p: &Path) -> bool {
    p.is_file()
        && p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
}

pub fn run(a: EnhanceArgs) -> Result<()> {
    let (method, params) = method_of(&a)?;
    if !a.input.is_dir() {
        return enhance_file(&a.input, &a.output, &method, &params);
    }
    let mut inputs: Vec<PathBuf> = fs::read_dir(&a.input)
        .with_context(|| format!("cannot list {}", a.input.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    inputs.retain(|p| is_pnm(p));
    inputs.sort();
    fs::create_dir_all(&a.output).with_context(|| format!("cannot create {}", a.output.display()))?;
    let results: Vec<Result<()>> = inputs
        .par_iter()
        .map(|p| {
            let out = a.output.join(p.file_name().expect("listed file has a name"));
            enhance_file(p, &out, &method, &params).with_context(|| p.display().to_string())
        })
        .collect();
    let mut failures = results.into_iter().filter_map(Result::err).collect::<Vec<_>>();
    for e in &failures {
        eprintln!("error: {e:#}");
    }
    // report an invalid-input failure ahead of an I/O one so the exit code reflects it
    failures.sort_by_key(|e| e.downcast_ref::<crate::output::Invalid>().is_none());
    match failures.into_iter().next() {
        Some(e) => Err(e.context("some images failed")),
        None => Ok(()),
    }
}
