use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use irvision::calib::io::{parse_centroid_csv, CameraModel};
use irvision::calib::{calibrate, extract_centroids, order_as_grid, undistort, CalibError, TargetGrid, View};
use irvision::pnm::{decode_pnm, encode_pnm, PnmImage};
use irvision::Rgb8Image;

use crate::output::{invalid, write_atomic, RunManifest};

#[derive(Args)]
pub struct CalibrateArgs {
    /// Centroid CSVs (wx,wy,ix,iy per line) or PGM images of the LED board
    #[arg(required = true)]
    views: Vec<PathBuf>,
    /// Target layout, ROWSxCOLS
    #[arg(long, default_value = "8x8")]
    grid: String,
    /// LED pitch in world units, used for image views
    #[arg(long, default_value_t = 30.0)]
    spacing: f64,
    /// Blob threshold for image views
    #[arg(long, default_value_t = 40)]
    threshold: u8,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
pub struct UndistortArgs {
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn grid_of(text: &str, spacing: f64) -> Result<TargetGrid<f64>> {
    let dims = text
        .split_once(['x', 'X'])
        .and_then(|(r, c)| r.trim().parse::<usize>().ok().zip(c.trim().parse::<usize>().ok()))
        .filter(|&(r, c)| r >= 2 && c >= 2);
    let Some((rows, cols)) = dims else {
        return Err(invalid(format!("--grid must be ROWSxCOLS with both at least 2, got {text:?}")));
    };
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(invalid(format!("--spacing must be positive, got {spacing}")));
    }
    Ok(TargetGrid::new(rows, cols, spacing))
}

fn is_csv(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// The inner `Err` carries why the view is unusable; such views are skipped.
fn load_view(path: &Path, grid: &TargetGrid<f64>, threshold: u8) -> Result<std::result::Result<View<f64>, String>> {
    if is_csv(path) {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let view = parse_centroid_csv(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        if view.world.len() != grid.len() {
            return Ok(Err(format!("{} correspondences, target has {}", view.world.len(), grid.len())));
        }
        return Ok(Ok(view));
    }
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let PnmImage::Gray(img) = decode_pnm(&bytes).with_context(|| format!("cannot parse {}", path.display()))? else {
        return Err(invalid(format!("{}: calibration images must be grayscale", path.display())));
    };
    let found = match extract_centroids::<f64>(&img, threshold) {
        Ok(points) => points,
        Err(e) => return Ok(Err(e.to_string())),
    };
    match order_as_grid(&found, grid) {
        Ok(image) => Ok(Ok(View::new(grid.plane_points(), image))),
        Err(e) => Ok(Err(e.to_string())),
    }
}

pub fn run(a: CalibrateArgs) -> Result<()> {
    let started = Instant::now();
    let grid = grid_of(&a.grid, a.spacing)?;
    let mut views = Vec::new();
    let mut used = Vec::new();
    let mut warnings = Vec::new();
    for path in &a.views {
        match load_view(path, &grid, a.threshold)? {
            Ok(v) => {
                views.push(v);
                used.push(path.clone());
            }
            Err(why) => {
                let msg = format!("skipped {}: {why}", path.display());
                eprintln!("warning: {msg}");
                warnings.push(msg);
            }
        }
    }
    let calib = calibrate(&views).map_err(|e| match e {
        CalibError::NonFinite => anyhow::Error::new(e),
        other => invalid(other.to_string()),
    })?;
    let model = CameraModel::from_calibration(&calib);
    write_atomic(&a.output, model.to_json().as_bytes())?;
    let params = json!({
        "grid": {"rows": grid.rows, "cols": grid.cols, "spacing": grid.spacing},
        "threshold": a.threshold,
        "views_used": used,
        "iterations": calib.iterations,
        "converged": calib.converged,
        "initial_cost": calib.initial_cost,
        "cost": calib.cost,
        "mean_reprojection_error": calib.mean_reprojection_error,
    });
    let mut manifest = RunManifest::new("calibrate", params, started);
    manifest.inputs = a.views.clone();
    manifest.outputs.push(a.output.clone());
    manifest.warnings = warnings;
    manifest.write_next_to(&a.output)
}

pub fn run_undistort(a: UndistortArgs) -> Result<()> {
    let started = Instant::now();
    let text = fs::read_to_string(&a.model).with_context(|| format!("cannot read {}", a.model.display()))?;
    let model = CameraModel::from_json(&text).with_context(|| format!("cannot parse {}", a.model.display()))?;
    let (k, d) = (model.intrinsics(), model.distortion());
    if !(k.fx > 0.0 && k.fy > 0.0) {
        return Err(invalid("model focal lengths must be positive"));
    }
    let bytes = fs::read(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let img = decode_pnm(&bytes).with_context(|| format!("cannot parse {}", a.input.display()))?;
    let out: PnmImage = match img {
        PnmImage::Gray(g) => undistort(&g, &k, &d).into(),
        PnmImage::Rgb(c) => {
            let ch: Vec<_> = (0..3).map(|i| undistort(&c.channel(i), &k, &d)).collect();
            Rgb8Image::from_channels(&ch[0], &ch[1], &ch[2])?.into()
        }
    };
    write_atomic(&a.output, &encode_pnm(&out))?;
    let mut manifest = RunManifest::new("undistort", serde_json::to_value(&model)?, started);
    manifest.inputs = vec![a.input, a.model];
    manifest.outputs.push(a.output.clone());
    manifest.write_next_to(&a.output)
}
