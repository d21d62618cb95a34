use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use irvision::calib::io::{format_centroid_csv, CameraModel};
use irvision::calib::TargetGrid;
use irvision::classify::io::format_features_csv;
use irvision::pnm::{encode_pnm, PnmImage};
use irvision::synth::{
    gaussian_features, random_poses, reference_distortion, reference_intrinsics, render_led_view, synthetic_views,
    BlobStyle, FeatureFixture, PoseSampler, REFERENCE_HEIGHT, REFERENCE_WIDTH,
};

use crate::output::{invalid, write_atomic, RunManifest};

#[derive(Args)]
pub struct ViewsArgs {
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    spacing: f64,
    /// Also render each view as a PGM of the LED board
    #[arg(long)]
    render: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct FeaturesArgs {
    #[arg(long, default_value_t = 500)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn run_views(a: ViewsArgs) -> Result<()> {
    let started = Instant::now();
    if a.count == 0 || !(a.spacing.is_finite() && a.spacing > 0.0) {
        return Err(invalid("--count and --spacing must be positive"));
    }
    let (k, d) = (reference_intrinsics(), reference_distortion());
    let grid = TargetGrid::led_board(a.spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let poses = random_poses(&mut rng, &k, &d, &grid, a.count, &PoseSampler::default());
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let mut outputs = Vec::new();
    for (i, view) in synthetic_views(&k, &d, &poses, &grid).iter().enumerate() {
        let path = a.out_dir.join(format!("view_{i:02}.csv"));
        write_atomic(&path, format_centroid_csv(view).as_bytes())?;
        outputs.push(path);
        if a.render {
            let img = render_led_view(&k, &d, &poses[i], &grid, REFERENCE_WIDTH, REFERENCE_HEIGHT, &BlobStyle::default())?;
            let path = a.out_dir.join(format!("view_{i:02}.pgm"));
            write_atomic(&path, &encode_pnm(&PnmImage::Gray(img)))?;
            outputs.push(path);
        }
    }
    let truth = CameraModel {
        fx: k.fx,
        fy: k.fy,
        cx: k.cx,
        cy: k.cy,
        k1: d.k1,
        k2: d.k2,
        k3: d.k3,
        p1: d.p1,
        p2: d.p2,
        per_view_rms: vec![0.0; a.count],
        converged: true,
    };
    let truth_path = a.out_dir.join("truth.json");
    write_atomic(&truth_path, truth.to_json().as_bytes())?;
    outputs.push(truth_path.clone());
    let params = json!({"count": a.count, "seed": a.seed, "spacing": a.spacing, "render": a.render});
    let mut manifest = RunManifest::new("synth-views", params, started);
    manifest.outputs = outputs;
    manifest.write_next_to(&truth_path)
}

pub fn run_features(a: FeaturesArgs) -> Result<()> {
    let started = Instant::now();
    if a.per_class == 0 || !(a.noise.is_finite() && a.noise >= 0.0) || !a.separation.is_finite() {
        return Err(invalid("--per-class must be positive and --noise, --separation finite"));
    }
    let fixture = FeatureFixture {
        per_class: a.per_class,
        separation: a.separation,
        noise: a.noise,
        ..FeatureFixture::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let records = gaussian_features(&mut rng, &fixture);
    write_atomic(&a.output, format_features_csv(&records).as_bytes())?;
    let params = json!({
        "per_class": a.per_class,
        "classes": fixture.classes,
        "dim": fixture.dim,
        "seed": a.seed,
        "separation": a.separation,
        "noise": a.noise,
    });
    let mut manifest = RunManifest::new("synth-features", params, started);
    manifest.outputs.push(a.output.clone());
    manifest.write_next_to(&a.output)
}
