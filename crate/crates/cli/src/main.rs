mod calibrate;
mod enhance;
mod learn;
mod metrics;
mod output;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::Invalid;

#[derive(Parser)]
#[command(name = "irvision", version, about = "Low-light infrared imaging pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Histogram-based contrast enhancement of a PNM file or a directory of them
    Enhance(enhance::EnhanceArgs),
    /// Entropy, MSE, PSNR and variance PSNR of a test image against a reference
    Metrics {
        reference: PathBuf,
        test: PathBuf,
    },
    /// Camera intrinsics and distortion from centroid CSVs or rendered LED-board images
    Calibrate(calibrate::CalibrateArgs),
    /// Removes lens distortion using a calibrated model
    Undistort(calibrate::UndistortArgs),
    /// Trains the softmax head on a feature CSV
    Train(learn::TrainArgs),
    /// Per-condition accuracy of a trained model
    Eval(learn::EvalArgs),
    /// Writes synthetic calibration views of the reference camera
    SynthViews(synth::ViewsArgs),
    /// Writes a synthetic feature CSV with Gaussian class clusters
    SynthFeatures(synth::FeaturesArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Enhance(a) => enhance::run(a),
        Command::Metrics { reference, test } => metrics::run(&reference, &test),
        Command::Calibrate(a) => calibrate::run(a),
        Command::Undistort(a) => calibrate::run_undistort(a),
        Command::Train(a) => learn::run_train(a),
        Command::Eval(a) => learn::run_eval(a),
        Command::SynthViews(a) => synth::run_views(a),
        Command::SynthFeatures(a) => synth::run_features(a),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
