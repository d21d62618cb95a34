//! Low-light infrared imaging pipeline.
//!
//! * [`image`], [`histogram`], [`pnm`]: 8-bit image containers, histograms and
//!   binary netpbm I/O.
//! * [`enhance`]: global, β-adaptive and contrast-limited histogram equalization.
//! * [`metrics`]: entropy, MSE, PSNR and variance PSNR.
//! * [`calib`]: LED-grid centroiding, DLT homographies, planar camera
//!   calibration with radial/tangential distortion, and undistortion.
//! * [`classify`]: softmax classifier head trained on precomputed feature vectors.
//! * [`synth`]: deterministic synthetic scenes and datasets used by tests and the CLI.
//!
//! The numeric modules are generic over their scalar type. The aliases at the
//! crate root fix the common instantiations.

pub mod calib;
pub mod classify;
pub mod enhance;
pub mod histogram;
pub mod image;
pub mod metrics;
pub mod pnm;
pub mod scalar;
pub mod synth;

pub use histogram::{histogram, Histogram256};
pub use image::{Gray8Image, Rgb8Image};
pub use pnm::{read_pnm, write_pnm, PnmImage};
pub use scalar::{LevelScalar, Rational128, Rational64, Real};

/// Exact scalar for level mappings.
pub type Exact = Rational64;

pub type AheParams = enhance::AheParams<f64>;
pub type AheParamsExact = enhance::AheParams<Exact>;
pub type ClaheParams = enhance::ClaheParams<f64>;
pub type ClaheParamsExact = enhance::ClaheParams<Exact>;
pub type EnhanceMethod = enhance::Method<f64>;

pub type MetricReport = metrics::MetricReport<f64>;

pub type CameraIntrinsics = calib::CameraIntrinsics<f64>;
pub type DistortionCoeffs = calib::DistortionCoeffs<f64>;
pub type CameraPose = calib::CameraPose<f64>;
pub type Homography = calib::Homography<f64>;
pub type TargetGrid = calib::TargetGrid<f64>;
pub type Calibration = calib::Calibration<f64>;
pub type CameraIntrinsicsF32 = calib::CameraIntrinsics<f32>;
pub type DistortionCoeffsF32 = calib::DistortionCoeffs<f32>;
pub type CameraPoseF32 = calib::CameraPose<f32>;

pub type FeatureRecord = classify::FeatureRecord<f64>;
pub type LinearClassifier = classify::LinearClassifier<f64>;
pub type TrainConfig = classify::TrainConfig<f64>;
pub type FeatureRecordF32 = classify::FeatureRecord<f32>;
pub type LinearClassifierF32 = classify::LinearClassifier<f32>;
