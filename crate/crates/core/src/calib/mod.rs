//! Planar-target camera calibration and lens undistortion.
//!
//! A target of point lights on a plane is imaged from several poses. Light
//! centroids give point correspondences, each view yields a homography (DLT
//! followed by geometric refinement), the intrinsics come from the
//! homographies in closed form, and finally intrinsics, distortion and all
//! poses are refined jointly on the reprojection error.

mod calibrate;
mod camera;
mod centroid;
mod homography;
pub mod io;
mod lm;
mod undistort;

pub use calibrate::{calibrate, calibrate_with, focal_lengths_from_homographies, intrinsics_from_homographies, pose_from_homography, CalibrateOptions, Calibration, View};
pub use camera::{project, CameraIntrinsics, CameraPose, DistortionCoeffs, TargetGrid};
pub use centroid::{extract_centroids, extract_grid_centroids, order_as_grid};
pub use homography::{dlt_homography, refine_homography, Homography, Refinement};
pub use undistort::undistort;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("point lies at or behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("no blobs above threshold {0}")]
    EmptyTarget(u8),
    #[error("found {found} blobs, target has {expected}")]
    BlobCount { found: usize, expected: usize },
    #[error("need at least {needed} correspondences, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("point lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("need at least 3 views, got {0}")]
    InsufficientViews(usize),
    #[error("non-finite cost during refinement")]
    NonFinite,
}
