//! Calibration model JSON and centroid CSV files.

use std::fmt::Write as _;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Calibration, CameraIntrinsics, DistortionCoeffs, View};
use crate::scalar::sig9;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("model field {0} is not finite")]
    NonFinite(&'static str),
}

/// On-disk camera model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub p1: f64,
    pub p2: f64,
    pub per_view_rms: Vec<f64>,
    pub converged: bool,
}

impl CameraModel {
    pub fn from_calibration(c: &Calibration<f64>) -> Self {
        let (k, d) = (&c.intrinsics, &c.distortion);
        Self {
            fx: sig9(k.fx),
            fy: sig9(k.fy),
            cx: sig9(k.cx),
            cy: sig9(k.cy),
            k1: sig9(d.k1),
            k2: sig9(d.k2),
            k3: sig9(d.k3),
            p1: sig9(d.p1),
            p2: sig9(d.p2),
            per_view_rms: c.per_view_rms.iter().copied().map(sig9).collect(),
            converged: c.converged,
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(self.fx, self.fy, self.cx, self.cy)
    }

    pub fn distortion(&self) -> DistortionCoeffs<f64> {
        DistortionCoeffs::from_array([self.k1, self.k2, self.k3, self.p1, self.p2])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, FileError> {
        let model: Self = serde_json::from_str(text)?;
        let fields = [
            ("fx", model.fx),
            ("fy", model.fy),
            ("cx", model.cx),
            ("cy", model.cy),
            ("k1", model.k1),
            ("k2", model.k2),
            ("k3", model.k3),
            ("p1", model.p1),
            ("p2", model.p2),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(FileError::NonFinite(name));
        }
        Ok(model)
    }
}

/// Parses a centroid file: one correspondence `wx,wy,ix,iy` per line. Blank
/// lines, `#` comments and a `wx,...` header are skipped.
pub fn parse_centroid_csv(text: &str) -> Result<View<f64>, FileError> {
    let mut world = Vec::new();
    let mut image = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("wx") {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FileError::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        match values[..] {
            [wx, wy, ix, iy] if values.iter().all(|v| v.is_finite()) => {
                world.push(Point2::new(wx, wy));
                image.push(Point2::new(ix, iy));
            }
            _ => {
                return Err(FileError::Parse {
                    line: n + 1,
                    message: format!("expected 4 finite numbers, got {:?}", line),
                })
            }
        }
    }
    Ok(View::new(world, image))
}

pub fn format_centroid_csv(view: &View<f64>) -> String {
    let mut out = String::from("wx,wy,ix,iy\n");
    for (w, i) in view.world.iter().zip(&view.image) {
        let _ = writeln!(out, "{},{},{},{}", sig9(w.x), sig9(w.y), sig9(i.x), sig9(i.y));
    }
    out
}
