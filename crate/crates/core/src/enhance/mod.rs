//! Histogram-based contrast enhancement.
//!
//! All three methods are level remappings driven by (local) histograms:
//! [`equalize`] is global histogram equalization, [`adaptive_equalize`] the
//! β-weighted variant that limits how much dense levels push sparse ones
//! around, and [`clahe`] the tiled, clip-limited version with bilinear
//! blending between tile mappings.
//!
//! Rounding is half-up everywhere, followed by a clamp to `[0, 255]`.

mod adaptive;
mod clahe;
mod equalize;

pub use adaptive::{adaptive_equalize, adaptive_lut, select_beta, AheParams};
pub use clahe::{clahe, clahe_tile_luts, clip_histogram, ClaheParams, TileGrid};
pub use equalize::{equalization_lut, equalize, equalize_with, CdfNormalization};

use thiserror::Error;

use crate::image::{Gray8Image, ImageError, Rgb8Image};
use crate::scalar::LevelScalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnhanceError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite intermediate value while mapping level {0}")]
    NonFinite(u8),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Selects one of the gray-level enhancement methods.
#[derive(Debug, Clone, PartialEq)]
pub enum Method<T> {
    Equalize(CdfNormalization),
    Adaptive(AheParams<T>),
    Clahe(ClaheParams<T>),
}

impl<T: LevelScalar> Method<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Equalize(_) => "he",
            Self::Adaptive(_) => "ahe",
            Self::Clahe(_) => "clahe",
        }
    }

    pub fn apply(&self, img: &Gray8Image) -> Result<Gray8Image, EnhanceError> {
        match self {
            Self::Equalize(norm) => equalize_with(img, *norm),
            Self::Adaptive(p) => adaptive_equalize(img, p),
            Self::Clahe(p) => clahe(img, p),
        }
    }
}

/// Applies `method` to each color channel independently.
pub fn enhance_rgb<T: LevelScalar>(
    img: &Rgb8Image,
    method: &Method<T>,
) -> Result<Rgb8Image, EnhanceError> {
    let r = method.apply(&img.channel(0))?;
    let g = method.apply(&img.channel(1))?;
    let b = method.apply(&img.channel(2))?;
    Ok(Rgb8Image::from_channels(&r, &g, &b)?)
}

/// Half-up rounds `v` and clamps it into the 8-bit range.
pub(crate) fn to_level<T: LevelScalar>(v: T, level: u8) -> Result<u8, EnhanceError> {
    let r = v.round_half_up().ok_or(EnhanceError::NonFinite(level))?;
    Ok(r.clamp(0, 255) as u8)
}
