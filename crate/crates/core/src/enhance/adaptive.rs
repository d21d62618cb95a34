use crate::histogram::Histogram256;
use crate::image::{Gray8Image, LEVELS};
use crate::scalar::LevelScalar;

use super::{to_level, EnhanceError};

/// Parameters of β-weighted adaptive equalization.
#[derive(Debug, Clone, PartialEq)]
pub struct AheParams<T> {
    /// Fixed β; `None` picks it from the histogram with [`select_beta`].
    pub beta: Option<T>,
    /// Upper bound of the "low" gray-level band (inclusive).
    pub low_threshold: u8,
    /// Upper bound of the "middle" band (inclusive).
    pub high_threshold: u8,
    /// Also count the level's own mass in the denominator. Off by default.
    /// With it on and β = 1 the target becomes `255 * A / n`.
    pub include_current_level: bool,
}

impl<T> Default for AheParams<T> {
    fn default() -> Self {
        Self {
            beta: None,
            low_threshold: 85,
            high_threshold: 170,
            include_current_level: false,
        }
    }
}

impl<T: LevelScalar> AheParams<T> {
    pub fn with_beta(beta: T) -> Self {
        Self {
            beta: Some(beta),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EnhanceError> {
        if !(0 < self.low_threshold && self.low_threshold < self.high_threshold) {
            return Err(EnhanceError::InvalidParams(format!(
                "thresholds must satisfy 0 < low < high < 256, got {} and {}",
                self.low_threshold, self.high_threshold
            )));
        }
        if let Some(b) = self.beta {
            if !(b > T::zero()) {
                return Err(EnhanceError::InvalidParams(format!(
                    "beta must be positive, got {b:?}"
                )));
            }
        }
        Ok(())
    }

    /// β used for `hist`: the fixed one if given, otherwise [`select_beta`].
    pub fn resolve_beta(&self, hist: &Histogram256) -> T {
        self.beta.unwrap_or_else(|| select_beta(hist, self))
    }
}

/// Picks β from where most of the pixel mass sits.
///
/// Bands are `[0, low]`, `(low, high]` and `(high, 255]`, giving β = 0.8, 1.1
/// and 1.5 respectively. Ties go to the darker band.
pub fn select_beta<T: LevelScalar>(hist: &Histogram256, params: &AheParams<T>) -> T {
    let low = hist.mass(0, params.low_threshold);
    let mid = hist.mass(params.low_threshold + 1, params.high_threshold);
    let high = if params.high_threshold == 255 {
        0
    } else {
        hist.mass(params.high_threshold + 1, 255)
    };
    if low >= mid && low >= high {
        T::from_ratio(4, 5)
    } else if mid >= high {
        T::from_ratio(11, 10)
    } else {
        T::from_ratio(3, 2)
    }
}

/// Output level for every occupied input level; `None` for empty levels.
///
/// For level `i` with `A` the mass strictly below and `B` the mass strictly
/// above, the target is `255 * A / (A + beta * B)`. A level with `A = B = 0`
/// (constant image) maps to 0.
pub fn adaptive_lut<T: LevelScalar>(
    hist: &Histogram256,
    beta: T,
    include_current_level: bool,
) -> Result<[Option<u8>; LEVELS], EnhanceError> {
    let mut lut = [None; LEVELS];
    let top = T::from_count(255);
    for level in hist.occupied_levels() {
        // probabilities share the denominator n, so counts give the same ratio
        let below = T::from_count(hist.count_below(level));
        let above = T::from_count(hist.count_above(level));
        let mut denom = below + beta * above;
        if include_current_level {
            denom = denom + T::from_count(hist.count(level));
        }
        lut[level as usize] = Some(if denom == T::zero() {
            0
        } else {
            to_level(top * below / denom, level)?
        });
    }
    Ok(lut)
}

pub fn adaptive_equalize<T: LevelScalar>(
    img: &Gray8Image,
    params: &AheParams<T>,
) -> Result<Gray8Image, EnhanceError> {
    params.validate()?;
    let hist = Histogram256::of(img);
    let beta = params.resolve_beta(&hist);
    let lut = adaptive_lut(&hist, beta, params.include_current_level)?;
    let mut dense = [0u8; LEVELS];
    for (d, v) in dense.iter_mut().zip(lut) {
        *d = v.unwrap_or(0);
    }
    Ok(img.map_levels(&dense))
}
