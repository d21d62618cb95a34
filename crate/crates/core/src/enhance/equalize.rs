use crate::histogram::Histogram256;
use crate::image::{Gray8Image, LEVELS, MAX_INTENSITY};

use super::EnhanceError;

/// Denominator used when normalizing the prefix counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CdfNormalization {
    /// `(cdf(i) - cdf_min) / (n - 1)`.
    #[default]
    Total,
    /// `(cdf(i) - cdf_min) / (n - cdf_min)`, the textbook form that always
    /// stretches the occupied range onto `[0, 255]`.
    Classical,
}

/// Level mapping for histogram equalization.
///
/// Computed in integer arithmetic, so it is exact: `cdf` is the unnormalized
/// prefix count and `cdf_min` the smallest nonzero one. Levels below the first
/// occupied one clamp to 0.
pub fn equalization_lut(
    hist: &Histogram256,
    norm: CdfNormalization,
) -> Result<[u8; LEVELS], EnhanceError> {
    let n = hist.total();
    let cdf_min = hist.min_cumulative_count();
    let denom = match norm {
        CdfNormalization::Total => n - 1,
        CdfNormalization::Classical => n - cdf_min,
    };
    let mut lut = [0u8; LEVELS];
    if denom == 0 {
        if norm == CdfNormalization::Total {
            return Err(EnhanceError::Degenerate("single-pixel image"));
        }
        // classical form on a constant image: everything collapses to 0
        return Ok(lut);
    }
    let max = u128::from(MAX_INTENSITY);
    let denom = u128::from(denom);
    for (level, out) in lut.iter_mut().enumerate() {
        let above_min = u128::from(hist.cumulative_count(level as u8).saturating_sub(cdf_min));
        // floor(x / d + 1/2) == floor((2x + d) / 2d)
        let rounded = (2 * above_min * max + denom) / (2 * denom);
        *out = rounded.min(max) as u8;
    }
    Ok(lut)
}

/// Global histogram equalization with the `n - 1` normalization.
pub fn equalize(img: &Gray8Image) -> Result<Gray8Image, EnhanceError> {
    equalize_with(img, CdfNormalization::Total)
}

pub fn equalize_with(img: &Gray8Image, norm: CdfNormalization) -> Result<Gray8Image, EnhanceError> {
    let lut = equalization_lut(&Histogram256::of(img), norm)?;
    Ok(img.map_levels(&lut))
}
