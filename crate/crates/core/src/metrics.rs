//! Image quality measures: entropy, MSE, PSNR and the variance-based PSNR.
//!
//! Sums are accumulated in integers and converted once, so the results do not
//! depend on pixel order.

use serde::Serialize;
use thiserror::Error;

use crate::histogram::Histogram256;
use crate::image::{Gray8Image, ImageError, MAX_INTENSITY};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("images are identical, PSNR is unbounded")]
    IdenticalImages,
    #[error("image has zero variance, PSNR-VAR is unbounded")]
    ZeroVariance,
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl MetricError {
    /// Short machine-readable reason for unbounded results.
    pub fn reason(&self) -> &'static str {
        match self {
            Self::IdenticalImages => "identical",
            Self::ZeroVariance => "zero_variance",
            Self::Image(_) => "invalid_input",
        }
    }
}

/// Shannon entropy of the gray-level distribution, in bits per pixel.
pub fn entropy<F: Real>(img: &Gray8Image) -> F {
    histogram_entropy(&Histogram256::of(img))
}

pub fn histogram_entropy<F: Real>(hist: &Histogram256) -> F {
    let total = F::of(hist.total() as f64);
    hist.counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = F::of(c as f64) / total;
            -p * p.log2()
        })
        .fold(F::zero(), |acc, t| acc + t)
}

/// Mean squared difference between two equally sized images.
pub fn mse<F: Real>(reference: &Gray8Image, test: &Gray8Image) -> Result<F, MetricError> {
    reference.same_size(test)?;
    let sum: u64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(&a, &b)| {
            let d = u64::from(a.abs_diff(b));
            d * d
        })
        .sum();
    Ok(F::of(sum as f64) / F::of(reference.len() as f64))
}

fn peak_squared<F: Real>() -> F {
    let m = F::of(f64::from(MAX_INTENSITY));
    m * m
}

/// `10 log10(255^2 / mse)`.
pub fn psnr_from_mse<F: Real>(mse: F) -> Result<F, MetricError> {
    if mse <= F::zero() {
        return Err(MetricError::IdenticalImages);
    }
    Ok(F::of(10.0) * (peak_squared::<F>() / mse).log10())
}

pub fn psnr<F: Real>(reference: &Gray8Image, test: &Gray8Image) -> Result<F, MetricError> {
    psnr_from_mse(mse::<F>(reference, test)?)
}

/// Population variance of the pixel intensities.
pub fn variance<F: Real>(img: &Gray8Image) -> F {
    let n = img.len() as u128;
    let (sum, sum_sq) = img.pixels().iter().fold((0u128, 0u128), |(s, q), &p| {
        let p = u128::from(p);
        (s + p, q + p * p)
    });
    // n * sum(x^2) - sum(x)^2 is exact and non-negative
    let numer = n * sum_sq - sum * sum;
    F::of(numer as f64) / F::of((n * n) as f64)
}

/// PSNR with the pixel variance in place of the MSE.
pub fn psnr_var<F: Real>(img: &Gray8Image) -> Result<F, MetricError> {
    let var = variance::<F>(img);
    if var <= F::zero() {
        return Err(MetricError::ZeroVariance);
    }
    Ok(F::of(10.0) * (peak_squared::<F>() / var).log10())
}

/// All four measures for one enhanced image against its reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport<F> {
    pub entropy: F,
    pub mse: F,
    /// `None` when the images are identical.
    pub psnr_db: Option<F>,
    /// `None` when the test image is constant.
    pub psnr_var_db: Option<F>,
}

impl<F: Real> MetricReport<F> {
    pub fn compute(reference: &Gray8Image, test: &Gray8Image) -> Result<Self, MetricError> {
        let mse = mse::<F>(reference, test)?;
        Ok(Self {
            entropy: entropy(test),
            mse,
            psnr_db: psnr_from_mse(mse).ok(),
            psnr_var_db: psnr_var(test).ok(),
        })
    }
}
