//! 256-bin gray-level histograms.
//!
//! The cumulative distribution is kept as integer prefix sums of the counts.
//! Division by the total is deferred to the caller, so formulas built on the
//! CDF can be evaluated exactly with a rational [`LevelScalar`].

use thiserror::Error;

use crate::image::{Gray8Image, LEVELS};
use crate::scalar::LevelScalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HistogramError {
    #[error("histogram has no samples")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; LEVELS],
    cumulative: [u64; LEVELS],
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; LEVELS]) -> Result<Self, HistogramError> {
        let mut cumulative = [0u64; LEVELS];
        let mut acc = 0u64;
        for (c, &n) in cumulative.iter_mut().zip(counts.iter()) {
            acc += n;
            *c = acc;
        }
        if acc == 0 {
            return Err(HistogramError::Empty);
        }
        Ok(Self { counts, cumulative })
    }

    pub fn of(img: &Gray8Image) -> Self {
        Self::of_pixels(img.pixels().iter().copied()).expect("images are never empty")
    }

    pub fn of_pixels(pixels: impl IntoIterator<Item = u8>) -> Result<Self, HistogramError> {
        let mut counts = [0u64; LEVELS];
        for p in pixels {
            counts[p as usize] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    #[inline]
    pub fn count(&self, level: u8) -> u64 {
        self.counts[level as usize]
    }

    pub fn total(&self) -> u64 {
        self.cumulative[LEVELS - 1]
    }

    /// Number of samples at or below `level`.
    #[inline]
    pub fn cumulative_count(&self, level: u8) -> u64 {
        self.cumulative[level as usize]
    }

    /// Number of samples strictly below `level`.
    #[inline]
    pub fn count_below(&self, level: u8) -> u64 {
        self.cumulative[level as usize] - self.counts[level as usize]
    }

    /// Number of samples strictly above `level`.
    #[inline]
    pub fn count_above(&self, level: u8) -> u64 {
        self.total() - self.cumulative[level as usize]
    }

    /// Number of samples with level in `lo..=hi`.
    pub fn mass(&self, lo: u8, hi: u8) -> u64 {
        debug_assert!(lo <= hi);
        self.cumulative[hi as usize] - self.count_below(lo)
    }

    /// Smallest nonzero prefix count, i.e. the count of the lowest occupied level.
    pub fn min_cumulative_count(&self) -> u64 {
        self.cumulative
            .iter()
            .copied()
            .find(|&c| c > 0)
            .expect("histogram is non-empty")
    }

    pub fn occupied_levels(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(|&l| self.counts[l as usize] > 0)
    }

    pub fn probability<T: LevelScalar>(&self, level: u8) -> T {
        T::from_count(self.count(level)) / T::from_count(self.total())
    }

    pub fn cdf<T: LevelScalar>(&self, level: u8) -> T {
        T::from_count(self.cumulative_count(level)) / T::from_count(self.total())
    }
}

/// Histogram of `img`.
pub fn histogram(img: &Gray8Image) -> Histogram256 {
    Histogram256::of(img)
}
