use crate::histogram::Histogram256;
use crate::image::{Gray8Image, LEVELS};
use crate::scalar::LevelScalar;

use super::equalize::{equalization_lut, CdfNormalization};
use super::{to_level, EnhanceError};

/// Smallest tile side accepted by [`clahe`].
pub const MIN_TILE: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct ClaheParams<T> {
    pub tile_width: usize,
    pub tile_height: usize,
    /// Per-bin ceiling as a multiple of the flat-histogram bin height
    /// (`tile_pixels / 256`). A value of 256 or more never clips.
    pub clip_limit: T,
    pub normalization: CdfNormalization,
}

impl<T: LevelScalar> Default for ClaheParams<T> {
    fn default() -> Self {
        Self {
            tile_width: 32,
            tile_height: 32,
            clip_limit: T::from_count(4),
            normalization: CdfNormalization::Total,
        }
    }
}

impl<T: LevelScalar> ClaheParams<T> {
    pub fn new(tile_width: usize, tile_height: usize, clip_limit: T) -> Self {
        Self {
            tile_width,
            tile_height,
            clip_limit,
            normalization: CdfNormalization::Total,
        }
    }

    /// Tiles of the given size whose histograms are never clipped.
    pub fn unclipped(tile_width: usize, tile_height: usize) -> Self {
        Self::new(tile_width, tile_height, T::from_count(LEVELS as u64))
    }

    pub fn validate(&self) -> Result<(), EnhanceError> {
        if self.tile_width < MIN_TILE || self.tile_height < MIN_TILE {
            return Err(EnhanceError::InvalidParams(format!(
                "tiles must be at least {MIN_TILE}x{MIN_TILE}, got {}x{}",
                self.tile_width, self.tile_height
            )));
        }
        if !(self.clip_limit >= T::one()) || self.clip_limit.floor_to_i64().is_none() {
            return Err(EnhanceError::InvalidParams(format!(
                "clip limit must be a finite value >= 1, got {:?}",
                self.clip_limit
            )));
        }
        Ok(())
    }

    /// Integer bin ceiling for a tile of `pixels` samples (at least 1).
    pub fn bin_limit(&self, pixels: usize) -> u64 {
        let raw = self.clip_limit * T::from_count(pixels as u64) / T::from_count(LEVELS as u64);
        raw.floor_to_i64().unwrap_or(i64::MAX).max(1) as u64
    }
}

/// Clips every bin at `limit` and spreads the excess over all 256 bins: an
/// equal share to each, then the remainder one count at a time from bin 0.
/// The total count is conserved exactly.
pub fn clip_histogram(counts: &[u64; LEVELS], limit: u64) -> [u64; LEVELS] {
    let mut out = *counts;
    let mut excess = 0u64;
    for c in out.iter_mut() {
        if *c > limit {
            excess += *c - limit;
            *c = limit;
        }
    }
    let share = excess / LEVELS as u64;
    let residual = (excess % LEVELS as u64) as usize;
    for (i, c) in out.iter_mut().enumerate() {
        *c += share + u64::from(i < residual);
    }
    out
}

/// Tile placement along both axes.
///
/// Tiles have exactly the requested size. When the image side is not a
/// multiple of the tile side, the last tile is anchored to the far edge and
/// overlaps its neighbour, so every tile holds the same number of pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    pub tile_width: usize,
    pub tile_height: usize,
    pub x_origins: Vec<usize>,
    pub y_origins: Vec<usize>,
}

fn origins(len: usize, tile: usize) -> Vec<usize> {
    let n = len.div_ceil(tile);
    (0..n).map(|k| (k * tile).min(len - tile)).collect()
}

impl TileGrid {
    pub fn new(width: usize, height: usize, tile_width: usize, tile_height: usize) -> Result<Self, EnhanceError> {
        if tile_width > width || tile_height > height {
            return Err(EnhanceError::InvalidParams(format!(
                "{tile_width}x{tile_height} tile does not fit a {width}x{height} image"
            )));
        }
        Ok(Self {
            tile_width,
            tile_height,
            x_origins: origins(width, tile_width),
            y_origins: origins(height, tile_height),
        })
    }

    pub fn cols(&self) -> usize {
        self.x_origins.len()
    }

    pub fn rows(&self) -> usize {
        self.y_origins.len()
    }

    /// Twice the tile-center coordinates along x (keeps them integral).
    fn doubled_centers_x(&self) -> Vec<usize> {
        self.x_origins.iter().map(|&o| 2 * o + self.tile_width - 1).collect()
    }

    fn doubled_centers_y(&self) -> Vec<usize> {
        self.y_origins.iter().map(|&o| 2 * o + self.tile_height - 1).collect()
    }
}

/// Clipped-histogram equalization mapping of every tile, row-major.
pub fn clahe_tile_luts<T: LevelScalar>(
    img: &Gray8Image,
    params: &ClaheParams<T>,
) -> Result<(TileGrid, Vec<[u8; LEVELS]>), EnhanceError> {
    params.validate()?;
    let grid = TileGrid::new(img.width(), img.height(), params.tile_width, params.tile_height)?;
    let limit = params.bin_limit(params.tile_width * params.tile_height);
    let mut luts = Vec::with_capacity(grid.rows() * grid.cols());
    for &y0 in &grid.y_origins {
        for &x0 in &grid.x_origins {
            let mut counts = [0u64; LEVELS];
            for y in y0..y0 + params.tile_height {
                for x in x0..x0 + params.tile_width {
                    counts[img.get(x, y) as usize] += 1;
                }
            }
            let clipped = clip_histogram(&counts, limit);
            let hist = Histogram256::from_counts(clipped).expect("tiles are non-empty");
            luts.push(equalization_lut(&hist, params.normalization)?);
        }
    }
    Ok((grid, luts))
}

/// Interpolation anchors along one axis: the two neighbouring tile indices and
/// the weight of the second one. Outside the outermost centers only the
/// nearest tile is used.
fn axis_weights<T: LevelScalar>(len: usize, doubled_centers: &[usize]) -> Vec<(usize, usize, T)> {
    let last = doubled_centers.len() - 1;
    (0..len)
        .map(|p| {
            let pos = 2 * p;
            if pos <= doubled_centers[0] {
                return (0, 0, T::zero());
            }
            if pos >= doubled_centers[last] {
                return (last, last, T::zero());
            }
            let k = doubled_centers.partition_point(|&c| c <= pos) - 1;
            let (c0, c1) = (doubled_centers[k], doubled_centers[k + 1]);
            let w = T::from_count((pos - c0) as u64) / T::from_count((c1 - c0) as u64);
            (k, k + 1, w)
        })
        .collect()
}

/// Contrast-limited adaptive histogram equalization.
///
/// Each output pixel blends the four nearest tile mappings bilinearly by
/// distance to their centers, so it always lies between the smallest and
/// largest of those four mapped values.
pub fn clahe<T: LevelScalar>(img: &Gray8Image, params: &ClaheParams<T>) -> Result<Gray8Image, EnhanceError> {
    let (grid, luts) = clahe_tile_luts(img, params)?;
    let cols = grid.cols();
    let wx = axis_weights::<T>(img.width(), &grid.doubled_centers_x());
    let wy = axis_weights::<T>(img.height(), &grid.doubled_centers_y());
    let one = T::one();
    let mut pixels = Vec::with_capacity(img.len());
    for (y, &(r0, r1, fy)) in wy.iter().enumerate() {
        for (x, &(c0, c1, fx)) in wx.iter().enumerate() {
            let level = img.get(x, y);
            let at = |r: usize, c: usize| T::from_count(u64::from(luts[r * cols + c][level as usize]));
            let top = at(r0, c0) * (one - fx) + at(r0, c1) * fx;
            let bottom = at(r1, c0) * (one - fx) + at(r1, c1) * fx;
            pixels.push(to_level(top * (one - fy) + bottom * fy, level)?);
        }
    }
    Ok(Gray8Image::new(img.width(), img.height(), pixels)?)
}
