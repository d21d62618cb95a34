use nalgebra::{convert, Point2, RealField};

use crate::image::Gray8Image;

use super::{CalibError, TargetGrid};

/// Sub-pixel centers of the bright blobs in `img`.
///
/// Pixels strictly above `threshold` are grouped into 8-connected components.
/// Each component's center is the mean of its pixel coordinates weighted by
/// `intensity - threshold`, so the faint rim contributes almost nothing and
/// the estimate is stable under the choice of threshold. Pixel `(x, y)` has
/// its center at integer coordinates. The result is sorted by `y`, then `x`.
pub fn extract_centroids<T: RealField + Copy>(
    img: &Gray8Image,
    threshold: u8,
) -> Result<Vec<Point2<T>>, CalibError> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut centers: Vec<(f64, f64)> = Vec::new();
    for start in 0..w * h {
        if seen[start] || img.pixels()[start] <= threshold {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut sw, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            let weight = f64::from(img.pixels()[idx] - threshold);
            sw += weight;
            sx += weight * x as f64;
            sy += weight * y as f64;
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if !seen[n] && img.pixels()[n] > threshold {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        centers.push((sx / sw, sy / sw));
    }
    if centers.is_empty() {
        return Err(CalibError::EmptyTarget(threshold));
    }
    centers.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    Ok(centers
        .into_iter()
        .map(|(x, y)| Point2::new(convert(x), convert(y)))
        .collect())
}

/// Orders detected centers to match [`TargetGrid::plane_points`].
///
/// Points are split into `rows` bands by `y` and each band is sorted by `x`.
/// This holds as long as the board is imaged roughly upright, with in-plane
/// rotation small enough that rows do not interleave.
pub fn order_as_grid<T: RealField + Copy>(
    points: &[Point2<T>],
    grid: &TargetGrid<T>,
) -> Result<Vec<Point2<T>>, CalibError> {
    if points.len() != grid.len() {
        return Err(CalibError::BlobCount {
            found: points.len(),
            expected: grid.len(),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal));
    for row in sorted.chunks_mut(grid.cols) {
        row.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
    }
    Ok(sorted)
}

/// [`extract_centroids`] followed by [`order_as_grid`].
pub fn extract_grid_centroids<T: RealField + Copy>(
    img: &Gray8Image,
    threshold: u8,
    grid: &TargetGrid<T>,
) -> Result<Vec<Point2<T>>, CalibError> {
    order_as_grid(&extract_centroids(img, threshold)?, grid)
}
