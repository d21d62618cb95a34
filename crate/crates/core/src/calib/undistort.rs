use nalgebra::{Point2, Vector2};

use crate::image::Gray8Image;

use super::{CameraIntrinsics, DistortionCoeffs};

/// Bilinear sample at `(x, y)`; `None` outside the pixel-center hull.
fn sample(img: &Gray8Image, x: f64, y: f64) -> Option<f64> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
        return None;
    }
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let p = |x: usize, y: usize| f64::from(img.get(x, y));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Removes lens distortion from `img`.
///
/// Every output pixel is taken to normalized coordinates, pushed through the
/// forward distortion model and sampled from the input bilinearly. Samples
/// falling outside the input are 0. The source position is formed as the
/// output position plus the distortion offset, so zero coefficients give an
/// exact copy.
pub fn undistort(img: &Gray8Image, intrinsics: &CameraIntrinsics<f64>, distortion: &DistortionCoeffs<f64>) -> Gray8Image {
    Gray8Image::from_fn(img.width(), img.height(), |u, v| {
        let pixel = Point2::new(u as f64, v as f64);
        let offset = distortion.displacement(&intrinsics.to_normalized(&pixel));
        let src = pixel + Vector2::new(intrinsics.fx * offset.x, intrinsics.fy * offset.y);
        sample(img, src.x, src.y).map_or(0, |s| (s + 0.5).floor().clamp(0.0, 255.0) as u8)
    })
    .expect("dimensions come from a valid image")
}
