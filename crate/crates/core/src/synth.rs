//! Deterministic synthetic data: a reference camera, target poses, rendered
//! LED views, a distorted straight line and Gaussian-cluster feature sets.

use nalgebra::{Point2, Rotation3, Unit, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::calib::{project, CalibError, CameraIntrinsics, CameraPose, DistortionCoeffs, TargetGrid, View};
use crate::classify::{Condition, FeatureRecord, CLASSES, FEATURE_DIM};
use crate::image::Gray8Image;

pub const REFERENCE_WIDTH: usize = 1024;
pub const REFERENCE_HEIGHT: usize = 768;

pub fn reference_intrinsics() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(612.383958, 611.2666744, 501.484677, 378.459481)
}

pub fn reference_distortion() -> DistortionCoeffs<f64> {
    DistortionCoeffs {
        k1: -0.3439249,
        k2: 0.1697238,
        k3: -0.0360944,
        p1: 0.00174822,
        p2: 0.00352084,
    }
}

/// Ranges random target poses are drawn from.
#[derive(Debug, Clone)]
pub struct PoseSampler {
    pub width: usize,
    pub height: usize,
    /// Fraction of the image width the board spans when seen head on.
    pub fill: (f64, f64),
    /// Out-of-plane tilt in degrees, about a random axis in the target plane.
    pub tilt_degrees: (f64, f64),
    /// Largest in-plane roll in degrees.
    pub roll_degrees: f64,
    /// Minimum distance of every projected point from the image border.
    pub margin: f64,
}

impl Default for PoseSampler {
    fn default() -> Self {
        Self {
            width: REFERENCE_WIDTH,
            height: REFERENCE_HEIGHT,
            fill: (0.45, 0.7),
            tilt_degrees: (10.0, 35.0),
            roll_degrees: 5.0,
            margin: 12.0,
        }
    }
}

/// Rows of the projected grid occupy disjoint vertical bands, so sorting by
/// `y` recovers them.
fn rows_separable(points: &[Point2<f64>], cols: usize) -> bool {
    let rows: Vec<(f64, f64)> = points
        .chunks(cols)
        .map(|r| {
            r.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)))
        })
        .collect();
    rows.windows(2).all(|w| w[0].1 < w[1].0)
}

/// Draws `count` poses under which the whole grid is visible inside the
/// sampler's margins and the rows stay separable by height.
pub fn random_poses<R: Rng + ?Sized>(
    rng: &mut R,
    intrinsics: &CameraIntrinsics<f64>,
    distortion: &DistortionCoeffs<f64>,
    grid: &TargetGrid<f64>,
    count: usize,
    sampler: &PoseSampler,
) -> Vec<CameraPose<f64>> {
    let board = grid.spacing * (grid.cols.max(grid.rows) - 1) as f64;
    let center = grid.center();
    let mut poses = Vec::with_capacity(count);
    while poses.len() < count {
        let fill = rng.random_range(sampler.fill.0..=sampler.fill.1);
        let distance = intrinsics.fx * board / (fill * sampler.width as f64);
        let axis_angle = rng.random_range(0.0..std::f64::consts::TAU);
        let tilt = rng.random_range(sampler.tilt_degrees.0..=sampler.tilt_degrees.1).to_radians();
        let roll = rng.random_range(-sampler.roll_degrees..=sampler.roll_degrees).to_radians();
        let axis = Unit::new_normalize(Vector3::new(axis_angle.cos(), axis_angle.sin(), 0.0));
        let rotation = Rotation3::from_axis_angle(&Vector3::z_axis(), roll) * Rotation3::from_axis_angle(&axis, tilt);
        let lateral = 0.25 * distance;
        let offset = Vector3::new(
            rng.random_range(-lateral..=lateral),
            rng.random_range(-lateral..=lateral),
            distance,
        );
        let pose = CameraPose::new(rotation, offset - rotation * center.coords);
        let projected: Result<Vec<_>, _> = grid
            .world_points()
            .iter()
            .map(|p| project(p, intrinsics, &pose, distortion))
            .collect();
        let Ok(projected) = projected else { continue };
        let m = sampler.margin;
        let inside = projected
            .iter()
            .all(|p| p.x >= m && p.y >= m && p.x <= sampler.width as f64 - 1.0 - m && p.y <= sampler.height as f64 - 1.0 - m);
        if inside && rows_separable(&projected, grid.cols) {
            poses.push(pose);
        }
    }
    poses
}

/// Exact (noiseless) correspondences for each pose.
pub fn synthetic_views(
    intrinsics: &CameraIntrinsics<f64>,
    distortion: &DistortionCoeffs<f64>,
    poses: &[CameraPose<f64>],
    grid: &TargetGrid<f64>,
) -> Vec<View<f64>> {
    poses
        .iter()
        .map(|pose| {
            let image = grid
                .world_points()
                .iter()
                .map(|p| project(p, intrinsics, pose, distortion).expect("sampled poses keep the target in front"))
                .collect();
            View::new(grid.plane_points(), image)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct BlobStyle {
    /// Gaussian standard deviation in pixels.
    pub sigma: f64,
    pub peak: f64,
    pub background: f64,
}

impl Default for BlobStyle {
    fn default() -> Self {
        Self {
            sigma: 1.6,
            peak: 240.0,
            background: 4.0,
        }
    }
}

/// Renders the LED board as isotropic Gaussian spots centred on the exact
/// projections of the LEDs.
pub fn render_led_view(
    intrinsics: &CameraIntrinsics<f64>,
    distortion: &DistortionCoeffs<f64>,
    pose: &CameraPose<f64>,
    grid: &TargetGrid<f64>,
    width: usize,
    height: usize,
    style: &BlobStyle,
) -> Result<Gray8Image, CalibError> {
    let mut acc = vec![style.background; width * height];
    let radius = (4.0 * style.sigma).ceil() as isize;
    for p in grid.world_points() {
        let c = project(&p, intrinsics, pose, distortion)?;
        let (cx, cy) = (c.x.round() as isize, c.y.round() as isize);
        for y in cy - radius..=cy + radius {
            for x in cx - radius..=cx + radius {
                if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
                    continue;
                }
                let d2 = (x as f64 - c.x).powi(2) + (y as f64 - c.y).powi(2);
                acc[y as usize * width + x as usize] += style.peak * (-d2 / (2.0 * style.sigma * style.sigma)).exp();
            }
        }
    }
    let pixels = acc.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    Ok(Gray8Image::new(width, height, pixels).expect("positive dimensions"))
}

/// A horizontal line `offset` pixels above the principal point, as the
/// distorting lens would image it. The line has a Gaussian cross-section of
/// 1.5 px.
pub fn bulged_line_image(
    intrinsics: &CameraIntrinsics<f64>,
    distortion: &DistortionCoeffs<f64>,
    width: usize,
    height: usize,
    offset: f64,
) -> Gray8Image {
    let line_y = intrinsics.cy - offset;
    Gray8Image::from_fn(width, height, |u, v| {
        let seen = intrinsics.to_normalized(&Point2::new(u as f64, v as f64));
        let ideal = intrinsics.to_pixel(&distortion.undistort_normalized(&seen));
        let dy = ideal.y - line_y;
        (240.0 * (-dy * dy / (2.0 * 1.5 * 1.5)).exp()).round() as u8
    })
    .expect("positive dimensions")
}

/// Straightness of a bright, roughly horizontal line: in every column of
/// `columns` the line's vertical position is the intensity-weighted mean row
/// within `rows`; returns the largest distance of those positions from their
/// least-squares line. `None` when fewer than two columns see the line.
pub fn line_straightness(
    img: &Gray8Image,
    columns: std::ops::Range<usize>,
    rows: std::ops::Range<usize>,
) -> Option<f64> {
    let samples: Vec<(f64, f64)> = columns
        .filter_map(|x| {
            let (mut w, mut wy) = (0.0, 0.0);
            for y in rows.clone() {
                let v = f64::from(img.get(x, y));
                if v > 16.0 {
                    w += v;
                    wy += v * y as f64;
                }
            }
            (w > 0.0).then(|| (x as f64, wy / w))
        })
        .collect();
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = samples
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    let worst = samples
        .iter()
        .map(|(x, y)| (y - my - slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    Some(worst)
}

/// Shape of a synthetic feature set.
#[derive(Debug, Clone)]
pub struct FeatureFixture {
    pub dim: usize,
    pub classes: usize,
    pub per_class: usize,
    /// Height of each class's mean features.
    pub separation: f64,
    pub noise: f64,
}

impl Default for FeatureFixture {
    fn default() -> Self {
        Self {
            dim: FEATURE_DIM,
            classes: CLASSES,
            per_class: 500,
            separation: 1.0,
            noise: 0.1,
        }
    }
}

/// Gaussian clusters: class `c` has mean `separation` on every feature `d`
/// with `d % classes == c` and 0 elsewhere. Condition tags cycle through
/// [`Condition::ALL`].
pub fn gaussian_features<R: Rng + ?Sized>(rng: &mut R, fixture: &FeatureFixture) -> Vec<FeatureRecord<f64>> {
    let noise = Normal::new(0.0, fixture.noise).expect("finite noise level");
    let mut out = Vec::with_capacity(fixture.classes * fixture.per_class);
    for i in 0..fixture.per_class {
        for label in 0..fixture.classes {
            let features = (0..fixture.dim)
                .map(|d| {
                    let mean = if d % fixture.classes == label { fixture.separation } else { 0.0 };
                    mean + noise.sample(rng)
                })
                .collect();
            let condition = Condition::ALL[(i * fixture.classes + label) % Condition::ALL.len()];
            out.push(FeatureRecord::new(features, label, condition).expect("finite features"));
        }
    }
    out
}
