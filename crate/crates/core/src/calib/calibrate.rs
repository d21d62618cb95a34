use nalgebra::{convert, DMatrix, DVector, Matrix2x3, Matrix3, Point2, Point3, RealField, Rotation3, Vector2, Vector3};

use super::camera::{CameraIntrinsics, CameraPose, DistortionCoeffs};
use super::homography::{dlt_homography, refine_homography, Homography};
use super::lm::{minimize, LeastSquares, LmOptions};
use super::CalibError;

/// Correspondences for one image of the planar target. `world` holds target
/// plane coordinates (`Z = 0`), `image` the matching pixel positions.
#[derive(Debug, Clone, PartialEq)]
pub struct View<T: RealField> {
    pub world: Vec<Point2<T>>,
    pub image: Vec<Point2<T>>,
}

impl<T: RealField + Copy> View<T> {
    pub fn new(world: Vec<Point2<T>>, image: Vec<Point2<T>>) -> Self {
        Self { world, image }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CalibrateOptions<T> {
    pub max_iterations: usize,
    pub relative_tolerance: T,
}

impl<T: RealField> Default for CalibrateOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            relative_tolerance: convert(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration<T: RealField> {
    pub intrinsics: CameraIntrinsics<T>,
    pub distortion: DistortionCoeffs<T>,
    pub poses: Vec<CameraPose<T>>,
    /// Closed-form estimate the joint refinement started from.
    pub initial_intrinsics: CameraIntrinsics<T>,
    /// Root-mean-square reprojection distance per view, pixels.
    pub per_view_rms: Vec<T>,
    /// Mean reprojection distance over all points, pixels.
    pub mean_reprojection_error: T,
    /// Summed squared reprojection error before and after joint refinement.
    pub initial_cost: T,
    pub cost: T,
    pub converged: bool,
    pub iterations: usize,
}

/// `v_ij` row of the absolute-conic constraint system.
fn conic_row<T: RealField + Copy>(h: &Matrix3<T>, i: usize, j: usize) -> [T; 6] {
    let (a, b) = (h.column(i), h.column(j));
    [
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[1] * b[1],
        a[2] * b[0] + a[0] * b[2],
        a[2] * b[1] + a[1] * b[2],
        a[2] * b[2],
    ]
}

/// Closed-form zero-skew intrinsics from three or more plane homographies.
///
/// Each homography contributes the two orthogonality constraints on the image
/// of the absolute conic; a further row pins the skew term to zero. The
/// homographies are expressed in a normalized pixel frame `N` first and the
/// result mapped back, which keeps the linear system well conditioned.
pub fn intrinsics_from_homographies<T: RealField + Copy>(
    homographies: &[Homography<T>],
    pixel_normalizer: &Matrix3<T>,
) -> Result<CameraIntrinsics<T>, CalibError> {
    if homographies.len() < 3 {
        return Err(CalibError::InsufficientViews(homographies.len()));
    }
    let mut rows: Vec<[T; 6]> = Vec::new();
    let push = |rows: &mut Vec<[T; 6]>, r: [T; 6]| {
        let norm = r.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if norm > T::zero() {
            rows.push(r.map(|v| v / norm));
        }
    };
    for h in homographies {
        let hn = pixel_normalizer * h.matrix();
        let v11 = conic_row(&hn, 0, 0);
        let v22 = conic_row(&hn, 1, 1);
        push(&mut rows, conic_row(&hn, 0, 1));
        push(&mut rows, std::array::from_fn(|k| v11[k] - v22[k]));
    }
    let (z, o) = (T::zero(), T::one());
    rows.push([z, o, z, z, z, z]);
    let mut v = DMatrix::zeros(rows.len().max(6), 6);
    for (i, r) in rows.iter().enumerate() {
        for (c, &val) in r.iter().enumerate() {
            v[(i, c)] = val;
        }
    }
    let svd = v.svd(false, true);
    let v_t = svd.v_t.ok_or(CalibError::DegenerateGeometry("svd did not converge"))?;
    let (min_idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, T::max_value().unwrap_or(o)), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    let mut b: Vec<T> = v_t.row(min_idx).iter().copied().collect();
    if b[0] < z {
        b.iter_mut().for_each(|x| *x = -*x);
    }
    let (b11, b12, b22, b13, b23, b33) = (b[0], b[1], b[2], b[3], b[4], b[5]);
    let det = b11 * b22 - b12 * b12;
    if b11 <= z || det <= z {
        return Err(CalibError::DegenerateGeometry("views do not constrain the intrinsics"));
    }
    let v0 = (b12 * b13 - b11 * b23) / det;
    let lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    if lambda / b11 <= z {
        return Err(CalibError::DegenerateGeometry("views do not constrain the intrinsics"));
    }
    let alpha = (lambda / b11).sqrt();
    let beta = (lambda * b11 / det).sqrt();
    let u0 = -b13 * alpha * alpha / lambda;
    let k_norm = Matrix3::new(alpha, z, u0, z, beta, v0, z, z, o);
    let k = pixel_normalizer
        .try_inverse()
        .ok_or(CalibError::DegenerateGeometry("pixel normalizer not invertible"))?
        * k_norm;
    Ok(CameraIntrinsics::new(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)]))
}

/// Focal lengths from plane homographies with the principal point held at
/// `(cx, cy)`.
///
/// Less general than [`intrinsics_from_homographies`] but only two unknowns
/// remain, which survives noisy or strongly distorted views where the full
/// conic estimate loses positive definiteness.
pub fn focal_lengths_from_homographies<T: RealField + Copy>(
    homographies: &[Homography<T>],
    cx: T,
    cy: T,
) -> Result<CameraIntrinsics<T>, CalibError> {
    if homographies.is_empty() {
        return Err(CalibError::InsufficientViews(0));
    }
    let (z, o) = (T::zero(), T::one());
    let shift = Matrix3::new(o, z, -cx, z, o, -cy, z, z, o);
    let mut a = DMatrix::zeros(2 * homographies.len(), 2);
    let mut rhs = DVector::zeros(2 * homographies.len());
    for (i, h) in homographies.iter().enumerate() {
        let m = shift * h.matrix();
        let (h1, h2) = (m.column(0), m.column(1));
        let rows = [
            [h1[0] * h2[0], h1[1] * h2[1], -h1[2] * h2[2]],
            [
                h1[0] * h1[0] - h2[0] * h2[0],
                h1[1] * h1[1] - h2[1] * h2[1],
                h2[2] * h2[2] - h1[2] * h1[2],
            ],
        ];
        for (k, r) in rows.iter().enumerate() {
            let norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
            if norm > z {
                a[(2 * i + k, 0)] = r[0] / norm;
                a[(2 * i + k, 1)] = r[1] / norm;
                rhs[2 * i + k] = r[2] / norm;
            }
        }
    }
    let inv_sq = a
        .svd(true, true)
        .solve(&rhs, T::default_epsilon())
        .map_err(|_| CalibError::DegenerateGeometry("views do not constrain the focal lengths"))?;
    if inv_sq[0] <= z || inv_sq[1] <= z {
        return Err(CalibError::DegenerateGeometry("views do not constrain the focal lengths"));
    }
    Ok(CameraIntrinsics::new(o / inv_sq[0].sqrt(), o / inv_sq[1].sqrt(), cx, cy))
}

/// Extrinsics of a plane view from its homography and the intrinsics, with
/// the rotation projected onto the nearest orthonormal matrix.
pub fn pose_from_homography<T: RealField + Copy>(
    intrinsics: &CameraIntrinsics<T>,
    homography: &Homography<T>,
) -> Result<CameraPose<T>, CalibError> {
    let a = intrinsics.inverse_matrix() * homography.matrix();
    let norm = a.column(0).norm();
    if norm.is_zero() {
        return Err(CalibError::DegenerateGeometry("homography has a null column"));
    }
    let mut scale = T::one() / norm;
    if a[(2, 2)] * scale < T::zero() {
        // the target must sit in front of the camera
        scale = -scale;
    }
    let r1: Vector3<T> = a.column(0) * scale;
    let r2: Vector3<T> = a.column(1) * scale;
    let t: Vector3<T> = a.column(2) * scale;
    let r3 = r1.cross(&r2);
    let approx = Matrix3::from_columns(&[r1, r2, r3]);
    let svd = approx.svd(true, true);
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(CalibError::DegenerateGeometry("svd did not converge"));
    };
    if (u * v_t).determinant() < T::zero() {
        let flipped = -u.column(2);
        u.set_column(2, &flipped);
    }
    Ok(CameraPose::new(Rotation3::from_matrix_unchecked(u * v_t), t))
}

#[derive(Clone)]
struct State<T: RealField> {
    intrinsics: CameraIntrinsics<T>,
    distortion: DistortionCoeffs<T>,
    poses: Vec<CameraPose<T>>,
}

struct Reprojection<'a, T: RealField> {
    views: &'a [View<T>],
    points: usize,
}

const CAMERA_PARAMS: usize = 9;

impl<T: RealField + Copy> Reprojection<'_, T> {
    /// Pixel projection of a plane point plus its Jacobians with respect to
    /// the 9 camera parameters and the 6 pose parameters (rotation increment,
    /// translation).
    fn project_with_jacobian(
        state: &State<T>,
        pose: &CameraPose<T>,
        w: &Point2<T>,
    ) -> Option<(Vector2<T>, nalgebra::SMatrix<T, 2, 9>, nalgebra::SMatrix<T, 2, 6>)> {
        let rotated = pose.rotation * Vector3::new(w.x, w.y, T::zero());
        let cam = rotated + pose.translation;
        if cam.z <= T::zero() {
            return None;
        }
        let inv_z = T::one() / cam.z;
        let n = Vector2::new(cam.x * inv_z, cam.y * inv_z);
        let k = &state.intrinsics;
        let (jp, jc) = state.distortion.distort_jacobians(&n);
        let d = state.distortion.distort(&n);
        let pixel = Vector2::new(k.fx * d.x + k.cx, k.fy * d.y + k.cy);

        let mut jcam = nalgebra::SMatrix::<T, 2, 9>::zeros();
        jcam[(0, 0)] = d.x;
        jcam[(1, 1)] = d.y;
        jcam[(0, 2)] = T::one();
        jcam[(1, 3)] = T::one();
        for (i, col) in jc.iter().enumerate() {
            jcam[(0, 4 + i)] = k.fx * col.x;
            jcam[(1, 4 + i)] = k.fy * col.y;
        }

        let dn_dcam = Matrix2x3::new(
            inv_z,
            T::zero(),
            -n.x * inv_z,
            T::zero(),
            inv_z,
            -n.y * inv_z,
        );
        let scale = nalgebra::Matrix2::new(k.fx, T::zero(), T::zero(), k.fy);
        let dpix_dcam = scale * jp * dn_dcam;
        let mut jpose = nalgebra::SMatrix::<T, 2, 6>::zeros();
        // d(exp(w) R X)/dw at w = 0 is -[R X]x
        let dcam_drot = -rotated.cross_matrix();
        jpose.fixed_view_mut::<2, 3>(0, 0).copy_from(&(dpix_dcam * dcam_drot));
        jpose.fixed_view_mut::<2, 3>(0, 3).copy_from(&dpix_dcam);
        Some((pixel, jcam, jpose))
    }
}

impl<T: RealField + Copy> LeastSquares<T> for Reprojection<'_, T> {
    type State = State<T>;

    fn residuals(&self, state: &State<T>) -> Option<DVector<T>> {
        let mut r = DVector::zeros(2 * self.points);
        let mut row = 0;
        for (view, pose) in self.views.iter().zip(&state.poses) {
            for (w, i) in view.world.iter().zip(&view.image) {
                let p = project(state, pose, w)?;
                r[row] = p.x - i.x;
                r[row + 1] = p.y - i.y;
                row += 2;
            }
        }
        Some(r)
    }

    fn jacobian(&self, state: &State<T>) -> DMatrix<T> {
        let cols = CAMERA_PARAMS + 6 * self.views.len();
        let mut j = DMatrix::zeros(2 * self.points, cols);
        let mut row = 0;
        for (v, (view, pose)) in self.views.iter().zip(&state.poses).enumerate() {
            for w in &view.world {
                if let Some((_, jcam, jpose)) = Self::project_with_jacobian(state, pose, w) {
                    j.view_mut((row, 0), (2, CAMERA_PARAMS)).copy_from(&jcam);
                    j.view_mut((row, CAMERA_PARAMS + 6 * v), (2, 6)).copy_from(&jpose);
                }
                row += 2;
            }
        }
        j
    }

    fn apply(&self, state: &State<T>, d: &DVector<T>) -> State<T> {
        let k = &state.intrinsics;
        let intrinsics = CameraIntrinsics::new(k.fx + d[0], k.fy + d[1], k.cx + d[2], k.cy + d[3]);
        let c = state.distortion.as_array();
        let distortion = DistortionCoeffs::from_array(std::array::from_fn(|i| c[i] + d[4 + i]));
        let poses = state
            .poses
            .iter()
            .enumerate()
            .map(|(v, pose)| {
                let o = CAMERA_PARAMS + 6 * v;
                let rot = Rotation3::new(Vector3::new(d[o], d[o + 1], d[o + 2]));
                let mut rotation = rot * pose.rotation;
                rotation.renormalize();
                CameraPose::new(rotation, pose.translation + Vector3::new(d[o + 3], d[o + 4], d[o + 5]))
            })
            .collect();
        State {
            intrinsics,
            distortion,
            poses,
        }
    }
}

fn project<T: RealField + Copy>(state: &State<T>, pose: &CameraPose<T>, w: &Point2<T>) -> Option<Point2<T>> {
    super::camera::project(
        &Point3::new(w.x, w.y, T::zero()),
        &state.intrinsics,
        pose,
        &state.distortion,
    )
    .ok()
}

/// Hartley-style similarity over every image point of every view.
fn pixel_normalizer<T: RealField + Copy>(views: &[View<T>]) -> Matrix3<T> {
    let all: Vec<&Point2<T>> = views.iter().flat_map(|v| &v.image).collect();
    let n: T = convert(all.len() as f64);
    let c = all.iter().fold(Vector2::zeros(), |acc, p| acc + p.coords) / n;
    let spread = all.iter().fold(T::zero(), |acc, p| acc + (p.coords - c).norm()) / n;
    let s = if spread > T::zero() { T::one() / spread } else { T::one() };
    let z = T::zero();
    Matrix3::new(s, z, -s * c.x, z, s, -s * c.y, z, z, T::one())
}

/// Starting point for the joint refinement.
///
/// The closed-form estimate is exact for an ideal pinhole, but strong lens
/// distortion bends the homographies enough that it can fail or land far off.
/// So a few candidates are scored on the undistorted reprojection cost: the
/// closed form, focal lengths with the principal point at the middle of the
/// observations, and a log-spaced sweep of square-pixel focal lengths.
fn initial_state<T: RealField + Copy>(problem: &Reprojection<'_, T>, homographies: &[Homography<T>]) -> Option<State<T>> {
    let views = problem.views;
    let (lo, hi) = views.iter().flat_map(|v| &v.image).fold(
        (Vector2::repeat(T::max_value()?), Vector2::repeat(T::min_value()?)),
        |(lo, hi), p| (lo.inf(&p.coords), hi.sup(&p.coords)),
    );
    let mid = (lo + hi) * convert::<f64, T>(0.5);
    let extent = (hi - lo).max();

    let mut candidates = Vec::new();
    candidates.extend(intrinsics_from_homographies(homographies, &pixel_normalizer(views)).ok());
    candidates.extend(focal_lengths_from_homographies(homographies, mid.x, mid.y).ok());
    for i in 0..=24 {
        // 0.25x .. 4x the spread of the observations
        let f = extent * convert::<f64, T>(0.25 * 16f64.powf(f64::from(i) / 24.0));
        candidates.push(CameraIntrinsics::new(f, f, mid.x, mid.y));
    }

    let mut best: Option<(T, State<T>)> = None;
    for intrinsics in candidates {
        if !(intrinsics.fx > T::zero() && intrinsics.fy > T::zero()) {
            continue;
        }
        let Ok(poses) = homographies
            .iter()
            .map(|h| pose_from_homography(&intrinsics, h))
            .collect::<Result<Vec<_>, _>>()
        else {
            continue;
        };
        let state = State {
            intrinsics,
            distortion: DistortionCoeffs::zero(),
            poses,
        };
        let Some(cost) = problem.residuals(&state).map(|r| r.norm_squared()) else {
            continue;
        };
        if cost.is_finite() && best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, state));
        }
    }
    best.map(|(_, s)| s)
}

pub fn calibrate<T: RealField + Copy>(views: &[View<T>]) -> Result<Calibration<T>, CalibError> {
    calibrate_with(views, CalibrateOptions::default())
}

/// Full planar calibration: per-view homographies, closed-form intrinsics and
/// poses, then joint refinement of intrinsics, distortion (starting at zero)
/// and poses on the summed squared reprojection error.
///
/// Hitting the iteration cap is not an error: the best parameters found are
/// returned with `converged == false`.
pub fn calibrate_with<T: RealField + Copy>(
    views: &[View<T>],
    options: CalibrateOptions<T>,
) -> Result<Calibration<T>, CalibError> {
    if views.len() < 3 {
        return Err(CalibError::InsufficientViews(views.len()));
    }
    let mut homographies = Vec::with_capacity(views.len());
    for view in views {
        let h0 = dlt_homography(&view.world, &view.image)?;
        homographies.push(refine_homography(&h0, &view.world, &view.image)?.homography);
    }
    let problem = Reprojection {
        views,
        points: views.iter().map(|v| v.world.len()).sum(),
    };
    let start = initial_state(&problem, &homographies).ok_or(CalibError::DegenerateGeometry("no usable starting camera"))?;
    let initial_intrinsics = start.intrinsics;
    let out = minimize(
        &problem,
        start,
        LmOptions {
            max_iterations: options.max_iterations,
            relative_tolerance: options.relative_tolerance,
        },
    )
    .ok_or(CalibError::NonFinite)?;

    let state = out.state;
    let mut per_view_rms = Vec::with_capacity(views.len());
    let mut total = T::zero();
    let mut count = 0usize;
    for (view, pose) in views.iter().zip(&state.poses) {
        let mut sq = T::zero();
        for (w, i) in view.world.iter().zip(&view.image) {
            let p = project(&state, pose, w).ok_or(CalibError::NonFinite)?;
            let e = (p - i).norm();
            sq += e * e;
            total += e;
            count += 1;
        }
        per_view_rms.push((sq / convert(view.world.len() as f64)).sqrt());
    }
    Ok(Calibration {
        intrinsics: state.intrinsics,
        distortion: state.distortion,
        poses: state.poses,
        initial_intrinsics,
        per_view_rms,
        mean_reprojection_error: total / convert(count as f64),
        initial_cost: out.initial_cost,
        cost: out.cost,
        converged: out.converged,
        iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_poses, reference_distortion, reference_intrinsics, synthetic_views, PoseSampler};
    use crate::calib::TargetGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = reference_distortion();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let poses = random_poses(&mut rng, &k, &d, &grid, 3, &PoseSampler::default());
        let views = synthetic_views(&k, &d, &poses, &grid);
        let problem = Reprojection {
            views: &views,
            points: 3 * grid.len(),
        };
        let state = State {
            intrinsics: k,
            distortion: d,
            poses,
        };
        let j = problem.jacobian(&state);
        let h = 1e-6;
        for c in 0..j.ncols() {
            let mut e = DVector::zeros(j.ncols());
            e[c] = h;
            let plus = problem.residuals(&problem.apply(&state, &e)).unwrap();
            e[c] = -h;
            let minus = problem.residuals(&problem.apply(&state, &e)).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            let err = (fd - j.column(c)).amax();
            let scale = j.column(c).amax().max(1.0);
            assert!(err / scale < 1e-5, "column {c}: {err}");
        }
    }

    #[test]
    fn closed_form_is_exact_without_distortion() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = DistortionCoeffs::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let poses = random_poses(&mut rng, &k, &d, &grid, 4, &PoseSampler::default());
        let views = synthetic_views(&k, &d, &poses, &grid);
        let hs: Vec<_> = views
            .iter()
            .map(|v| dlt_homography(&v.world, &v.image).unwrap())
            .collect();
        let est = intrinsics_from_homographies(&hs, &pixel_normalizer(&views)).unwrap();
        assert!(rel(est.fx, k.fx) < 1e-6 && rel(est.fy, k.fy) < 1e-6);
        assert!(rel(est.cx, k.cx) < 1e-6 && rel(est.cy, k.cy) < 1e-6);
        let pose = pose_from_homography(&est, &hs[0]).unwrap();
        assert!((pose.rotation.matrix() - poses[0].rotation.matrix()).amax() < 1e-6);
        let r = pose.rotation.matrix();
        assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-9);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn focal_lengths_with_known_principal_point() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = DistortionCoeffs::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let poses = random_poses(&mut rng, &k, &d, &grid, 3, &PoseSampler::default());
        let hs: Vec<_> = synthetic_views(&k, &d, &poses, &grid)
            .iter()
            .map(|v| dlt_homography(&v.world, &v.image).unwrap())
            .collect();
        let est = focal_lengths_from_homographies(&hs, k.cx, k.cy).unwrap();
        assert!(rel(est.fx, k.fx) < 1e-6 && rel(est.fy, k.fy) < 1e-6, "{est:?}");
    }

    #[test]
    fn zero_distortion_camera_recovered() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = DistortionCoeffs::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let poses = random_poses(&mut rng, &k, &d, &grid, 5, &PoseSampler::default());
        let cal = calibrate(&synthetic_views(&k, &d, &poses, &grid)).unwrap();
        for c in cal.distortion.as_array() {
            assert!(c.abs() < 1e-3, "{:?}", cal.distortion);
        }
        assert!(cal.mean_reprojection_error < 1e-6);
    }

    #[test]
    fn reference_camera_recovered() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = reference_distortion();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let poses = random_poses(&mut rng, &k, &d, &grid, 5, &PoseSampler::default());
        let cal = calibrate(&synthetic_views(&k, &d, &poses, &grid)).unwrap();
        let e = cal.intrinsics;
        assert!(rel(e.fx, k.fx) < 0.01 && rel(e.fy, k.fy) < 0.01, "{e:?}");
        assert!(rel(e.cx, k.cx) < 0.01 && rel(e.cy, k.cy) < 0.01, "{e:?}");
        assert!(rel(cal.distortion.k1, d.k1) < 0.05, "{:?}", cal.distortion);
        assert!(cal.mean_reprojection_error < 1e-6, "{}", cal.mean_reprojection_error);
        assert!(cal.per_view_rms.iter().all(|&r| r < 1e-6));
    }

    #[test]
    fn noisy_centroids_keep_reprojection_small() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = reference_distortion();
        let normal = Normal::new(0.0, 0.1).unwrap();
        for trial in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + trial);
            let poses = random_poses(&mut rng, &k, &d, &grid, 5, &PoseSampler::default());
            let mut views = synthetic_views(&k, &d, &poses, &grid);
            for v in &mut views {
                for p in &mut v.image {
                    p.x += normal.sample(&mut rng);
                    p.y += normal.sample(&mut rng);
                }
            }
            let cal = calibrate(&views).unwrap();
            assert!(cal.mean_reprojection_error < 0.3, "trial {trial}: {}", cal.mean_reprojection_error);
        }
    }

    #[test]
    fn too_few_views() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = DistortionCoeffs::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let poses = random_poses(&mut rng, &k, &d, &grid, 2, &PoseSampler::default());
        let views = synthetic_views(&k, &d, &poses, &grid);
        assert!(matches!(calibrate(&views), Err(CalibError::InsufficientViews(2))));
    }

    #[test]
    fn iteration_cap_reports_best_so_far() {
        let grid = TargetGrid::led_board(30.0);
        let k = reference_intrinsics();
        let d = reference_distortion();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let poses = random_poses(&mut rng, &k, &d, &grid, 4, &PoseSampler::default());
        let views = synthetic_views(&k, &d, &poses, &grid);
        let cal = calibrate_with(
            &views,
            CalibrateOptions {
                max_iterations: 1,
                relative_tolerance: 1e-10,
            },
        )
        .unwrap();
        assert!(!cal.converged);
        assert_eq!(cal.iterations, 1);
    }
}
