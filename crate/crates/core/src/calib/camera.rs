use nalgebra::{convert, Matrix2, Matrix3, Point2, Point3, RealField, Rotation3, Vector2, Vector3};

use super::CalibError;

/// Pinhole intrinsics in pixel units, zero skew.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: RealField + Copy> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Self {
        Self { fx, fy, cx, cy }
    }

    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, z, self.cx, z, self.fy, self.cy, z, z, o)
    }

    pub fn inverse_matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(
            o / self.fx,
            z,
            -self.cx / self.fx,
            z,
            o / self.fy,
            -self.cy / self.fy,
            z,
            z,
            o,
        )
    }

    pub fn to_normalized(&self, pixel: &Point2<T>) -> Vector2<T> {
        Vector2::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy)
    }

    pub fn to_pixel(&self, normalized: &Vector2<T>) -> Point2<T> {
        Point2::new(self.fx * normalized.x + self.cx, self.fy * normalized.y + self.cy)
    }
}

/// Radial (`k1..k3`) and tangential (`p1`, `p2`) lens distortion acting on
/// normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionCoeffs<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub p1: T,
    pub p2: T,
}

/// Iteration cap for [`DistortionCoeffs::undistort_normalized`].
pub const UNDISTORT_ITERATIONS: usize = 20;

impl<T: RealField + Copy> DistortionCoeffs<T> {
    pub fn zero() -> Self {
        Self {
            k1: T::zero(),
            k2: T::zero(),
            k3: T::zero(),
            p1: T::zero(),
            p2: T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|c| c.is_zero())
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.k1, self.k2, self.k3, self.p1, self.p2]
    }

    pub fn from_array(c: [T; 5]) -> Self {
        Self {
            k1: c[0],
            k2: c[1],
            k3: c[2],
            p1: c[3],
            p2: c[4],
        }
    }

    /// Distortion offset `distort(p) - p`.
    ///
    /// Exactly zero when all coefficients are zero or `p` is the origin.
    pub fn displacement(&self, p: &Vector2<T>) -> Vector2<T> {
        let (x, y) = (p.x, p.y);
        let two: T = convert(2.0);
        let r2 = x * x + y * y;
        let radial = r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        Vector2::new(
            x * radial + two * self.p1 * x * y + self.p2 * (r2 + two * x * x),
            y * radial + self.p1 * (r2 + two * y * y) + two * self.p2 * x * y,
        )
    }

    pub fn distort(&self, p: &Vector2<T>) -> Vector2<T> {
        p + self.displacement(p)
    }

    /// Jacobians of [`Self::distort`] with respect to the point and to
    /// `[k1, k2, k3, p1, p2]`.
    pub fn distort_jacobians(&self, p: &Vector2<T>) -> (Matrix2<T>, [Vector2<T>; 5]) {
        let (x, y) = (p.x, p.y);
        let (two, three, six): (T, T, T) = (convert(2.0), convert(3.0), convert(6.0));
        let r2 = x * x + y * y;
        let radial = T::one() + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
        let dradial = self.k1 + r2 * (two * self.k2 + three * self.k3 * r2);
        let dxdx = radial + two * x * x * dradial + two * self.p1 * y + six * self.p2 * x;
        let dxdy = two * x * y * dradial + two * self.p1 * x + two * self.p2 * y;
        let dydy = radial + two * y * y * dradial + six * self.p1 * y + two * self.p2 * x;
        let d_point = Matrix2::new(dxdx, dxdy, dxdy, dydy);
        let r4 = r2 * r2;
        let d_coeffs = [
            Vector2::new(x * r2, y * r2),
            Vector2::new(x * r4, y * r4),
            Vector2::new(x * r4 * r2, y * r4 * r2),
            Vector2::new(two * x * y, r2 + two * y * y),
            Vector2::new(r2 + two * x * x, two * x * y),
        ];
        (d_point, d_coeffs)
    }

    /// Inverts [`Self::distort`] by fixed-point iteration, stopping after
    /// [`UNDISTORT_ITERATIONS`] steps or once a step moves less than 1e-10.
    pub fn undistort_normalized(&self, distorted: &Vector2<T>) -> Vector2<T> {
        let tol: T = convert(1e-10);
        let mut p = *distorted;
        for _ in 0..UNDISTORT_ITERATIONS {
            let (x, y) = (p.x, p.y);
            let r2 = x * x + y * y;
            let radial = T::one() + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3));
            let tangential = self.displacement(&p) - p * (radial - T::one());
            let next = (distorted - tangential) / radial;
            let step = (next - p).norm();
            p = next;
            if step < tol {
                break;
            }
        }
        p
    }
}

/// Rigid world-to-camera transform `X_cam = R X + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose<T: RealField> {
    pub rotation: Rotation3<T>,
    pub translation: Vector3<T>,
}

impl<T: RealField + Copy> CameraPose<T> {
    pub fn new(rotation: Rotation3<T>, translation: Vector3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation3::identity(), Vector3::zeros())
    }

    pub fn transform(&self, p: &Point3<T>) -> Vector3<T> {
        self.rotation * p.coords + self.translation
    }

    /// Rotation as an axis-angle (Rodrigues) vector.
    pub fn rotation_vector(&self) -> Vector3<T> {
        self.rotation.scaled_axis()
    }
}

/// Projects a world point through pose, distortion and intrinsics.
pub fn project<T: RealField + Copy>(
    point: &Point3<T>,
    intrinsics: &CameraIntrinsics<T>,
    pose: &CameraPose<T>,
    distortion: &DistortionCoeffs<T>,
) -> Result<Point2<T>, CalibError> {
    let cam = pose.transform(point);
    if cam.z <= T::zero() {
        return Err(CalibError::BehindCamera(
            nalgebra::try_convert::<T, f64>(cam.z).unwrap_or(f64::NAN),
        ));
    }
    let normalized = Vector2::new(cam.x / cam.z, cam.y / cam.z);
    Ok(intrinsics.to_pixel(&distortion.distort(&normalized)))
}

/// Rectangular grid of point lights on the `Z = 0` plane.
///
/// Points are listed row-major: index `r * cols + c` sits at
/// `(c * spacing, r * spacing, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetGrid<T> {
    pub rows: usize,
    pub cols: usize,
    pub spacing: T,
}

impl<T: RealField + Copy> TargetGrid<T> {
    pub fn new(rows: usize, cols: usize, spacing: T) -> Self {
        Self { rows, cols, spacing }
    }

    /// The 8x8 LED board.
    pub fn led_board(spacing: T) -> Self {
        Self::new(8, 8, spacing)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane_points(&self) -> Vec<Point2<T>> {
        (0..self.rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| {
                    Point2::new(
                        self.spacing * convert::<f64, T>(c as f64),
                        self.spacing * convert::<f64, T>(r as f64),
                    )
                })
            })
            .collect()
    }

    pub fn world_points(&self) -> Vec<Point3<T>> {
        self.plane_points()
            .into_iter()
            .map(|p| Point3::new(p.x, p.y, T::zero()))
            .collect()
    }

    /// Center of the grid on the target plane.
    pub fn center(&self) -> Point3<T> {
        let half: T = convert(0.5);
        Point3::new(
            self.spacing * convert::<f64, T>((self.cols - 1) as f64) * half,
            self.spacing * convert::<f64, T>((self.rows - 1) as f64) * half,
            T::zero(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{reference_distortion, reference_intrinsics};

    /// Step-by-step scalar projection, written without nalgebra helpers.
    fn scalar_projection(p: [f64; 3], r: [[f64; 3]; 3], t: [f64; 3], k: [f64; 4], d: [f64; 5]) -> (f64, f64) {
        let xc = r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0];
        let yc = r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1];
        let zc = r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2];
        let x = xc / zc;
        let y = yc / zc;
        let r2 = x * x + y * y;
        let radial = 1.0 + d[0] * r2 + d[1] * r2 * r2 + d[2] * r2 * r2 * r2;
        let xd = x * radial + 2.0 * d[3] * x * y + d[4] * (r2 + 2.0 * x * x);
        let yd = y * radial + d[3] * (r2 + 2.0 * y * y) + 2.0 * d[4] * x * y;
        (k[0] * xd + k[2], k[1] * yd + k[3])
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let k = reference_intrinsics();
        let p = project(
            &Point3::new(0.0, 0.0, 1.0),
            &k,
            &CameraPose::identity(),
            &DistortionCoeffs::zero(),
        )
        .unwrap();
        assert_eq!((p.x, p.y), (501.484677, 378.459481));
        // distortion leaves the axis alone as well
        let p = project(&Point3::new(0.0, 0.0, 3.0), &k, &CameraPose::identity(), &reference_distortion()).unwrap();
        assert_eq!((p.x, p.y), (501.484677, 378.459481));
    }

    #[test]
    fn zero_distortion_is_pinhole() {
        let k = reference_intrinsics();
        let pose = CameraPose::new(
            Rotation3::from_euler_angles(0.1, -0.2, 0.3),
            Vector3::new(0.1, -0.05, 2.0),
        );
        for p in [Point3::new(0.3, 0.2, 0.0), Point3::new(-0.4, 0.1, 0.5)] {
            let got = project(&p, &k, &pose, &DistortionCoeffs::zero()).unwrap();
            let h = k.matrix() * pose.transform(&p);
            assert!((got.x - h.x / h.z).abs() < 1e-9);
            assert!((got.y - h.y / h.z).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_scalar_oracle_on_grid() {
        let k = reference_intrinsics();
        let d = reference_distortion();
        let pose = CameraPose::new(
            Rotation3::from_euler_angles(0.25, -0.15, 0.05),
            Vector3::new(-90.0, -80.0, 420.0),
        );
        let r = pose.rotation.matrix();
        let rr = [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ];
        let t = pose.translation;
        for w in TargetGrid::led_board(30.0).world_points() {
            let got = project(&w, &k, &pose, &d).unwrap();
            let (u, v) = scalar_projection(
                [w.x, w.y, w.z],
                rr,
                [t.x, t.y, t.z],
                [k.fx, k.fy, k.cx, k.cy],
                d.as_array(),
            );
            assert!((got.x - u).abs() < 1e-9 && (got.y - v).abs() < 1e-9);
        }
    }

    #[test]
    fn behind_camera_is_an_error() {
        let k = reference_intrinsics();
        let err = project(&Point3::new(0.0, 0.0, -1.0), &k, &CameraPose::identity(), &DistortionCoeffs::zero());
        assert!(matches!(err, Err(CalibError::BehindCamera(_))));
        let err = project(&Point3::new(1.0, 0.0, 0.0), &k, &CameraPose::identity(), &DistortionCoeffs::zero());
        assert!(matches!(err, Err(CalibError::BehindCamera(_))));
    }

    #[test]
    fn collinear_points_stay_collinear_without_distortion() {
        let k = reference_intrinsics();
        let pose = CameraPose::new(Rotation3::from_euler_angles(0.3, 0.2, -0.1), Vector3::new(0.0, 0.0, 5.0));
        let a = Point3::new(-1.0, 0.5, 0.3);
        let b = Point3::new(2.0, -0.7, 1.1);
        let img: Vec<_> = (0..10)
            .map(|i| {
                let s = i as f64 / 9.0;
                project(&(a + (b - a) * s), &k, &pose, &DistortionCoeffs::zero()).unwrap()
            })
            .collect();
        let dir = (img[9] - img[0]).normalize();
        for p in &img {
            let off = p - img[0];
            let dist = (off.x * dir.y - off.y * dir.x).abs();
            assert!(dist < 1e-9, "{dist}");
        }
    }

    #[test]
    fn distortion_jacobian_matches_finite_differences() {
        let d = reference_distortion();
        let p = Vector2::new(0.31, -0.22);
        let (jp, jc) = d.distort_jacobians(&p);
        let h = 1e-7;
        for axis in 0..2 {
            let mut e = Vector2::zeros();
            e[axis] = h;
            let fd = (d.distort(&(p + e)) - d.distort(&(p - e))) / (2.0 * h);
            assert!((fd - jp.column(axis)).norm() < 1e-8);
        }
        for (i, col) in jc.iter().enumerate() {
            let mut plus = d.as_array();
            let mut minus = d.as_array();
            plus[i] += h;
            minus[i] -= h;
            let fd = (DistortionCoeffs::from_array(plus).distort(&p) - DistortionCoeffs::from_array(minus).distort(&p)) / (2.0 * h);
            assert!((fd - col).norm() < 1e-8);
        }
    }

    #[test]
    fn undistort_inverts_reference_model_over_image() {
        // central 80% of a 1024x768 frame
        let k = reference_intrinsics();
        let d = reference_distortion();
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            for j in 0..=20 {
                let u = 102.4 + 819.2 * i as f64 / 20.0;
                let v = 76.8 + 614.4 * j as f64 / 20.0;
                let p = k.to_normalized(&Point2::new(u, v));
                let back = d.undistort_normalized(&d.distort(&p));
                worst = worst.max((back - p).amax());
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn undistort_inverts_strong_radial_terms() {
        for k1 in [-0.5, -0.25, 0.25, 0.5] {
            let d = DistortionCoeffs { k1, k2: 0.05, k3: 0.0, p1: 0.002, p2: -0.003 };
            for i in 0..=16 {
                for j in 0..=16 {
                    let p = Vector2::new(-0.4 + 0.05 * i as f64, -0.4 + 0.05 * j as f64);
                    let back = d.undistort_normalized(&d.distort(&p));
                    assert!((back - p).amax() < 1e-6, "k1 {k1} at {p:?}");
                }
            }
        }
    }

    #[test]
    fn grid_layout() {
        let g = TargetGrid::led_board(10.0);
        let pts = g.world_points();
        assert_eq!(pts.len(), 64);
        assert_eq!(pts[9], Point3::new(10.0, 10.0, 0.0));
        assert!(pts.iter().all(|p| p.z == 0.0));
        assert_eq!(g.center(), Point3::new(35.0, 35.0, 0.0));
    }

    #[test]
    fn f32_projection() {
        let k = CameraIntrinsics::<f32>::new(600.0, 600.0, 320.0, 240.0);
        let p = project(&Point3::new(0.0f32, 0.0, 2.0), &k, &CameraPose::identity(), &DistortionCoeffs::zero()).unwrap();
        assert_eq!((p.x, p.y), (320.0, 240.0));
    }
}
