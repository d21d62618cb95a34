use nalgebra::{convert, DMatrix, DVector, Matrix3, Point2, RealField, Vector3};

use super::lm::{minimize, LeastSquares, LmOptions};
use super::CalibError;

/// Projective map of the plane, stored with `h[(2, 2)] == 1` whenever that
/// entry is nonzero (unit Frobenius norm otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography<T: RealField> {
    matrix: Matrix3<T>,
}

impl<T: RealField + Copy> Homography<T> {
    pub fn from_matrix(m: Matrix3<T>) -> Self {
        let scale = m[(2, 2)];
        let matrix = if scale.abs() > T::default_epsilon() * m.norm() {
            m / scale
        } else {
            m / m.norm()
        };
        Self { matrix }
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.matrix
    }

    /// Maps a point, or `None` when it lands on the line at infinity.
    pub fn apply(&self, p: &Point2<T>) -> Option<Point2<T>> {
        let v = self.matrix * Vector3::new(p.x, p.y, T::one());
        if v.z.abs() <= T::default_epsilon() * v.norm() {
            return None;
        }
        Some(Point2::new(v.x / v.z, v.y / v.z))
    }

    /// Sum of squared distances between mapped `world` points and `image`.
    pub fn transfer_cost(&self, world: &[Point2<T>], image: &[Point2<T>]) -> Option<T> {
        let mut cost = T::zero();
        for (w, i) in world.iter().zip(image) {
            cost += (self.apply(w)? - i).norm_squared();
        }
        Some(cost)
    }
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn normalizer<T: RealField + Copy>(pts: &[Point2<T>]) -> Option<Matrix3<T>> {
    let n: T = convert(pts.len() as f64);
    let centroid = pts.iter().fold(nalgebra::Vector2::zeros(), |acc, p| acc + p.coords) / n;
    let mean_dist = pts.iter().fold(T::zero(), |acc, p| acc + (p.coords - centroid).norm()) / n;
    if mean_dist <= T::default_epsilon() {
        return None;
    }
    let s = T::sqrt(convert(2.0)) / mean_dist;
    let (z, o) = (T::zero(), T::one());
    Some(Matrix3::new(s, z, -s * centroid.x, z, s, -s * centroid.y, z, z, o))
}

fn transform<T: RealField + Copy>(m: &Matrix3<T>, pts: &[Point2<T>]) -> Vec<Point2<T>> {
    pts.iter()
        .map(|p| {
            let v = m * Vector3::new(p.x, p.y, T::one());
            Point2::new(v.x / v.z, v.y / v.z)
        })
        .collect()
}

fn check_inputs<T: nalgebra::Scalar>(world: &[Point2<T>], image: &[Point2<T>]) -> Result<(), CalibError> {
    if world.len() != image.len() {
        return Err(CalibError::LengthMismatch(world.len(), image.len()));
    }
    if world.len() < 4 {
        return Err(CalibError::NotEnoughPoints {
            needed: 4,
            got: world.len(),
        });
    }
    Ok(())
}

/// Direct linear transform estimate of `H` with `image ~ H * world`.
///
/// Both point sets are normalized first; the stacked two-rows-per-point
/// system is solved by its smallest right singular vector.
pub fn dlt_homography<T: RealField + Copy>(
    world: &[Point2<T>],
    image: &[Point2<T>],
) -> Result<Homography<T>, CalibError> {
    check_inputs(world, image)?;
    let tw = normalizer(world).ok_or(CalibError::DegenerateGeometry("world points coincide"))?;
    let ti = normalizer(image).ok_or(CalibError::DegenerateGeometry("image points coincide"))?;
    let wn = transform(&tw, world);
    let im = transform(&ti, image);

    // pad to at least 9 rows so the SVD yields the full right basis
    let rows = (2 * wn.len()).max(9);
    let mut a = DMatrix::<T>::zeros(rows, 9);
    for (k, (w, i)) in wn.iter().zip(&im).enumerate() {
        let (x, y, u, v) = (w.x, w.y, i.x, i.y);
        let o = T::one();
        let r0 = [-x, -y, -o, T::zero(), T::zero(), T::zero(), u * x, u * y, u];
        let r1 = [T::zero(), T::zero(), T::zero(), -x, -y, -o, v * x, v * y, v];
        for c in 0..9 {
            a[(2 * k, c)] = r0[c];
            a[(2 * k + 1, c)] = r1[c];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or(CalibError::DegenerateGeometry("svd did not converge"))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&p, &q| {
        svd.singular_values[p]
            .partial_cmp(&svd.singular_values[q])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let largest = svd.singular_values[order[8]];
    // a one-dimensional null space is required for a unique solution
    if svd.singular_values[order[1]] <= largest * T::default_epsilon().sqrt() {
        return Err(CalibError::DegenerateGeometry("correspondences do not fix a unique homography"));
    }
    let h = v_t.row(order[0]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let ti_inv = ti.try_inverse().ok_or(CalibError::DegenerateGeometry("normalizer not invertible"))?;
    let m = ti_inv * hn * tw;
    if m.determinant().abs() <= T::default_epsilon() * m.norm().powi(3) {
        return Err(CalibError::DegenerateGeometry("homography is singular"));
    }
    Ok(Homography::from_matrix(m))
}

/// Result of [`refine_homography`]; costs are sums of squared pixel distances.
#[derive(Debug, Clone, Copy)]
pub struct Refinement<T: RealField> {
    pub homography: Homography<T>,
    pub initial_cost: T,
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
}

struct TransferError<'a, T: nalgebra::Scalar> {
    world: &'a [Point2<T>],
    image: &'a [Point2<T>],
}

impl<T: RealField + Copy> LeastSquares<T> for TransferError<'_, T> {
    type State = Matrix3<T>;

    fn residuals(&self, h: &Matrix3<T>) -> Option<DVector<T>> {
        let mut r = DVector::zeros(2 * self.world.len());
        for (k, (w, i)) in self.world.iter().zip(self.image).enumerate() {
            let v = h * Vector3::new(w.x, w.y, T::one());
            if v.z.is_zero() {
                return None;
            }
            r[2 * k] = v.x / v.z - i.x;
            r[2 * k + 1] = v.y / v.z - i.y;
        }
        Some(r)
    }

    fn jacobian(&self, h: &Matrix3<T>) -> DMatrix<T> {
        let mut j = DMatrix::zeros(2 * self.world.len(), 9);
        for (k, w) in self.world.iter().enumerate() {
            let x = Vector3::new(w.x, w.y, T::one());
            let v = h * x;
            let inv_z = T::one() / v.z;
            let (u, vv) = (v.x * inv_z, v.y * inv_z);
            for c in 0..3 {
                j[(2 * k, c)] = x[c] * inv_z;
                j[(2 * k, 6 + c)] = -u * x[c] * inv_z;
                j[(2 * k + 1, 3 + c)] = x[c] * inv_z;
                j[(2 * k + 1, 6 + c)] = -vv * x[c] * inv_z;
            }
        }
        j
    }

    fn apply(&self, h: &Matrix3<T>, d: &DVector<T>) -> Matrix3<T> {
        let next = h + Matrix3::from_row_slice(d.as_slice());
        next / next.norm()
    }
}

/// Refines `initial` by minimizing the summed squared transfer error with
/// damped Gauss–Newton steps.
///
/// Runs in normalized coordinates, where the cost differs from the pixel cost
/// only by a constant factor. Stops when an accepted step gains less than
/// 1e-12 relative or after 100 steps. The returned cost is never above the
/// initial one.
pub fn refine_homography<T: RealField + Copy>(
    initial: &Homography<T>,
    world: &[Point2<T>],
    image: &[Point2<T>],
) -> Result<Refinement<T>, CalibError> {
    check_inputs(world, image)?;
    let initial_cost = initial.transfer_cost(world, image).ok_or(CalibError::NonFinite)?;
    if !initial_cost.is_finite() {
        return Err(CalibError::NonFinite);
    }
    let tw = normalizer(world).ok_or(CalibError::DegenerateGeometry("world points coincide"))?;
    let ti = normalizer(image).ok_or(CalibError::DegenerateGeometry("image points coincide"))?;
    let (Some(tw_inv), Some(ti_inv)) = (tw.try_inverse(), ti.try_inverse()) else {
        return Err(CalibError::DegenerateGeometry("normalizer not invertible"));
    };
    let wn = transform(&tw, world);
    let im = transform(&ti, image);
    let start = ti * initial.matrix() * tw_inv;
    let problem = TransferError { world: &wn, image: &im };
    let out = minimize(
        &problem,
        start / start.norm(),
        LmOptions {
            max_iterations: 100,
            relative_tolerance: convert(1e-12),
        },
    )
    .ok_or(CalibError::NonFinite)?;
    let refined = Homography::from_matrix(ti_inv * out.state * tw);
    let cost = refined.transfer_cost(world, image).ok_or(CalibError::NonFinite)?;
    if !cost.is_finite() {
        return Err(CalibError::NonFinite);
    }
    let (homography, cost) = if cost <= initial_cost {
        (refined, cost)
    } else {
        (*initial, initial_cost)
    };
    Ok(Refinement {
        homography,
        initial_cost,
        cost,
        iterations: out.iterations,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid() -> Vec<Point2<f64>> {
        (0..8)
            .flat_map(|r| (0..8).map(move |c| Point2::new(c as f64 * 30.0, r as f64 * 30.0)))
            .collect()
    }

    fn random_h(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        Matrix3::new(
            rng.random_range(1.5..2.5),
            rng.random_range(-0.3..0.3),
            rng.random_range(200.0..400.0),
            rng.random_range(-0.3..0.3),
            rng.random_range(1.5..2.5),
            rng.random_range(150.0..300.0),
            rng.random_range(-5e-4..5e-4),
            rng.random_range(-5e-4..5e-4),
            1.0,
        )
    }

    fn map_all(h: &Matrix3<f64>, pts: &[Point2<f64>]) -> Vec<Point2<f64>> {
        let h = Homography::from_matrix(*h);
        pts.iter().map(|p| h.apply(p).unwrap()).collect()
    }

    fn relative_error(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        let a = a / a.norm();
        let b = b / b.norm();
        (a - b).norm().min((a + b).norm())
    }

    #[test]
    fn identity_correspondences() {
        let w = grid();
        let h = dlt_homography(&w, &w).unwrap();
        assert!((h.matrix() - Matrix3::identity()).amax() < 1e-10);
    }

    #[test]
    fn recovers_known_homography() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let truth = random_h(&mut rng);
            let w = grid();
            let est = dlt_homography(&w, &map_all(&truth, &w)).unwrap();
            assert!(relative_error(est.matrix(), &truth) < 1e-8);
        }
    }

    #[test]
    fn four_points_reproduced_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = random_h(&mut rng);
        let w = vec![
            Point2::new(0.0, 0.0),
            Point2::new(100.0, 5.0),
            Point2::new(90.0, 120.0),
            Point2::new(-10.0, 80.0),
        ];
        let img = map_all(&truth, &w);
        let est = dlt_homography(&w, &img).unwrap();
        for (p, q) in w.iter().zip(&img) {
            assert!((est.apply(p).unwrap() - q).norm() < 1e-9);
        }
    }

    #[test]
    fn similarity_renormalization_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth = random_h(&mut rng);
        let w = grid();
        let normal = Normal::new(0.0, 0.3).unwrap();
        let img: Vec<_> = map_all(&truth, &w)
            .into_iter()
            .map(|p| p + nalgebra::Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let base = dlt_homography(&w, &img).unwrap();
        // rescale/rotate/translate the world points; the estimate must follow
        let (s, th) = (3.7f64, 0.4f64);
        let sim = Matrix3::new(
            s * th.cos(),
            -s * th.sin(),
            25.0,
            s * th.sin(),
            s * th.cos(),
            -40.0,
            0.0,
            0.0,
            1.0,
        );
        let w2 = transform(&sim, &w);
        let moved = dlt_homography(&w2, &img).unwrap();
        let expected = base.matrix() * sim.try_inverse().unwrap();
        assert!(relative_error(moved.matrix(), &expected) < 1e-8);
    }

    #[test]
    fn degenerate_inputs() {
        let w = grid();
        assert!(matches!(
            dlt_homography(&w[..3], &w[..3]),
            Err(CalibError::NotEnoughPoints { needed: 4, got: 3 })
        ));
        assert!(matches!(dlt_homography(&w, &w[..10]), Err(CalibError::LengthMismatch(64, 10))));
        let line: Vec<_> = (0..6).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(dlt_homography(&line, &line), Err(CalibError::DegenerateGeometry(_))));
        let collinear3 = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(matches!(
            dlt_homography(&collinear3, &collinear3),
            Err(CalibError::DegenerateGeometry(_))
        ));
        let same = vec![Point2::new(1.0, 1.0); 5];
        assert!(matches!(dlt_homography(&same, &same), Err(CalibError::DegenerateGeometry(_))));
    }

    #[test]
    fn refinement_keeps_noiseless_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = random_h(&mut rng);
        let w = grid();
        let img = map_all(&truth, &w);
        let h0 = dlt_homography(&w, &img).unwrap();
        let r = refine_homography(&h0, &w, &img).unwrap();
        assert!(r.cost < 1e-16, "{}", r.cost);
        assert!(relative_error(r.homography.matrix(), h0.matrix()) < 1e-9);
    }

    #[test]
    fn refinement_recovers_from_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let truth = random_h(&mut rng);
        let w = grid();
        let img = map_all(&truth, &w);
        for entry in [(0, 0), (0, 1), (1, 2), (2, 0), (2, 1)] {
            let mut m = Homography::from_matrix(truth).matrix;
            m[entry] += 1e-3;
            let r = refine_homography(&Homography::from_matrix(m), &w, &img).unwrap();
            assert!(r.initial_cost > 1e-6);
            assert!(r.cost < 1e-10, "entry {entry:?}: {}", r.cost);
        }
    }

    #[test]
    fn refinement_never_worse_than_dlt_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let normal = Normal::new(0.0, 0.5).unwrap();
        let w = grid();
        for _ in 0..100 {
            let truth = random_h(&mut rng);
            let img: Vec<_> = map_all(&truth, &w)
                .into_iter()
                .map(|p| p + nalgebra::Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect();
            let h0 = dlt_homography(&w, &img).unwrap();
            let r = refine_homography(&h0, &w, &img).unwrap();
            assert_eq!(r.initial_cost, h0.transfer_cost(&w, &img).unwrap());
            assert!(r.cost <= r.initial_cost);
        }
    }
}
