//! Small dense Levenberg–Marquardt solver.

use nalgebra::{convert, Cholesky, DMatrix, DVector, RealField};

/// Nonlinear least-squares problem over an arbitrary state.
///
/// `apply` maps a parameter increment onto the state, which lets rotations be
/// updated multiplicatively instead of additively.
pub(crate) trait LeastSquares<T: RealField> {
    type State: Clone;

    /// Residual vector, or `None` when the state is infeasible.
    fn residuals(&self, state: &Self::State) -> Option<DVector<T>>;

    fn jacobian(&self, state: &Self::State) -> DMatrix<T>;

    fn apply(&self, state: &Self::State, delta: &DVector<T>) -> Self::State;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions<T> {
    /// Cap on accepted steps.
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub relative_tolerance: T,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome<S, T> {
    pub state: S,
    pub initial_cost: T,
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_REJECTIONS: usize = 12;

/// Minimizes the sum of squared residuals starting from `state`.
///
/// The cost never increases: only improving steps are accepted. Returns `None`
/// when the starting state is infeasible or has a non-finite cost.
pub(crate) fn minimize<T, P>(problem: &P, state: P::State, opts: LmOptions<T>) -> Option<LmOutcome<P::State, T>>
where
    T: RealField + Copy,
    P: LeastSquares<T>,
{
    let r = problem.residuals(&state)?;
    let initial_cost = r.norm_squared();
    if !initial_cost.is_finite() {
        return None;
    }
    let mut out = LmOutcome {
        state,
        initial_cost,
        cost: initial_cost,
        iterations: 0,
        converged: false,
    };
    let ten: T = convert(10.0);
    let mut lambda: T = convert(1e-3);
    let min_lambda: T = convert(1e-12);
    let mut residuals = r;
    while out.iterations < opts.max_iterations {
        if out.cost.is_zero() {
            out.converged = true;
            break;
        }
        let jac = problem.jacobian(&out.state);
        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * &residuals;
        let diag_floor = jtj.diagonal().max() * convert(1e-15);
        let mut accepted = false;
        for _ in 0..MAX_REJECTIONS {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(chol) = Cholesky::new(damped) else {
                lambda *= ten;
                continue;
            };
            let delta = -chol.solve(&gradient);
            let candidate = problem.apply(&out.state, &delta);
            match problem.residuals(&candidate) {
                Some(r) if r.norm_squared().is_finite() && r.norm_squared() < out.cost => {
                    let cost = r.norm_squared();
                    let decrease = (out.cost - cost) / out.cost;
                    out.state = candidate;
                    out.cost = cost;
                    residuals = r;
                    lambda = (lambda / ten).max(min_lambda);
                    accepted = true;
                    if decrease < opts.relative_tolerance {
                        out.converged = true;
                    }
                    break;
                }
                _ => lambda *= ten,
            }
        }
        if !accepted {
            // no descent direction left at working precision
            out.converged = true;
            break;
        }
        out.iterations += 1;
        if out.converged {
            break;
        }
    }
    Some(out)
}
