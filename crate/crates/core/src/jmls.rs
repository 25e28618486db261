//! Optimal control of the scalar two-mode jump system `x' = A x + l B u + w`
//! with an i.i.d. Bernoulli(p) mode `l`.
//!
//! The channel state is observed before the control is chosen, so the
//! cost-to-go is `P(l) x^2 + const` and the coefficients satisfy the coupled
//! recursion
//!
//! ```text
//! Pbar = p P1 + (1 - p) P0
//! P1   = Q + A^2 Pbar - (A B Pbar)^2 / (R + B^2 Pbar)
//! P0   = Q + A^2 Pbar
//! ```
//!
//! with gains `K1 = -A B Pbar / (R + B^2 Pbar)`, `K0 = 0` and average cost
//! `J = sigma_w^2 Pbar`. [`solve_jmls`] runs value iteration from
//! `P0 = P1 = Q`.

use crate::{CandidateTheta, CostWeights, Error, Result};

/// Any value coefficient above this marks the candidate as unstabilizable.
pub const DIVERGENCE_CEILING: f64 = 1e12;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Gains, value coefficients and optimal average cost for one candidate.
///
/// When `converged` is false the candidate is treated as infeasible and `j`
/// is `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JmlsSolution {
    pub k0: f64,
    pub k1: f64,
    pub p0: f64,
    pub p1: f64,
    pub j: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl JmlsSolution {
    /// Feedback gain for channel state `ell`.
    #[inline]
    pub fn gain(&self, ell: bool) -> f64 {
        if ell {
            self.k1
        } else {
            self.k0
        }
    }

    /// `p P1 + (1 - p) P0`.
    #[inline]
    pub fn blended_value(&self, p: f64) -> f64 {
        p * self.p1 + (1.0 - p) * self.p0
    }
}

/// Value iteration for the coupled scalar Riccati recursion.
///
/// The recursion only depends on the blended value `Pbar`, whose update map
/// is concave with slope `rho` at the current iterate. Convergence is
/// declared once the remaining error, bounded by `A^2 |dPbar| / (1 - rho)`,
/// drops below `tol`, or once the step is down to a few ulps of `P`.
/// Divergence past [`DIVERGENCE_CEILING`] or running out of iterations
/// yields `converged = false` and an infinite cost, not an error.
pub fn solve_jmls(
    theta: &CandidateTheta,
    weights: &CostWeights,
    tol: f64,
    max_iter: usize,
) -> Result<JmlsSolution> {
    weights.validate()?;
    theta.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidSolverSettings("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::InvalidSolverSettings("max_iter must be >= 1"));
    }

    let CandidateTheta { a, b, p } = *theta;
    let CostWeights { q, r, .. } = *weights;
    let a2 = a * a;
    let b2 = b * b;

    let mut p0 = q;
    let mut p1 = q;
    let mut residual = f64::INFINITY;

    for iter in 1..=max_iter {
        let pbar = p * p1 + (1.0 - p) * p0;
        let open = q + a2 * pbar;
        let abp = a * b * pbar;
        let denom = r + b2 * pbar;
        let next_p1 = open - abp * abp / denom;
        let next_p0 = open;

        if !(next_p0 <= DIVERGENCE_CEILING && next_p1 <= DIVERGENCE_CEILING) {
            return Ok(diverged(next_p0, next_p1, iter));
        }

        let rate = a2 - p * a2 * b2 * pbar * (2.0 * r + b2 * pbar) / (denom * denom);
        let step = (p * next_p1 + (1.0 - p) * next_p0 - pbar).abs();
        residual = (next_p0 - p0).abs().max((next_p1 - p1).abs());
        p0 = next_p0;
        p1 = next_p1;

        let tail_small = rate < 1.0 && a2 * step < tol * (1.0 - rate);
        let at_rounding = residual <= 4.0 * f64::EPSILON * p0.max(p1);
        if tail_small || at_rounding {
            return Ok(finish(theta, weights, p0, p1, residual, iter));
        }
    }

    Ok(JmlsSolution {
        k0: 0.0,
        k1: 0.0,
        p0,
        p1,
        j: f64::INFINITY,
        residual,
        converged: false,
        iterations: max_iter,
    })
}

/// [`solve_jmls`] with the default tolerance and iteration cap.
pub fn solve_jmls_default(theta: &CandidateTheta, weights: &CostWeights) -> Result<JmlsSolution> {
    solve_jmls(theta, weights, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// `sigma_w^2 (p P1 + (1 - p) P0)`, or infinity for an unconverged solution.
pub fn average_cost(solution: &JmlsSolution, theta: &CandidateTheta, weights: &CostWeights) -> f64 {
    if !solution.converged {
        return f64::INFINITY;
    }
    weights.noise_variance() * solution.blended_value(theta.p)
}

fn finish(
    theta: &CandidateTheta,
    weights: &CostWeights,
    p0: f64,
    p1: f64,
    residual: f64,
    iterations: usize,
) -> JmlsSolution {
    let CandidateTheta { a, b, p } = *theta;
    let pbar = p * p1 + (1.0 - p) * p0;
    // `+ 0.0` folds a negative zero (B = 0 or A = 0) into +0.
    let k1 = -a * b * pbar / (weights.r + b * b * pbar) + 0.0;
    JmlsSolution {
        k0: 0.0,
        k1,
        p0,
        p1,
        j: weights.noise_variance() * pbar,
        residual,
        converged: true,
        iterations,
    }
}

fn diverged(p0: f64, p1: f64, iterations: usize) -> JmlsSolution {
    JmlsSolution {
        k0: 0.0,
        k1: 0.0,
        p0,
        p1,
        j: f64::INFINITY,
        residual: f64::INFINITY,
        converged: false,
        iterations,
    }
}
