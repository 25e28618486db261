//! Episodic optimistic controller: episode triggers, optimistic parameter
//! selection over the confidence set, and linear feedback.

use crate::estimation::ConfidenceSet;
use crate::jmls::{solve_jmls_default, JmlsSolution};
use crate::{CandidateTheta, CostWeights, Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 21;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter("interval bounds must be finite with lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, lo: f64, hi: f64) -> Option<Self> {
        let lo = self.lo.max(lo);
        let hi = self.hi.min(hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    /// `n` evenly spaced points including both endpoints; a single point when
    /// the interval is degenerate. Points are ascending.
    pub fn grid(&self, n: usize) -> impl Iterator<Item = f64> + Clone + '_ {
        let n = if self.lo == self.hi { 1 } else { n.max(2) };
        let step = if n > 1 { (self.hi - self.lo) / (n - 1) as f64 } else { 0.0 };
        (0..n).map(move |i| {
            if i + 1 == n {
                self.hi
            } else {
                self.lo + step * i as f64
            }
        })
    }
}

/// Axis-aligned set of allowable parameters with the search resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterBox {
    pub a: Interval,
    pub b: Interval,
    pub p: Interval,
    pub grid_points: usize,
}

impl ParameterBox {
    pub fn new(a: Interval, b: Interval, p: Interval, grid_points: usize) -> Result<Self> {
        let bx = Self { a, b, p, grid_points };
        bx.validate()?;
        Ok(bx)
    }

    pub fn singleton(theta: &CandidateTheta) -> Self {
        Self {
            a: Interval::point(theta.a),
            b: Interval::point(theta.b),
            p: Interval::point(theta.p),
            grid_points: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for iv in [self.a, self.b, self.p] {
            Interval::new(iv.lo, iv.hi)?;
        }
        if self.p.lo < 0.0 || self.p.hi > 1.0 {
            return Err(Error::InvalidParameter("p range must lie within [0, 1]"));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter("grid_points must be >= 2"));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &CandidateTheta) -> bool {
        self.a.contains(theta.a) && self.b.contains(theta.b) && self.p.contains(theta.p)
    }

    /// Intersection with the confidence set, or `None` if any axis is empty.
    pub fn intersect(&self, cset: &ConfidenceSet) -> Option<Self> {
        let (alo, ahi) = cset.a_interval();
        let (blo, bhi) = cset.b_interval();
        let (plo, phi) = cset.p_interval();
        Some(Self {
            a: self.a.intersect(alo, ahi)?,
            b: self.b.intersect(blo, bhi)?,
            p: self.p.intersect(plo, phi)?,
            grid_points: self.grid_points,
        })
    }

    /// Grid points in lexicographic `(A, B, p)` order.
    pub fn grid(&self) -> impl Iterator<Item = CandidateTheta> + '_ {
        let n = self.grid_points;
        self.a.grid(n).flat_map(move |a| {
            self.b
                .grid(n)
                .flat_map(move |b| self.p.grid(n).map(move |p| CandidateTheta { a, b, p }))
        })
    }
}

/// Frozen controller for the current episode plus the bookkeeping that
/// decides when the next one starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeState {
    pub tau: u64,
    pub v1_star: f64,
    pub v2_star: f64,
    pub min_len: u64,
    pub active_theta: CandidateTheta,
    pub active_solution: JmlsSolution,
    pub index: u64,
}

impl EpisodeState {
    /// First episode, anchored at `t = 1` with both snapshots at `lambda`.
    pub fn first(lambda: f64, min_len: u64, theta: CandidateTheta, solution: JmlsSolution) -> Self {
        Self {
            tau: 1,
            v1_star: lambda,
            v2_star: lambda,
            min_len: min_len.max(1),
            active_theta: theta,
            active_solution: solution,
            index: 0,
        }
    }

    /// Starts a new episode at `t`. When `selection` is `None` the previous
    /// parameter stays active.
    pub fn advance(&mut self, t: u64, v1: f64, v2: f64, selection: Option<(CandidateTheta, JmlsSolution)>) {
        self.tau = t;
        self.v1_star = v1;
        self.v2_star = v2;
        self.index += 1;
        if let Some((theta, solution)) = selection {
            self.active_theta = theta;
            self.active_solution = solution;
        }
    }
}

/// A statistic doubled or the episode reached its anchor's age, and the
/// episode is at least `min_len` slots old.
pub fn episode_trigger(v1: f64, v2: f64, episode: &EpisodeState, t: u64) -> bool {
    let elapsed = t.saturating_sub(episode.tau);
    let doubled = v1 >= 2.0 * episode.v1_star || v2 >= 2.0 * episode.v2_star || t >= 2 * episode.tau;
    doubled && elapsed >= episode.min_len
}

/// Minimizes the optimal average cost over the grid on `cset ∩ box`.
///
/// Unstabilizable candidates rank last; ties go to the lexicographically
/// smallest `(A, B, p)`.
pub fn ofu_select(
    cset: &ConfidenceSet,
    bx: &ParameterBox,
    weights: &CostWeights,
) -> Result<(CandidateTheta, JmlsSolution)> {
    let region = bx.intersect(cset).ok_or(Error::EmptyConfidenceIntersection)?;
    minimize_cost(&region, weights)
}

/// Grid argmin of the optimal average cost over a box.
pub fn minimize_cost(region: &ParameterBox, weights: &CostWeights) -> Result<(CandidateTheta, JmlsSolution)> {
    weights.validate()?;
    let mut best: Option<(CandidateTheta, JmlsSolution)> = None;
    for theta in region.grid() {
        let sol = solve_jmls_default(&theta, weights)?;
        if !sol.converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bt, bs)) => sol.j < bs.j || (sol.j == bs.j && theta.lex_cmp(bt).is_lt()),
        };
        if better {
            best = Some((theta, sol));
        }
    }
    best.ok_or(Error::NoFeasibleCandidate)
}

/// `K1 x` on a delivered slot, `K0 x` otherwise.
#[inline]
pub fn control(episode: &EpisodeState, x: f64, ell: bool) -> f64 {
    episode.active_solution.gain(ell) * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jmls::average_cost;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn weights() -> CostWeights {
        CostWeights::new(1.0, 1.0, 1.0).unwrap()
    }

    fn solved(theta: CandidateTheta) -> JmlsSolution {
        solve_jmls_default(&theta, &weights()).unwrap()
    }

    fn episode(min_len: u64) -> EpisodeState {
        let theta = CandidateTheta::new(0.5, 1.0, 1.0).unwrap();
        EpisodeState::first(1.0, min_len, theta, solved(theta))
    }

    fn wide_set(center: CandidateTheta, radius: f64) -> ConfidenceSet {
        ConfidenceSet {
            a_center: center.a,
            a_radius: radius,
            b_center: center.b,
            b_radius: radius,
            p_center: center.p,
            p_radius: radius,
            delta: 0.05,
            degenerate_radius: false,
        }
    }

    #[test]
    fn trigger_on_statistic_doubling() {
        let mut ep = episode(5);
        ep.tau = 10;
        assert!(episode_trigger(2.0, 1.0, &ep, 15));
        assert!(episode_trigger(1.0, 2.0, &ep, 15));
    }

    #[test]
    fn trigger_on_time_doubling() {
        let mut ep = episode(5);
        ep.tau = 10;
        assert!(episode_trigger(1.0, 1.0, &ep, 20));
        assert!(!episode_trigger(1.0, 1.0, &ep, 19));
    }

    #[test]
    fn minimum_length_blocks_trigger() {
        let mut ep = episode(5);
        ep.tau = 10;
        assert!(!episode_trigger(3.0, 3.0, &ep, 14));
        assert!(episode_trigger(3.0, 3.0, &ep, 15));
    }

    #[test]
    fn advance_keeps_parameter_on_fallback() {
        let mut ep = episode(1);
        let before = ep.active_theta;
        ep.advance(7, 4.0, 5.0, None);
        assert_eq!((ep.tau, ep.v1_star, ep.v2_star, ep.index), (7, 4.0, 5.0, 1));
        assert_eq!(ep.active_theta, before);
    }

    #[test]
    fn singleton_region_returns_its_point() {
        let truth = CandidateTheta::new(1.2, 1.0, 0.7).unwrap();
        let bx = ParameterBox::singleton(&truth);
        let (theta, sol) = ofu_select(&wide_set(truth, 0.1), &bx, &weights()).unwrap();
        assert_eq!(theta, truth);
        assert_eq!(sol, solved(truth));
    }

    #[test]
    fn free_reliability_selects_upper_endpoint() {
        let bx = ParameterBox::new(
            Interval::point(0.9),
            Interval::point(1.0),
            Interval::new(0.4, 0.8).unwrap(),
            DEFAULT_GRID_POINTS,
        )
        .unwrap();
        let cset = wide_set(CandidateTheta::new(0.9, 1.0, 0.6).unwrap(), 1.0);
        let (theta, _) = ofu_select(&cset, &bx, &weights()).unwrap();
        assert_eq!(theta.p, 0.8);
    }

    #[test]
    fn all_unstabilizable_is_an_error() {
        let bx = ParameterBox::new(
            Interval::new(3.0, 4.0).unwrap(),
            Interval::point(0.0),
            Interval::new(0.5, 0.9).unwrap(),
            5,
        )
        .unwrap();
        let cset = wide_set(CandidateTheta::new(3.5, 0.0, 0.7).unwrap(), 10.0);
        assert_eq!(ofu_select(&cset, &bx, &weights()), Err(Error::NoFeasibleCandidate));
    }

    #[test]
    fn disjoint_set_is_empty_intersection() {
        let bx = ParameterBox::new(
            Interval::new(0.5, 2.0).unwrap(),
            Interval::new(0.5, 2.0).unwrap(),
            Interval::new(0.3, 0.95).unwrap(),
            5,
        )
        .unwrap();
        let cset = wide_set(CandidateTheta::new(5.0, 1.0, 0.5).unwrap(), 0.1);
        assert_eq!(
            ofu_select(&cset, &bx, &weights()),
            Err(Error::EmptyConfidenceIntersection)
        );
    }

    #[test]
    fn control_examples() {
        let mut ep = episode(1);
        ep.active_solution.k1 = -0.5;
        assert_eq!(control(&ep, 2.0, true), -1.0);
        assert_eq!(control(&ep, 3.7, false), 0.0);
        assert_eq!(control(&ep, 0.0, true), 0.0);
    }

    #[test]
    fn grid_includes_endpoints_and_collapses_points() {
        let iv = Interval::new(0.3, 0.95).unwrap();
        let pts: Vec<f64> = iv.grid(21).collect();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[0], 0.3);
        assert_eq!(pts[20], 0.95);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Interval::point(1.0).grid(21).count(), 1);
    }

    #[test]
    fn optimism_when_truth_is_on_the_grid() {
        let truth = CandidateTheta::new(1.2, 1.0, 0.7).unwrap();
        // Grid on [0.5, 2] x [0.5, 2] x [0.3, 0.95] with 21 points per axis
        // hits (1.2, 1.0, 0.7) up to rounding; use the grid point itself.
        let bx = ParameterBox::new(
            Interval::new(0.5, 2.0).unwrap(),
            Interval::new(0.5, 2.0).unwrap(),
            Interval::new(0.3, 0.95).unwrap(),
            21,
        )
        .unwrap();
        let cset = wide_set(truth, 0.3);
        let region = bx.intersect(&cset).unwrap();
        let on_grid = region
            .grid()
            .min_by(|x, y| {
                let dx = (x.a - truth.a).abs() + (x.b - truth.b).abs() + (x.p - truth.p).abs();
                let dy = (y.a - truth.a).abs() + (y.b - truth.b).abs() + (y.p - truth.p).abs();
                dx.total_cmp(&dy)
            })
            .unwrap();
        let (_, sel) = ofu_select(&cset, &bx, &weights()).unwrap();
        let on_grid_cost = average_cost(&solved(on_grid), &on_grid, &weights());
        assert!(sel.j <= on_grid_cost);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn refining_a_nested_grid_never_raises_the_cost(
            ca in 0.6f64..1.8, cb in 0.6f64..1.8, cp in 0.35f64..0.9, n in 3usize..9,
        ) {
            let bx = ParameterBox::new(
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.3, 0.95).unwrap(),
                n,
            ).unwrap();
            let fine = ParameterBox { grid_points: 2 * n - 1, ..bx };
            let cset = wide_set(CandidateTheta { a: ca, b: cb, p: cp }, 0.3);
            let coarse = ofu_select(&cset, &bx, &weights());
            let refined = ofu_select(&cset, &fine, &weights());
            if let Ok((_, c)) = coarse {
                let (_, f) = refined.unwrap();
                prop_assert!(f.j <= c.j);
            }
        }

        #[test]
        fn selection_is_deterministic(ca in 0.6f64..1.8, cp in 0.35f64..0.9) {
            let bx = ParameterBox::new(
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.3, 0.95).unwrap(),
                5,
            ).unwrap();
            let cset = wide_set(CandidateTheta { a: ca, b: 1.0, p: cp }, 0.4);
            prop_assert_eq!(ofu_select(&cset, &bx, &weights()), ofu_select(&cset, &bx, &weights()));
        }
    }
}
