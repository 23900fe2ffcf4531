//! Power allocation over scalar wiretap subchannels.
//!
//! Maximizes `Σ log2(1 + a_i q_i) - log2(1 + b_i q_i)` subject to
//! `Σ c_i q_i <= P0` and `0 <= q_i <= cap_i`. Each term is concave and
//! increasing for `a_i > b_i`, so the optimum is characterized by one
//! multiplier `μ` with `marginal_i(q_i) = μ c_i` on interior channels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsvd::{reassemble_covariance, SubchannelSet};
use crate::linalg::LOG2_E;
use crate::model::CovarianceMatrix;

const MU_FLOOR: f64 = 1e-18;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bisection stops once `|Σ c_i q_i - P0| <= budget_tol * P0`.
    pub budget_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            budget_tol: 1e-10,
            max_iter: MAX_BISECTIONS,
        }
    }
}

/// The separable allocation problem handed to the solvers.
#[derive(Debug, Clone)]
pub struct AllocationProblem {
    pub subchannels: SubchannelSet,
    pub p0: f64,
    /// Per-subchannel upper limits; `None` means unbounded.
    pub caps: Option<Vec<f64>>,
}

impl AllocationProblem {
    pub fn new(subchannels: SubchannelSet, p0: f64, caps: Option<Vec<f64>>) -> Result<Self> {
        let p = Self {
            subchannels,
            p0,
            caps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        Self::new(self.subchannels.clone(), p0, self.caps.clone())
    }

    fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::input("P0 must be positive and finite"));
        }
        for ch in &self.subchannels.channels {
            if ![ch.a, ch.b, ch.c].iter().all(|v| v.is_finite()) {
                return Err(Error::input("non-finite subchannel coefficients"));
            }
            if !(ch.a > ch.b && ch.b >= 0.0 && ch.c > 0.0) {
                return Err(Error::input("subchannels need a > b >= 0 and c > 0"));
            }
        }
        if let Some(caps) = &self.caps {
            if caps.len() != self.subchannels.len() {
                return Err(Error::input(format!(
                    "{} caps for {} subchannels",
                    caps.len(),
                    self.subchannels.len()
                )));
            }
            if caps.iter().any(|&c| !(c > 0.0) || c.is_nan()) {
                return Err(Error::input("caps must be positive or +infinity"));
            }
        }
        Ok(())
    }

    fn cap(&self, i: usize) -> f64 {
        self.caps.as_ref().map_or(f64::INFINITY, |c| c[i])
    }
}

#[derive(Debug, Clone)]
pub struct AllocationResult {
    pub q: Vec<f64>,
    pub covariance: CovarianceMatrix,
    /// Sum of scalar Gaussian secrecy rates, bits per channel use.
    pub objective_gaussian: f64,
    pub mu: f64,
    /// Whether the power budget is met with equality.
    pub active_budget: bool,
}

/// `Σ log2(1 + a q) - log2(1 + b q)` over the subchannels.
pub fn gaussian_objective(s: &SubchannelSet, q: &[f64]) -> f64 {
    s.channels
        .iter()
        .zip(q)
        .map(|(ch, &qi)| ((ch.a * qi).ln_1p() - (ch.b * qi).ln_1p()) * LOG2_E)
        .sum()
}

/// Derivative of one term in bits per unit power.
pub fn marginal_rate(a: f64, b: f64, q: f64) -> f64 {
    (a - b) / ((1.0 + a * q) * (1.0 + b * q)) * LOG2_E
}

/// Power on a channel for multiplier `mu`: the positive root of
/// `a b q^2 + (a + b) q + 1 - K = 0`, `K = (a - b) log2(e) / (mu c)`, clipped to `[0, cap]`.
fn power_at(a: f64, b: f64, c: f64, cap: f64, mu: f64) -> f64 {
    let k = (a - b) * LOG2_E / (mu * c);
    if !(k > 1.0) {
        return 0.0;
    }
    let km1 = k - 1.0;
    let sum = a + b;
    // 2(K-1) / ((a+b) + sqrt((a+b)^2 + 4ab(K-1))) avoids cancellation.
    let q = 2.0 * km1 / (sum + (sum * sum + 4.0 * a * b * km1).sqrt());
    q.min(cap)
}

fn powers_at(p: &AllocationProblem, mu: f64) -> Vec<f64> {
    p.subchannels
        .channels
        .iter()
        .enumerate()
        .map(|(i, ch)| power_at(ch.a, ch.b, ch.c, p.cap(i), mu))
        .collect()
}

fn finish(
    p: &AllocationProblem,
    q: Vec<f64>,
    mu: f64,
    active_budget: bool,
) -> Result<AllocationResult> {
    let covariance = reassemble_covariance(&p.subchannels, &q)?;
    let objective_gaussian = gaussian_objective(&p.subchannels, &q).max(0.0);
    Ok(AllocationResult {
        q,
        covariance,
        objective_gaussian,
        mu,
        active_budget,
    })
}

/// Optimal allocation for Gaussian inputs, honouring caps when present.
pub fn solve_gaussian(p: &AllocationProblem) -> Result<AllocationResult> {
    solve_gaussian_with(p, SolverOptions::default())
}

pub fn solve_gaussian_with(p: &AllocationProblem, opts: SolverOptions) -> Result<AllocationResult> {
    p.validate()?;
    let s = &p.subchannels;
    let l = s.len();
    if l == 0 {
        return finish(p, Vec::new(), 0.0, false);
    }

    // Caps affordable within the budget: each term increases, so the caps are optimal.
    let capped_power: f64 = (0..l).map(|i| s.channels[i].c * p.cap(i)).sum();
    if capped_power <= p.p0 {
        let q: Vec<f64> = (0..l).map(|i| p.cap(i)).collect();
        let active = capped_power >= p.p0 * (1.0 - opts.budget_tol);
        return finish(p, q, 0.0, active);
    }

    let spend = |mu: f64| s.power(&powers_at(p, mu));
    let mut hi = s
        .channels
        .iter()
        .map(|ch| (ch.a - ch.b) * LOG2_E / ch.c)
        .fold(0.0, f64::max);
    let mut lo = MU_FLOOR.min(hi);
    if spend(lo) < p.p0 {
        // Budget cannot be reached even at the smallest multiplier.
        return finish(p, powers_at(p, lo), lo, false);
    }

    // spend() is nonincreasing in mu; bisect geometrically over the wide bracket.
    let mut mu = (lo * hi).sqrt();
    for _ in 0..opts.max_iter {
        mu = (lo * hi).sqrt();
        if !(mu > lo && mu < hi) {
            mu = 0.5 * (lo + hi);
        }
        let used = spend(mu);
        if (used - p.p0).abs() <= opts.budget_tol * p.p0 {
            break;
        }
        if used > p.p0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut q = powers_at(p, mu);
    if s.power(&q) > p.p0 * (1.0 + opts.budget_tol) {
        // Collapsed bracket without convergence: the upper multiplier is always feasible.
        mu = hi;
        q = powers_at(p, mu);
    }
    finish(p, q, mu, true)
}

/// Equal power on every subchannel: the largest common level that fits the
/// budget and every cap.
pub fn solve_equal_weight(p: &AllocationProblem) -> Result<AllocationResult> {
    p.validate()?;
    let s = &p.subchannels;
    let l = s.len();
    if l == 0 {
        return Err(Error::input(
            "equal-weight allocation needs at least one subchannel",
        ));
    }
    let c_sum: f64 = s.channels.iter().map(|ch| ch.c).sum();
    let min_cap = (0..l).map(|i| p.cap(i)).fold(f64::INFINITY, f64::min);
    let budget_level = p.p0 / c_sum;
    let level = budget_level.min(min_cap);
    finish(p, vec![level; l], 0.0, level == budget_level)
}

/// Runs the solver for every budget in `p0_grid` (strictly increasing, positive).
pub fn budget_sweep(
    template: &AllocationProblem,
    p0_grid: &[f64],
) -> Result<Vec<AllocationResult>> {
    if p0_grid.is_empty() {
        return Err(Error::input("empty P0 grid"));
    }
    if p0_grid.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::input("P0 grid values must be positive and finite"));
    }
    if p0_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("P0 grid must be strictly increasing"));
    }
    p0_grid
        .par_iter()
        .map(|&p0| solve_gaussian(&template.with_p0(p0)?))
        .collect()
}

/// Per-channel violations of the KKT conditions at `(q, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity: f64,
    pub zero_channels: f64,
    pub capped_channels: f64,
    pub budget: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.zero_channels)
            .max(self.capped_channels)
            .max(self.budget)
    }
}

/// KKT residuals of an allocation. Stationarity uses the relative form
/// `|marginal - μ c| / max(marginal, μ c)`.
pub fn kkt_residual(p: &AllocationProblem, r: &AllocationResult) -> KktReport {
    let s = &p.subchannels;
    let mut rep = KktReport {
        stationarity: 0.0,
        zero_channels: 0.0,
        capped_channels: 0.0,
        budget: 0.0,
    };
    let rel_cap = 1e-12;
    for (i, (ch, &q)) in s.channels.iter().zip(&r.q).enumerate() {
        let m = marginal_rate(ch.a, ch.b, q);
        let price = r.mu * ch.c;
        let scale = m.max(price).max(f64::MIN_POSITIVE);
        let cap = p.cap(i);
        if q <= 0.0 {
            rep.zero_channels = rep.zero_channels.max((m - price).max(0.0) / scale);
        } else if cap.is_finite() && q >= cap * (1.0 - rel_cap) {
            rep.capped_channels = rep.capped_channels.max((price - m).max(0.0) / scale);
        } else {
            rep.stationarity = rep.stationarity.max((m - price).abs() / scale);
        }
    }
    let used = s.power(&r.q);
    rep.budget = ((used - p.p0) / p.p0).max(0.0);
    if r.mu > 0.0 {
        // Complementary slackness: a positive price requires a tight budget.
        rep.budget = rep.budget.max(((p.p0 - used) / p.p0).max(0.0));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn synthetic(a: &[f64], b: &[f64], c: &[f64]) -> SubchannelSet {
        SubchannelSet::from_gains(a, b, c).unwrap()
    }

    #[test]
    fn empty_set_gives_zero_allocation() {
        let p = AllocationProblem::new(synthetic(&[], &[], &[]), 1.0, None).unwrap();
        let r = solve_gaussian(&p).unwrap();
        assert!(r.q.is_empty());
        assert_eq!(r.objective_gaussian, 0.0);
    }

    #[test]
    fn single_channel_spends_whole_budget() {
        let p = AllocationProblem::new(synthetic(&[3.0], &[1.0], &[0.5]), 2.0, None).unwrap();
        let r = solve_gaussian(&p).unwrap();
        assert!((r.q[0] - 4.0).abs() < 1e-9);
        assert!(r.active_budget);
        assert!(kkt_residual(&p, &r).max() < 1e-8);
    }

    #[test]
    fn cap_binds_before_budget() {
        let p = AllocationProblem::new(synthetic(&[3.0], &[1.0], &[1.0]), 2.0, Some(vec![0.5]))
            .unwrap();
        let r = solve_gaussian(&p).unwrap();
        assert_eq!(r.q, vec![0.5]);
        assert!(!r.active_budget);
        assert_eq!(r.mu, 0.0);
    }

    #[test]
    fn water_filling_when_eavesdropper_is_absent() {
        // b = 0, c = 1: classic water-filling q_i = (ν - 1/a_i)^+.
        let p =
            AllocationProblem::new(synthetic(&[4.0, 1.0, 0.1], &[0.0; 3], &[1.0; 3]), 1.0, None)
                .unwrap();
        let r = solve_gaussian(&p).unwrap();
        // ν = (1 + 1/4 + 1) / 2 = 1.125 keeps both strong channels on; weak one off.
        assert!((r.q[0] - 0.875).abs() < 1e-8, "{:?}", r.q);
        assert!((r.q[1] - 0.125).abs() < 1e-8);
        assert_eq!(r.q[2], 0.0);
    }

    #[test]
    fn equal_weight_arithmetic() {
        let p = AllocationProblem::new(synthetic(&[4.0, 2.0], &[0.5, 0.5], &[1.0, 3.0]), 8.0, None)
            .unwrap();
        let r = solve_equal_weight(&p).unwrap();
        assert_eq!(r.q, vec![2.0, 2.0]);
        let opt = solve_gaussian(&p).unwrap();
        assert!(r.objective_gaussian <= opt.objective_gaussian + 1e-9);
    }

    #[test]
    fn equal_weight_single_channel_matches_optimum() {
        let p = AllocationProblem::new(synthetic(&[2.0], &[0.3], &[0.7]), 5.0, None).unwrap();
        let e = solve_equal_weight(&p).unwrap();
        let g = solve_gaussian(&p).unwrap();
        assert!((e.q[0] - g.q[0]).abs() < 1e-9);
    }

    #[test]
    fn equal_weight_respects_smallest_cap() {
        let p = AllocationProblem::new(
            synthetic(&[4.0, 2.0], &[0.5, 0.5], &[1.0, 1.0]),
            8.0,
            Some(vec![1.5, 9.0]),
        )
        .unwrap();
        let r = solve_equal_weight(&p).unwrap();
        assert_eq!(r.q, vec![1.5, 1.5]);
        assert!(!r.active_budget);
    }

    #[test]
    fn invalid_problems_rejected() {
        assert!(AllocationProblem::new(synthetic(&[1.0], &[1.0], &[1.0]), 1.0, None).is_err());
        assert!(AllocationProblem::new(synthetic(&[2.0], &[1.0], &[1.0]), 0.0, None).is_err());
        assert!(AllocationProblem::new(synthetic(&[2.0], &[1.0], &[1.0]), f64::NAN, None).is_err());
        assert!(
            AllocationProblem::new(synthetic(&[2.0], &[1.0], &[1.0]), 1.0, Some(vec![])).is_err()
        );
        assert!(
            AllocationProblem::new(synthetic(&[2.0], &[1.0], &[1.0]), 1.0, Some(vec![0.0]))
                .is_err()
        );
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let p = AllocationProblem::new(synthetic(&[2.0], &[1.0], &[1.0]), 1.0, None).unwrap();
        assert!(budget_sweep(&p, &[]).is_err());
        assert!(budget_sweep(&p, &[1.0, 1.0]).is_err());
        assert!(budget_sweep(&p, &[-1.0, 1.0]).is_err());
        let one = budget_sweep(&p, &[3.0]).unwrap();
        let direct = solve_gaussian(&p.with_p0(3.0).unwrap()).unwrap();
        assert_eq!(one[0].q, direct.q);
    }

    #[test]
    fn stable_root_matches_naive_formula() {
        let (a, b, c, mu) = (5.0, 0.7, 1.3, 0.2);
        let k = (a - b) * LOG2_E / (mu * c);
        let naive =
            (-(a + b) + ((a + b) * (a + b) - 4.0 * a * b * (1.0 - k)).sqrt()) / (2.0 * a * b);
        assert!((power_at(a, b, c, f64::INFINITY, mu) - naive).abs() < 1e-12);
        let q = power_at(a, b, c, f64::INFINITY, mu);
        assert!((marginal_rate(a, b, q) - mu * c).abs() < 1e-12);
    }
}
