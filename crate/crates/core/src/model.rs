//! Channel model, Jensen surrogate, and the worst-eavesdropper reduction.
//!
//! With only the entry variances of the eavesdropper channels known, the
//! expected eavesdropper rate `E log2 det(I + Z_j Q Z_j^* / N0)` is bounded
//! above by `log2 det(I + N_Ej sigma2_Ej Q / N0)`. The bound is monotone in
//! `N_Ej sigma2_Ej`, so the inner minimum over eavesdroppers is attained by
//! the one with the largest product, and that eavesdropper is replaced by the
//! deterministic matrix `Z = sqrt(N_Ej0 sigma2_Ej0) I`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, log2_det_identity_plus, trace_re, CMatrix};
use crate::rng::RngKind;

/// Statistical description of one eavesdropper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eavesdropper {
    /// Number of receive antennas `N_Ej`.
    pub antennas: usize,
    /// Per-entry variance of the `CN(0, sigma2)` channel gains.
    pub sigma2: f64,
}

impl Eavesdropper {
    pub fn gain2(&self) -> f64 {
        self.antennas as f64 * self.sigma2
    }
}

/// Problem input: destination channel, eavesdropper statistics, noise and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    h: CMatrix,
    eavesdroppers: Vec<Eavesdropper>,
    n0: f64,
    p0: f64,
}

impl ChannelInstance {
    pub fn new(h: CMatrix, eavesdroppers: Vec<Eavesdropper>, n0: f64, p0: f64) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::input("destination channel must be at least 1x1"));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("destination channel has non-finite entries"));
        }
        if eavesdroppers.is_empty() {
            return Err(Error::input("at least one eavesdropper is required"));
        }
        for (j, e) in eavesdroppers.iter().enumerate() {
            if e.antennas == 0 {
                return Err(Error::input(format!(
                    "eavesdropper {j}: antenna count must be positive"
                )));
            }
            if !(e.sigma2 > 0.0 && e.sigma2.is_finite()) {
                return Err(Error::input(format!(
                    "eavesdropper {j}: sigma2 must be positive"
                )));
            }
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::input("N0 must be positive"));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(Error::input("P0 must be positive"));
        }
        Ok(Self {
            h,
            eavesdroppers,
            n0,
            p0,
        })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn eavesdroppers(&self) -> &[Eavesdropper] {
        &self.eavesdroppers
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Number of transmit antennas `N_S`.
    pub fn n_s(&self) -> usize {
        self.h.ncols()
    }

    /// Number of destination antennas `N_D`.
    pub fn n_d(&self) -> usize {
        self.h.nrows()
    }

    /// Same channel with a different power budget.
    pub fn with_p0(&self, p0: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.eavesdroppers.clone(), self.n0, p0)
    }
}

/// The single deterministic eavesdropper that dominates the Jensen bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentEavesdropper {
    /// Index of the dominating eavesdropper in the original list.
    pub j0: usize,
    /// `N_Ej0 * sigma2_Ej0`.
    pub gain2: f64,
    /// `sqrt(gain2) * I`, `N_S x N_S`.
    pub z: CMatrix,
}

/// Validated transmit covariance (Hermitian, positive semidefinite).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(CMatrix);

/// Relative Hermitian tolerance.
const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue as a fraction of the trace.
const PSD_TOL: f64 = 1e-10;
const BUDGET_TOL: f64 = 1e-9;

impl CovarianceMatrix {
    pub fn new(q: CMatrix) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::input("covariance must be square"));
        }
        if q.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("covariance has non-finite entries"));
        }
        let scale = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = (&q - q.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::input(format!(
                "covariance is not Hermitian (asymmetry {asym:e})"
            )));
        }
        let q = hermitian_part(&q);
        let trace = trace_re(&q);
        if q.nrows() > 0 {
            let min_eig = SymmetricEigen::new(q.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -PSD_TOL * trace.abs() {
                return Err(Error::input(format!(
                    "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self(q))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    /// `(P0 / n) I`.
    pub fn isotropic(n: usize, p0: f64) -> Self {
        Self(CMatrix::identity(n, n) * Complex64::new(p0 / n as f64, 0.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    /// `trace(Q) <= P0 (1 + 1e-9)`.
    pub fn within_budget(&self, p0: f64) -> bool {
        self.trace() <= p0 * (1.0 + BUDGET_TOL)
    }
}

/// Picks the eavesdropper with the largest `N_Ej sigma2_Ej`; ties go to the lowest index.
pub fn worst_eavesdropper(inst: &ChannelInstance) -> Result<EquivalentEavesdropper> {
    worst_of(inst.eavesdroppers(), inst.n_s())
}

pub(crate) fn worst_of(
    eavesdroppers: &[Eavesdropper],
    n_s: usize,
) -> Result<EquivalentEavesdropper> {
    let (j0, best) = eavesdroppers
        .iter()
        .enumerate()
        .fold(None::<(usize, &Eavesdropper)>, |acc, (j, e)| match acc {
            Some((_, b)) if b.gain2() >= e.gain2() => acc,
            _ => Some((j, e)),
        })
        .ok_or_else(|| Error::input("at least one eavesdropper is required"))?;
    let gain2 = best.gain2();
    let z = CMatrix::identity(n_s, n_s) * Complex64::new(gain2.sqrt(), 0.0);
    Ok(EquivalentEavesdropper { j0, gain2, z })
}

fn check_dim(inst: &ChannelInstance, q: &CovarianceMatrix) -> Result<()> {
    if q.dim() != inst.n_s() {
        return Err(Error::input(format!(
            "covariance is {}x{} but the channel has {} transmit antennas",
            q.dim(),
            q.dim(),
            inst.n_s()
        )));
    }
    Ok(())
}

/// Destination rate `log2 det(I + H Q H^* / N0)` in bits per channel use.
pub fn gaussian_rate_destination(inst: &ChannelInstance, q: &CovarianceMatrix) -> Result<f64> {
    check_dim(inst, q)?;
    let rate = log2_det_identity_plus(inst.h(), q.matrix(), 1.0 / inst.n0());
    Ok(rate.max(0.0))
}

/// Eavesdropper-side Jensen bound `log2 det(I + gain2 Q / N0)`.
pub fn eavesdropper_bound(gain2: f64, n0: f64, q: &CovarianceMatrix) -> f64 {
    let eye = CMatrix::identity(q.dim(), q.dim());
    log2_det_identity_plus(&eye, q.matrix(), gain2 / n0).max(0.0)
}

/// Destination rate minus the dominating eavesdropper's Jensen bound.
pub fn surrogate_secrecy_objective(
    inst: &ChannelInstance,
    eq: &EquivalentEavesdropper,
    q: &CovarianceMatrix,
) -> Result<f64> {
    let rd = gaussian_rate_destination(inst, q)?;
    Ok(rd - eavesdropper_bound(eq.gain2, inst.n0(), q))
}

/// Monte-Carlo estimate of the ergodic eavesdropper rate next to its Jensen bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenGap {
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub bound: f64,
}

impl JensenGap {
    /// `mc_mean <= bound + 3 stderr`.
    pub fn consistent(&self) -> bool {
        self.mc_mean <= self.bound + 3.0 * self.mc_stderr
    }
}

pub const MIN_JENSEN_SAMPLES: usize = 1000;

/// Draws `n_samples` channels `Z_j0` with i.i.d. `CN(0, sigma2_Ej0)` entries
/// and averages `log2 det(I + Z Q Z^* / N0)`.
pub fn jensen_gap_montecarlo(
    inst: &ChannelInstance,
    eq: &EquivalentEavesdropper,
    q: &CovarianceMatrix,
    n_samples: usize,
    seed: u64,
    rng: RngKind,
) -> Result<JensenGap> {
    check_dim(inst, q)?;
    if n_samples < MIN_JENSEN_SAMPLES {
        return Err(Error::input(format!(
            "n_samples must be at least {MIN_JENSEN_SAMPLES}"
        )));
    }
    let eav = inst
        .eavesdroppers()
        .get(eq.j0)
        .ok_or_else(|| Error::input("equivalent eavesdropper index out of range"))?;
    let (rows, cols) = (eav.antennas, inst.n_s());
    let std = (eav.sigma2 / 2.0).sqrt();
    let mut gen = rng.seeded(seed);
    let inv_n0 = 1.0 / inst.n0();

    // Welford accumulation keeps the variance stable for large sample counts.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..n_samples {
        let z = CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut gen);
            let im: f64 = StandardNormal.sample(&mut gen);
            Complex64::new(std * re, std * im)
        });
        let x = log2_det_identity_plus(&z, q.matrix(), inv_n0).max(0.0);
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = if n_samples > 1 {
        m2 / (n_samples - 1) as f64
    } else {
        0.0
    };
    Ok(JensenGap {
        mc_mean: mean,
        mc_stderr: (var / n_samples as f64).sqrt(),
        bound: eavesdropper_bound(eq.gain2, inst.n0(), q),
    })
}
