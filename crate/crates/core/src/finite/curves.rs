//! Optimal scalar power `P_opt`, the β–α curves, and MMSE-vs-power families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mmse, Constellation, NoiseQuadrature, ScalarWiretap};
use crate::error::{Error, Result};
use crate::gsvd::SubchannelSet;

/// Bracket expansion stops here; no sign change below it means no finite maximizer.
pub const POPT_CAP: f64 = 1e9;

const INVERSE_SNR_CAP: f64 = 1e9;
const INVERSE_TOL: f64 = 1e-10;

/// A strictly decreasing MMSE function of SNR.
pub trait MmseCurve {
    fn mmse(&self, snr: f64) -> f64;

    /// Smallest `ρ` with `mmse(ρ) <= alpha`, by bracketing and bisection.
    fn inverse(&self, alpha: f64) -> f64 {
        if alpha >= self.mmse(0.0) {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.mmse(hi) > alpha {
            lo = hi;
            hi *= 2.0;
            if hi > INVERSE_SNR_CAP {
                return INVERSE_SNR_CAP;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.mmse(mid);
            if (v - alpha).abs() <= INVERSE_TOL || hi - lo <= f64::EPSILON * hi {
                return mid;
            }
            if v > alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// MMSE of an equiprobable constellation evaluated by quadrature.
#[derive(Debug, Clone, Copy)]
pub struct ConstellationMmse<'a> {
    pub constellation: &'a Constellation,
    pub quadrature: &'a NoiseQuadrature,
}

impl MmseCurve for ConstellationMmse<'_> {
    fn mmse(&self, snr: f64) -> f64 {
        mmse(self.constellation, snr.max(0.0), self.quadrature).unwrap_or(f64::NAN)
    }
}

/// The MMSE families compared in the β–α analysis.
#[derive(Debug, Clone, Copy)]
pub enum MmseModel<'a> {
    /// `1 / (1 + ρ)`, the Gaussian-input MMSE.
    Gaussian,
    /// `exp(-ρ)`.
    Exponential,
    Constellation(ConstellationMmse<'a>),
}

impl<'a> MmseModel<'a> {
    pub fn constellation(c: &'a Constellation, quad: &'a NoiseQuadrature) -> Self {
        MmseModel::Constellation(ConstellationMmse {
            constellation: c,
            quadrature: quad,
        })
    }
}

impl MmseCurve for MmseModel<'_> {
    fn mmse(&self, snr: f64) -> f64 {
        match self {
            MmseModel::Gaussian => 1.0 / (1.0 + snr),
            MmseModel::Exponential => (-snr).exp(),
            MmseModel::Constellation(c) => c.mmse(snr),
        }
    }

    fn inverse(&self, alpha: f64) -> f64 {
        match self {
            MmseModel::Gaussian => 1.0 / alpha - 1.0,
            MmseModel::Exponential => -alpha.ln(),
            MmseModel::Constellation(c) => c.inverse(alpha),
        }
    }
}

/// `(h2 MMSE(h2 P) - z2 MMSE(z2 P))`, the secrecy-rate slope without the `log2 e` factor.
fn slope<M: MmseCurve + ?Sized>(m: &M, s: ScalarWiretap, p: f64) -> f64 {
    s.h2 * m.mmse(s.h2 * p) - s.z2 * m.mmse(s.z2 * p)
}

/// Power maximizing `I(h2 P) - I(z2 P)` for a finite alphabet.
pub fn find_popt(
    c: &Constellation,
    s: ScalarWiretap,
    quad: &NoiseQuadrature,
    delta: f64,
) -> Result<f64> {
    find_popt_with(&MmseModel::constellation(c, quad), s, delta)
}

/// Bracket-and-bisect search for the sign change of the secrecy-rate slope.
///
/// The upper end doubles from 1 until the slope turns negative; if it never
/// does below [`POPT_CAP`] the result is `+inf`. The bracket is then halved
/// until its width is at most `delta`.
pub fn find_popt_with<M: MmseCurve + ?Sized>(m: &M, s: ScalarWiretap, delta: f64) -> Result<f64> {
    if !(s.h2 > s.z2) {
        return Err(Error::input(format!(
            "P_opt needs |h|^2 > |z|^2 (got {} <= {})",
            s.h2, s.z2
        )));
    }
    if !(s.z2 > 0.0) {
        return Err(Error::input(
            "P_opt needs |z|^2 > 0 (a silent eavesdropper has no finite optimum)",
        ));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::input("delta must be positive"));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while slope(m, s, hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > POPT_CAP {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > delta {
        let mid = 0.5 * (lo + hi);
        if slope(m, s, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `β(α) = MMSE((z2/h2) MMSE^{-1}(α))` on `alpha_grid ⊂ (0, 1]`.
pub fn beta_alpha_curve<M: MmseCurve + ?Sized>(
    model: &M,
    s: ScalarWiretap,
    alpha_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !(s.h2 > 0.0) {
        return Err(Error::input("|h|^2 must be positive"));
    }
    if let Some(a) = alpha_grid.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::input(format!("alpha must lie in (0, 1], got {a}")));
    }
    let ratio = s.z2 / s.h2;
    Ok(alpha_grid
        .iter()
        .map(|&alpha| {
            let beta = if alpha == 1.0 {
                1.0
            } else {
                model.mmse(ratio * model.inverse(alpha))
            };
            (alpha, beta)
        })
        .collect())
}

impl MmseModel<'_> {
    /// Closed forms where they exist; used by [`beta_alpha_curve`] via `inverse`.
    pub fn beta_closed_form(&self, s: ScalarWiretap, alpha: f64) -> Option<f64> {
        let ratio = s.z2 / s.h2;
        match self {
            MmseModel::Gaussian => Some(1.0 / (1.0 + ratio * (1.0 / alpha - 1.0))),
            MmseModel::Exponential => Some(alpha.powf(ratio)),
            MmseModel::Constellation(_) => None,
        }
    }
}

/// One point of the MMSE-vs-power family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsePowerPoint {
    pub p: f64,
    /// `h2 MMSE(h2 P)`.
    pub destination: f64,
    /// `z2 MMSE(z2 P)`.
    pub eavesdropper: f64,
}

pub fn mmse_power_curve<M: MmseCurve + Sync + ?Sized>(
    m: &M,
    s: ScalarWiretap,
    p_grid: &[f64],
) -> Vec<MmsePowerPoint> {
    p_grid
        .par_iter()
        .map(|&p| MmsePowerPoint {
            p,
            destination: s.h2 * m.mmse(s.h2 * p),
            eavesdropper: s.z2 * m.mmse(s.z2 * p),
        })
        .collect()
}

/// Per-subchannel caps `q^ul_i = P_opt(a_i, b_i)`; `+inf` when `b_i = 0`.
pub fn subchannel_caps(
    set: &SubchannelSet,
    c: &Constellation,
    quad: &NoiseQuadrature,
    delta: f64,
) -> Result<Vec<f64>> {
    set.channels
        .par_iter()
        .map(|ch| {
            if ch.b == 0.0 {
                Ok(f64::INFINITY)
            } else {
                find_popt(c, ScalarWiretap::new(ch.a, ch.b)?, quad, delta)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mmse_has_no_finite_optimum() {
        let s = ScalarWiretap::new(2.0, 0.5).unwrap();
        assert_eq!(
            find_popt_with(&MmseModel::Gaussian, s, 1e-6).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn exponential_mmse_optimum_is_closed_form() {
        // h2 e^{-h2 P} = z2 e^{-z2 P}  =>  P = ln(h2/z2) / (h2 - z2).
        let s = ScalarWiretap::new(2.0, 0.5).unwrap();
        let p = find_popt_with(&MmseModel::Exponential, s, 1e-9).unwrap();
        let exact = (4.0f64).ln() / 1.5;
        assert!((p - exact).abs() < 1e-8);
    }

    #[test]
    fn popt_preconditions() {
        let quad = NoiseQuadrature::default();
        let c = Constellation::bpsk();
        assert!(find_popt(&c, ScalarWiretap::new(0.5, 2.0).unwrap(), &quad, 1e-6).is_err());
        assert!(find_popt(&c, ScalarWiretap::new(1.0, 1.0).unwrap(), &quad, 1e-6).is_err());
        assert!(find_popt(&c, ScalarWiretap::new(2.0, 0.5).unwrap(), &quad, 0.0).is_err());
    }

    #[test]
    fn beta_alpha_closed_forms() {
        let s = ScalarWiretap::new(2.0, 0.5).unwrap();
        let g = beta_alpha_curve(&MmseModel::Gaussian, s, &[0.5, 1.0]).unwrap();
        assert!((g[0].1 - 0.8).abs() < 1e-12);
        assert_eq!(g[1].1, 1.0);
        let e = beta_alpha_curve(&MmseModel::Exponential, s, &[0.0625]).unwrap();
        assert!((e[0].1 - 0.5).abs() < 1e-12);
        assert!(beta_alpha_curve(&MmseModel::Gaussian, s, &[0.0]).is_err());
        assert!(beta_alpha_curve(&MmseModel::Gaussian, s, &[1.5]).is_err());
    }

    #[test]
    fn generic_inverse_recovers_snr() {
        let quad = NoiseQuadrature::default();
        let c = Constellation::bpsk();
        let m = MmseModel::constellation(&c, &quad);
        for rho in [0.05, 0.7, 3.0] {
            let alpha = m.mmse(rho);
            let back = m.inverse(alpha);
            assert!((m.mmse(back) - alpha).abs() <= 1e-10);
            assert!((back - rho).abs() < 1e-6 * rho.max(1.0));
        }
    }
}
