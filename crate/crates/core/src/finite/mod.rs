//! Finite-alphabet mutual information and MMSE over complex AWGN, and the
//! power caps derived from them.
//!
//! For `y = sqrt(ρ) x + n`, `n ~ CN(0, 1)` and `x` uniform on the alphabet,
//! conditioning on the transmitted `a_i` and substituting `y = sqrt(ρ) a_i + n`
//! makes the noise density the integration weight, so both quantities reduce
//! to expectations over `n` of log-sum-exp expressions.

mod constellation;
mod curves;
mod quadrature;

pub use constellation::Constellation;
pub use curves::{
    beta_alpha_curve, find_popt, find_popt_with, mmse_power_curve, subchannel_caps,
    ConstellationMmse, MmseCurve, MmseModel, MmsePowerPoint, POPT_CAP,
};
pub use quadrature::{
    gauss_hermite, gaussian_trapezoid, NoiseQuadrature, QuadratureScheme, QuadratureSpec,
    DEFAULT_NODES, MIN_NODES,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsvd::SubchannelSet;
use crate::linalg::LOG2_E;

/// Scalar Gaussian wiretap channel `y_D = sqrt(P) h x + n_D`, `y_E = sqrt(P) z x + n_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarWiretap {
    /// `|h|^2`.
    pub h2: f64,
    /// `|z|^2`.
    pub z2: f64,
}

impl ScalarWiretap {
    pub fn new(h2: f64, z2: f64) -> Result<Self> {
        if !(h2 >= 0.0 && z2 >= 0.0 && h2.is_finite() && z2.is_finite()) {
            return Err(Error::input("channel gains must be finite and nonnegative"));
        }
        Ok(Self { h2, z2 })
    }
}

fn check_snr(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!(
            "SNR must be finite and nonnegative, got {rho}"
        )))
    }
}

/// Differences `sqrt(ρ) (a_i - a_m)` for every ordered pair.
fn scaled_differences(c: &Constellation, rho: f64) -> Vec<Vec<Complex64>> {
    let s = rho.sqrt();
    let pts = c.points();
    pts.iter()
        .map(|ai| pts.iter().map(|am| (ai - am) * s).collect())
        .collect()
}

/// `I(ρ)` in bits for equiprobable inputs from `c`.
pub fn mutual_information(c: &Constellation, rho: f64, quad: &NoiseQuadrature) -> Result<f64> {
    check_snr(rho)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let diffs = scaled_differences(c, rho);
    let m = c.order();
    let mut exps = vec![0.0; m];
    let mut acc = 0.0;
    for row in &diffs {
        for (n, w) in quad.iter() {
            let base = n.norm_sqr();
            for (e, d) in exps.iter_mut().zip(row) {
                *e = base - (n + d).norm_sqr();
            }
            acc += w * log_sum_exp(&exps);
        }
    }
    let bits = c.max_bits() - acc / m as f64 * LOG2_E;
    Ok(bits.clamp(0.0, c.max_bits()))
}

/// `E|x - E[x|y]|^2` at SNR `ρ`.
pub fn mmse(c: &Constellation, rho: f64, quad: &NoiseQuadrature) -> Result<f64> {
    check_snr(rho)?;
    let pts = c.points();
    let m = c.order();
    if rho == 0.0 {
        let mean = c.mean();
        return Ok(pts.iter().map(|p| (p - mean).norm_sqr()).sum::<f64>() / m as f64);
    }
    let diffs = scaled_differences(c, rho);
    let mut exps = vec![0.0; m];
    let mut acc = 0.0;
    for (ai, row) in pts.iter().zip(&diffs) {
        for (n, w) in quad.iter() {
            let mut top = f64::NEG_INFINITY;
            for (e, d) in exps.iter_mut().zip(row) {
                *e = -(n + d).norm_sqr();
                top = top.max(*e);
            }
            let mut norm = 0.0;
            let mut est = Complex64::new(0.0, 0.0);
            for (e, am) in exps.iter().zip(pts) {
                let p = (e - top).exp();
                norm += p;
                est += am * p;
            }
            acc += w * (ai - est / norm).norm_sqr();
        }
    }
    Ok((acc / m as f64).max(0.0))
}

/// `|dI/dρ - MMSE(ρ) log2 e|` with a central difference of step `drho`.
pub fn i_mmse_residual(
    c: &Constellation,
    rho: f64,
    drho: f64,
    quad: &NoiseQuadrature,
) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::input("rho must be positive"));
    }
    if !(drho > 0.0 && drho <= rho / 10.0) {
        return Err(Error::input("drho must lie in (0, rho/10]"));
    }
    let slope = (mutual_information(c, rho + drho, quad)?
        - mutual_information(c, rho - drho, quad)?)
        / (2.0 * drho);
    Ok((slope - mmse(c, rho, quad)? * LOG2_E).abs())
}

/// `I(|h|^2 P) - I(|z|^2 P)`.
pub fn secrecy_rate_finite(
    c: &Constellation,
    s: ScalarWiretap,
    p: f64,
    quad: &NoiseQuadrature,
) -> Result<f64> {
    check_snr(p)?;
    if s.h2 == s.z2 {
        return Ok(0.0);
    }
    Ok(mutual_information(c, s.h2 * p, quad)? - mutual_information(c, s.z2 * p, quad)?)
}

/// `Σ I(a_i q_i) - I(b_i q_i)` over the subchannels.
pub fn sum_secrecy_finite(
    s: &SubchannelSet,
    c: &Constellation,
    q: &[f64],
    quad: &NoiseQuadrature,
) -> Result<f64> {
    if q.len() != s.len() {
        return Err(Error::input(format!(
            "power vector has length {} but there are {} subchannels",
            q.len(),
            s.len()
        )));
    }
    s.channels
        .iter()
        .zip(q)
        .map(|(ch, &qi)| {
            if !(qi >= 0.0) || !qi.is_finite() {
                return Err(Error::input(
                    "subchannel powers must be finite and nonnegative",
                ));
            }
            Ok(mutual_information(c, ch.a * qi, quad)? - mutual_information(c, ch.b * qi, quad)?)
        })
        .sum()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> NoiseQuadrature {
        NoiseQuadrature::default()
    }

    #[test]
    fn endpoints() {
        let q = quad();
        for c in [
            Constellation::bpsk(),
            Constellation::qpsk(),
            Constellation::qam16(),
        ] {
            assert!(mutual_information(&c, 0.0, &q).unwrap().abs() <= 1e-9);
            assert!((mmse(&c, 0.0, &q).unwrap() - 1.0).abs() <= 1e-9);
        }
        let b = Constellation::bpsk();
        assert!(mutual_information(&b, 100.0, &q).unwrap() >= 0.9999);
        assert!(mmse(&b, 100.0, &q).unwrap() <= 1e-3);
    }

    #[test]
    fn small_snr_mmse_is_continuous_at_zero() {
        let q = quad();
        let c = Constellation::qpsk();
        assert!((mmse(&c, 1e-9, &q).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_snr_rejected() {
        let q = quad();
        let c = Constellation::bpsk();
        assert!(mutual_information(&c, -1.0, &q).is_err());
        assert!(mmse(&c, -1.0, &q).is_err());
        assert!(i_mmse_residual(&c, 1.0, 0.5, &q).is_err());
    }

    // BPSK reduces to the real axis: with u = Re n ~ N(0, 1/2),
    // I = 1 - E log2(1 + exp(-4 sqrt(ρ) u - 4ρ)) and MMSE = 1 - E tanh^2(2 sqrt(ρ)(sqrt(ρ) + u)).
    fn bpsk_oracle(rho: f64) -> (f64, f64) {
        let n = 400_000;
        let (lo, hi) = (-12.0f64, 12.0f64);
        let h = (hi - lo) / n as f64;
        let sr = rho.sqrt();
        let mut mi = 0.0;
        let mut err = 0.0;
        for i in 0..=n {
            let u = lo + i as f64 * h;
            let wt = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let dens = (-u * u).exp() / std::f64::consts::PI.sqrt();
            let t = -4.0 * sr * u - 4.0 * rho;
            let softplus = if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            };
            mi += wt * dens * softplus;
            let th = (2.0 * sr * (sr + u)).tanh();
            err += wt * dens * (1.0 - th * th);
        }
        (1.0 - mi * h / 3.0 * LOG2_E, err * h / 3.0)
    }

    #[test]
    fn bpsk_matches_real_axis_oracle() {
        let q = quad();
        let c = Constellation::bpsk();
        for rho in [0.1, 1.0, 3.0, 10.0] {
            let (mi, mm) = bpsk_oracle(rho);
            let got_mi = mutual_information(&c, rho, &q).unwrap();
            let got_mm = mmse(&c, rho, &q).unwrap();
            assert!((got_mi - mi).abs() < 1e-6, "rho={rho}: {got_mi} vs {mi}");
            assert!((got_mm - mm).abs() < 1e-6, "rho={rho}: {got_mm} vs {mm}");
        }
    }

    #[test]
    fn bpsk_mi_matches_monte_carlo() {
        let c = Constellation::bpsk();
        let mc = QuadratureSpec::monte_carlo(2_000_000, 11).build().unwrap();
        let a = mutual_information(&c, 1.0, &mc).unwrap();
        let b = mutual_information(&c, 1.0, &quad()).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn i_mmse_identity_bpsk_and_qpsk() {
        let q = quad();
        for c in [Constellation::bpsk(), Constellation::qpsk()] {
            for rho in [0.1, 1.0, 2.0, 5.0] {
                let r = i_mmse_residual(&c, rho, 1e-4 * rho.max(1.0), &q).unwrap();
                assert!(r <= 1e-4, "{} rho={rho}: {r}", c.name());
            }
        }
    }

    #[test]
    fn secrecy_rate_edge_cases() {
        let q = quad();
        let c = Constellation::bpsk();
        let s = ScalarWiretap::new(2.0, 0.5).unwrap();
        assert_eq!(secrecy_rate_finite(&c, s, 0.0, &q).unwrap(), 0.0);
        let same = ScalarWiretap::new(1.3, 1.3).unwrap();
        assert_eq!(secrecy_rate_finite(&c, same, 4.0, &q).unwrap(), 0.0);
        assert!(secrecy_rate_finite(&c, s, 1.0, &q).unwrap() > 0.0);
        assert!(secrecy_rate_finite(&c, s, 200.0, &q).unwrap() < 1e-6);
    }

    #[test]
    fn quadrature_converges_at_default_order() {
        let c = Constellation::bpsk();
        let base = quad();
        let doubled = QuadratureSpec::trapezoid(2 * DEFAULT_NODES)
            .build()
            .unwrap();
        for rho in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            let d = (mutual_information(&c, rho, &base).unwrap()
                - mutual_information(&c, rho, &doubled).unwrap())
            .abs();
            assert!(d <= 1e-8, "rho={rho}: {d:e}");
        }
    }
}
