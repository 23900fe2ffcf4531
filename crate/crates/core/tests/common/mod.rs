#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use wiretap_core::gsvd::SubchannelSet;
use wiretap_core::harness::{ExperimentConfig, Pipeline};
use wiretap_core::rng::RngKind;
use wiretap_core::CMatrix;

pub fn rng(seed: u64) -> ChaCha20Rng {
    RngKind::Chacha20.seeded(seed)
}

/// Entries i.i.d. `CN(0, 1)`.
pub fn random_cmatrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

pub fn fig2_pipeline() -> (ExperimentConfig, Pipeline) {
    let cfg = ExperimentConfig::fig2();
    let pipe = Pipeline::from_config(&cfg).expect("bundled pipeline");
    (cfg, pipe)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// BPSK over complex AWGN reduces to the real axis with noise `N(0, 1/2)`:
/// `I = 1 - E log2(1 + exp(-4ρ - 4√ρ n))`. Composite Simpson on `[-9, 9]`.
pub fn bpsk_mi_1d(rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    const N: usize = 4000;
    let (lo, hi) = (-9.0f64, 9.0f64);
    let h = (hi - lo) / N as f64;
    let sr = rho.sqrt();
    let f =
        |n: f64| (-n * n).exp() / std::f64::consts::PI.sqrt() * softplus(-4.0 * rho - 4.0 * sr * n);
    let mut acc = f(lo) + f(hi);
    for j in 1..N {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + j as f64 * h);
    }
    1.0 - acc * h / 3.0 / std::f64::consts::LN_2
}

/// Argmax of `I(h2 P) - I(z2 P)` for BPSK by scanning `P = 0, step, 2 step, ...` up to `p_max`.
pub fn bpsk_dense_popt(h2: f64, z2: f64, step: f64, p_max: f64) -> (f64, f64) {
    let n = (p_max / step).round() as usize;
    (0..=n)
        .map(|i| {
            let p = i as f64 * step;
            (p, bpsk_mi_1d(h2 * p) - bpsk_mi_1d(z2 * p))
        })
        .fold((0.0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

fn objective(a: &[f64], b: &[f64], q: &[f64]) -> f64 {
    q.iter()
        .zip(a.iter().zip(b))
        .map(|(&q, (&a, &b))| ((1.0 + a * q) / (1.0 + b * q)).log2())
        .sum()
}

/// Two-pass grid search over the budget simplex `Σ c_i q_i = P0` for `l ≤ 3`.
/// The objective increases in every `q_i`, so the budget is tight at the optimum.
pub fn grid_oracle(s: &SubchannelSet, p0: f64) -> f64 {
    let (a, b, c) = (s.a(), s.b(), s.c());
    let eval = |t: &[f64]| {
        let q: Vec<f64> = t.iter().zip(&c).map(|(t, c)| t * p0 / c).collect();
        objective(&a, &b, &q)
    };
    match s.len() {
        0 => 0.0,
        1 => eval(&[1.0]),
        2 => {
            let scan = |lo: f64, hi: f64, n: usize| {
                (0..=n)
                    .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                    .map(|t| (t, eval(&[t, 1.0 - t])))
                    .fold(
                        (0.0, f64::NEG_INFINITY),
                        |m, x| if x.1 > m.1 { x } else { m },
                    )
            };
            let n = 2000;
            let (t, _) = scan(0.0, 1.0, n);
            let h = 1.0 / n as f64;
            scan((t - h).max(0.0), (t + h).min(1.0), n).1
        }
        3 => {
            let scan = |c0: (f64, f64), half: f64, n: usize| {
                let mut best = ((0.0, 0.0), f64::NEG_INFINITY);
                for i in 0..=n {
                    for j in 0..=n {
                        let t1 = (c0.0 - half + 2.0 * half * i as f64 / n as f64).clamp(0.0, 1.0);
                        let t2 = (c0.1 - half + 2.0 * half * j as f64 / n as f64).clamp(0.0, 1.0);
                        if t1 + t2 > 1.0 {
                            continue;
                        }
                        let v = eval(&[t1, t2, 1.0 - t1 - t2]);
                        if v > best.1 {
                            best = ((t1, t2), v);
                        }
                    }
                }
                best
            };
            let n = 300;
            let (c0, _) = scan((0.5, 0.5), 0.5, n);
            let h = 1.0 / n as f64;
            let (c1, _) = scan(c0, h, n);
            scan(c1, h / n as f64 * 2.0, 50).1
        }
        l => panic!("grid oracle supports at most 3 subchannels, got {l}"),
    }
}
