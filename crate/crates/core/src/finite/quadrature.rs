//! Integration rules over circularly-symmetric complex Gaussian noise `CN(0, 1)`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngKind;

pub const DEFAULT_NODES: usize = 96;
pub const MIN_NODES: usize = 16;
/// Gauss-Hermite root finding is reliable up to this order.
pub const MAX_GH_NODES: usize = 150;
/// Truncation half-width of the trapezoidal rule, `exp(-L^2) ~ 4e-25`.
pub const TRAPEZOID_HALF_WIDTH: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    /// Tensor trapezoidal rule under the Gaussian weight, `nodes^2` points.
    /// Converges geometrically for the analytic integrands used here.
    #[default]
    Trapezoid,
    /// Tensor Gauss-Hermite rule, `nodes^2` points.
    GaussHermite,
    /// Equal-weight Monte-Carlo noise draws.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Nodes per real axis for the deterministic rules.
    pub nodes: usize,
    /// Sample count for the Monte-Carlo scheme.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::Trapezoid,
            nodes: DEFAULT_NODES,
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    pub fn trapezoid(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    pub fn gauss_hermite(nodes: usize) -> Self {
        Self {
            scheme: QuadratureScheme::GaussHermite,
            nodes,
            ..Self::default()
        }
    }

    pub fn monte_carlo(mc_samples: usize, seed: u64) -> Self {
        Self {
            scheme: QuadratureScheme::MonteCarlo,
            mc_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<NoiseQuadrature> {
        NoiseQuadrature::new(self)
    }
}

/// Points and weights with `Σ w f(n_i) ≈ E f(n)` for `n ~ CN(0, 1)`.
#[derive(Debug, Clone)]
pub struct NoiseQuadrature {
    spec: QuadratureSpec,
    points: Vec<Complex64>,
    weights: Vec<f64>,
}

impl NoiseQuadrature {
    pub fn new(spec: &QuadratureSpec) -> Result<Self> {
        let (points, weights) = match spec.scheme {
            QuadratureScheme::Trapezoid | QuadratureScheme::GaussHermite => {
                if spec.nodes < MIN_NODES {
                    return Err(Error::input(format!(
                        "need at least {MIN_NODES} quadrature nodes per axis"
                    )));
                }
                let (x, w) = if spec.scheme == QuadratureScheme::Trapezoid {
                    gaussian_trapezoid(spec.nodes, TRAPEZOID_HALF_WIDTH)
                } else {
                    if spec.nodes > MAX_GH_NODES {
                        return Err(Error::input(format!(
                            "Gauss-Hermite supports at most {MAX_GH_NODES} nodes per axis"
                        )));
                    }
                    let (x, w) = gauss_hermite(spec.nodes);
                    let sp = std::f64::consts::PI.sqrt();
                    (x, w.into_iter().map(|v| v / sp).collect())
                };
                let mut pts = Vec::with_capacity(x.len() * x.len());
                let mut wts = Vec::with_capacity(x.len() * x.len());
                for (xr, wr) in x.iter().zip(&w) {
                    for (xi, wi) in x.iter().zip(&w) {
                        pts.push(Complex64::new(*xr, *xi));
                        wts.push(wr * wi);
                    }
                }
                (pts, wts)
            }
            QuadratureScheme::MonteCarlo => {
                if spec.mc_samples == 0 {
                    return Err(Error::input(
                        "Monte-Carlo quadrature needs at least one sample",
                    ));
                }
                let mut rng = RngKind::Chacha20.seeded(spec.seed);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let pts = (0..spec.mc_samples)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                (pts, vec![1.0 / spec.mc_samples as f64; spec.mc_samples])
            }
        };
        Ok(Self {
            spec: *spec,
            points,
            weights,
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

impl Default for NoiseQuadrature {
    fn default() -> Self {
        Self::new(&QuadratureSpec::default()).expect("default quadrature is valid")
    }
}

/// Equispaced nodes on `[-l, l]` with weights `h exp(-x^2) / sqrt(pi)`,
/// rescaled to sum to one. Approximates `E f(x)` for `x ~ N(0, 1/2)`.
pub fn gaussian_trapezoid(n: usize, l: f64) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * l / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|j| -l + j as f64 * h).collect();
    let mut w: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    (x, w)
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule for weight `exp(-x^2)`.
///
/// Newton iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Ascending order.
    x.reverse();
    w.reverse();
    (x, w)
}
