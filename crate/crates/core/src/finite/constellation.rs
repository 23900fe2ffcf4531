use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ENERGY_TOL: f64 = 1e-12;

/// Equiprobable M-ary alphabet with unit average energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
}

impl Constellation {
    /// Validates an explicit alphabet; points must already have unit average energy.
    pub fn new(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::input("a constellation needs at least two points"));
        }
        if points
            .iter()
            .any(|p| !p.re.is_finite() || !p.im.is_finite())
        {
            return Err(Error::input("constellation points must be finite"));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].iter().any(|q| (p - q).norm() <= 1e-12) {
                return Err(Error::input(format!(
                    "constellation point {i} is duplicated"
                )));
            }
        }
        let energy = mean_energy(&points);
        if (energy - 1.0).abs() > ENERGY_TOL {
            return Err(Error::input(format!(
                "average symbol energy is {energy}, expected 1"
            )));
        }
        Ok(Self {
            name: name.into(),
            points,
        })
    }

    /// Rescales `points` to unit average energy before validating.
    pub fn normalized(name: impl Into<String>, points: Vec<Complex64>) -> Result<Self> {
        let energy = mean_energy(&points);
        if !(energy > 0.0) {
            return Err(Error::input("constellation has zero energy"));
        }
        let s = Complex64::new(energy.sqrt().recip(), 0.0);
        Self::new(name, points.into_iter().map(|p| p * s).collect())
    }

    pub fn bpsk() -> Self {
        Self::builtin(
            "bpsk",
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        )
    }

    pub fn qpsk() -> Self {
        let a = FRAC_1_SQRT_2;
        Self::builtin(
            "qpsk",
            vec![
                Complex64::new(a, a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
                Complex64::new(a, -a),
            ],
        )
    }

    pub fn psk8() -> Self {
        Self::builtin(
            "8psk",
            (0..8)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0))
                .collect(),
        )
    }

    pub fn qam16() -> Self {
        let s = 10f64.sqrt().recip();
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let pts = levels
            .iter()
            .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i * s, q * s)))
            .collect();
        Self::builtin("16qam", pts)
    }

    fn builtin(name: &str, points: Vec<Complex64>) -> Self {
        Self::new(name, points).expect("built-in constellations are valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// `log2 M`, the high-SNR limit of the mutual information.
    pub fn max_bits(&self) -> f64 {
        (self.points.len() as f64).log2()
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }
}

fn mean_energy(points: &[Complex64]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len().max(1) as f64
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" | "4qam" => Ok(Self::qpsk()),
            "8psk" => Ok(Self::psk8()),
            "16qam" => Ok(Self::qam16()),
            other => Err(Error::input(format!(
                "unknown constellation `{other}` (expected bpsk, qpsk, 8psk or 16qam)"
            ))),
        }
    }
}
