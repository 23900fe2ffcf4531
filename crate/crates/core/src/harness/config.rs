//! TOML experiment configuration.
//!
//! ```toml
//! cases = ["gaussian", "finite_no_pc", "finite_pc"]
//!
//! [channel]
//! n0 = 1.0
//! h = [[[0.08, -0.12], [1.97, 0.28]], [[0.31, -0.15], [-0.83, 0.53]]]  # rows of [re, im]
//! eavesdroppers = [{ antennas = 3, sigma2 = 0.25 }]
//!
//! [grid]           # or: values = [0.1, 1.0, 10.0]
//! min = 0.1
//! max = 1000.0
//! count = 40
//! spacing = "log"
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::{Constellation, QuadratureScheme, QuadratureSpec, DEFAULT_NODES};
use crate::gsvd::DEFAULT_RANK_TOL;
use crate::linalg::CMatrix;
use crate::model::{ChannelInstance, Eavesdropper};
use crate::rng::RngKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Gaussian input, optimal allocation.
    Gaussian,
    /// BPSK-style finite input on the Gaussian allocation.
    FiniteNoPc,
    /// Finite input with per-subchannel power caps.
    FinitePc,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Gaussian, Case::FiniteNoPc, Case::FinitePc];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n0: f64,
    /// Budget used by single-point solves; sweeps take it from the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    /// Row-major `[re, im]` entries.
    pub h: Vec<Vec<[f64; 2]>>,
    pub eavesdroppers: Vec<Eavesdropper>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstellationConfig {
    Named(String),
    Explicit {
        #[serde(default = "custom_name")]
        name: String,
        points: Vec<[f64; 2]>,
    },
}

fn custom_name() -> String {
    "custom".to_string()
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        ConstellationConfig::Named("bpsk".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Explicit {
        values: Vec<f64>,
    },
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::Range {
            min: 0.1,
            max: 1000.0,
            count: 40,
            spacing: Spacing::Log,
        }
    }
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GridConfig::Explicit { values } => values.clone(),
            GridConfig::Range {
                min,
                max,
                count,
                spacing,
            } => {
                if *count == 0 {
                    return Err(Error::Config("grid.count must be positive".into()));
                }
                if !(*min > 0.0 && max >= min && max.is_finite()) {
                    return Err(Error::Config("grid needs 0 < min <= max".into()));
                }
                if *count == 1 {
                    vec![*min]
                } else {
                    let n = (*count - 1) as f64;
                    (0..*count)
                        .map(|i| {
                            let t = i as f64 / n;
                            if i == 0 {
                                *min
                            } else if i == *count - 1 {
                                *max
                            } else {
                                match spacing {
                                    Spacing::Linear => min + t * (max - min),
                                    Spacing::Log => (min.ln() + t * (max.ln() - min.ln())).exp(),
                                }
                            }
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(Error::Config("P0 grid is empty".into()));
        }
        if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Config(
                "P0 grid values must be positive and finite".into(),
            ));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("P0 grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default)]
    pub scheme: QuadratureScheme,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub rng: RngKind,
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

fn default_mc_samples() -> usize {
    100_000
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::Trapezoid,
            nodes: DEFAULT_NODES,
            mc_samples: default_mc_samples(),
            seed: 0,
            rng: RngKind::Chacha20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_mu_tol")]
    pub mu_tol: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

fn default_mu_tol() -> f64 {
    1e-10
}

fn default_delta() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: default_rank_tol(),
            mu_tol: default_mu_tol(),
            delta: default_delta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "all_cases")]
    pub cases: Vec<Case>,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub constellation: ConstellationConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn all_cases() -> Vec<Case> {
    Case::ALL.to_vec()
}

/// The bundled three-antenna experiment.
pub const FIG2_TOML: &str = include_str!("../../examples/fig2.toml");

impl ExperimentConfig {
    pub fn fig2() -> Self {
        Self::from_toml_str(FIG2_TOML).expect("bundled config is valid")
    }

    /// Parses and validates TOML text. Syntax errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("rank_tol", t.rank_tol),
            ("mu_tol", t.mu_tol),
            ("delta", t.delta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive")));
            }
        }
        if self.cases.is_empty() {
            return Err(Error::Config("`cases` must list at least one case".into()));
        }
        self.grid.values()?;
        self.channel_instance(self.channel.p0.unwrap_or(1.0))?;
        self.constellation()?;
        self.quadrature_spec()
            .build()
            .map_err(|e| Error::Config(format!("quadrature: {e}")))?;
        Ok(())
    }

    pub fn h_matrix(&self) -> Result<CMatrix> {
        let rows = &self.channel.h;
        let n_d = rows.len();
        let n_s = rows.first().map_or(0, |r| r.len());
        if n_d == 0 || n_s == 0 {
            return Err(Error::Config("channel.h must be a nonempty matrix".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n_s) {
            return Err(Error::Config(format!(
                "channel.h row {i} has {} entries, expected {n_s}",
                rows[i].len()
            )));
        }
        Ok(CMatrix::from_fn(n_d, n_s, |i, j| {
            let [re, im] = rows[i][j];
            Complex64::new(re, im)
        }))
    }

    pub fn channel_instance(&self, p0: f64) -> Result<ChannelInstance> {
        ChannelInstance::new(
            self.h_matrix()?,
            self.channel.eavesdroppers.clone(),
            self.channel.n0,
            p0,
        )
        .map_err(|e| Error::Config(format!("channel: {e}")))
    }

    pub fn constellation(&self) -> Result<Constellation> {
        match &self.constellation {
            ConstellationConfig::Named(n) => n
                .parse()
                .map_err(|e| Error::Config(format!("constellation: {e}"))),
            ConstellationConfig::Explicit { name, points } => Constellation::normalized(
                name.clone(),
                points
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect(),
            )
            .map_err(|e| Error::Config(format!("constellation: {e}"))),
        }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let q = &self.quadrature;
        QuadratureSpec {
            scheme: q.scheme,
            nodes: q.nodes,
            mc_samples: q.mc_samples,
            seed: q.seed,
        }
    }

    pub fn wants(&self, case: Case) -> bool {
        self.cases.contains(&case)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[channel]
n0 = 1.0
h = [[[2.0, 0.0]]]
eavesdroppers = [{ antennas = 1, sigma2 = 1.0 }]
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.cases, Case::ALL.to_vec());
        let grid = cfg.grid.values().unwrap();
        assert_eq!(grid.len(), 40);
        assert!((grid[0] - 0.1).abs() < 1e-15 && grid[39] == 1000.0);
        assert_eq!(cfg.constellation().unwrap(), Constellation::bpsk());
        assert_eq!(cfg.quadrature.nodes, DEFAULT_NODES);
    }

    #[test]
    fn syntax_errors_report_line() {
        let bad = "[channel]\nn0 = 1.0\nh = [[[1.0, 0.0]]\n";
        let err = ExperimentConfig::from_toml_str(bad)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn semantic_errors_rejected() {
        let ragged = MINIMAL.replace("[[[2.0, 0.0]]]", "[[[2.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]]");
        assert!(ExperimentConfig::from_toml_str(&ragged).is_err());
        let neg = MINIMAL.replace("n0 = 1.0", "n0 = -1.0");
        assert!(ExperimentConfig::from_toml_str(&neg).is_err());
        let grid = format!("{MINIMAL}\n[grid]\nvalues = [1.0, 0.5]\n");
        assert!(ExperimentConfig::from_toml_str(&grid).is_err());
        let tol = format!("{MINIMAL}\n[tolerances]\ndelta = 0.0\n");
        assert!(ExperimentConfig::from_toml_str(&tol).is_err());
        let unknown = format!("{MINIMAL}\n[quadrature]\nnodez = 4\n");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
    }

    #[test]
    fn explicit_constellation_and_linear_grid() {
        let text = format!(
            "{MINIMAL}\n[constellation]\nname = \"ook\"\npoints = [[0.0, 0.0], [2.0, 0.0]]\n\n[grid]\nmin = 1.0\nmax = 3.0\ncount = 3\nspacing = \"linear\"\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let c = cfg.constellation().unwrap();
        assert_eq!(c.name(), "ook");
        assert!((c.points()[1].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cfg.grid.values().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }
}
