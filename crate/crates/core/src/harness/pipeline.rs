//! End-to-end evaluation of the three allocation cases over a budget grid.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Case, ExperimentConfig};
use crate::allocator::{solve_gaussian_with, AllocationProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::finite::{subchannel_caps, sum_secrecy_finite, Constellation, NoiseQuadrature};
use crate::gsvd::{extract_subchannels, gsvd_decompose, GsvdFactors, SubchannelSet};
use crate::model::{worst_eavesdropper, ChannelInstance, EquivalentEavesdropper};

/// Rates and allocations at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub p0: f64,
    pub rs_gaussian: Option<f64>,
    pub rs_finite_no_pc: Option<f64>,
    pub rs_finite_pc: Option<f64>,
    /// Gaussian-optimal powers, shared by the first two cases.
    pub q_gaussian: Vec<f64>,
    pub q_finite_pc: Option<Vec<f64>>,
}

/// Everything that does not depend on the budget, prepared once.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub instance: ChannelInstance,
    pub equivalent: EquivalentEavesdropper,
    pub factors: GsvdFactors,
    pub subchannels: SubchannelSet,
    pub constellation: Constellation,
    pub quadrature: NoiseQuadrature,
    /// Finite-alphabet power caps, present when the capped case is requested.
    pub caps: Option<Vec<f64>>,
    pub cases: Vec<Case>,
    pub options: SolverOptions,
}

impl Pipeline {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let instance = cfg.channel_instance(cfg.channel.p0.unwrap_or(1.0))?;
        let constellation = cfg.constellation()?;
        let quadrature = cfg.quadrature_spec().build()?;
        Self::new(instance, constellation, quadrature, cfg.cases.clone(), cfg)
    }

    fn new(
        instance: ChannelInstance,
        constellation: Constellation,
        quadrature: NoiseQuadrature,
        cases: Vec<Case>,
        cfg: &ExperimentConfig,
    ) -> Result<Self> {
        let equivalent = worst_eavesdropper(&instance)?;
        let factors = gsvd_decompose(instance.h(), &equivalent.z, cfg.tolerances.rank_tol)?;
        let subchannels = extract_subchannels(&factors, instance.n0())?;
        let caps = if cases.contains(&Case::FinitePc) {
            Some(subchannel_caps(
                &subchannels,
                &constellation,
                &quadrature,
                cfg.tolerances.delta,
            )?)
        } else {
            None
        };
        Ok(Self {
            instance,
            equivalent,
            factors,
            subchannels,
            constellation,
            quadrature,
            caps,
            cases,
            options: SolverOptions {
                budget_tol: cfg.tolerances.mu_tol,
                ..SolverOptions::default()
            },
        })
    }

    fn wants(&self, c: Case) -> bool {
        self.cases.contains(&c)
    }

    /// Runs all requested cases at budget `p0`.
    pub fn evaluate(&self, p0: f64) -> Result<SweepRecord> {
        let base = AllocationProblem::new(self.subchannels.clone(), p0, None)?;
        let gaussian = solve_gaussian_with(&base, self.options)?;
        let finite = |q: &[f64]| -> Result<f64> {
            Ok(
                sum_secrecy_finite(&self.subchannels, &self.constellation, q, &self.quadrature)?
                    .max(0.0),
            )
        };

        let rs_finite_no_pc = if self.wants(Case::FiniteNoPc) {
            Some(finite(&gaussian.q)?)
        } else {
            None
        };
        let (rs_finite_pc, q_finite_pc) = match (&self.caps, self.wants(Case::FinitePc)) {
            (Some(caps), true) => {
                let capped =
                    AllocationProblem::new(self.subchannels.clone(), p0, Some(caps.clone()))?;
                let sol = solve_gaussian_with(&capped, self.options)?;
                (Some(finite(&sol.q)?), Some(sol.q))
            }
            _ => (None, None),
        };
        Ok(SweepRecord {
            p0,
            rs_gaussian: self
                .wants(Case::Gaussian)
                .then_some(gaussian.objective_gaussian),
            rs_finite_no_pc,
            rs_finite_pc,
            q_gaussian: gaussian.q,
            q_finite_pc,
        })
    }

    /// Evaluates every grid point; results keep grid order.
    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<SweepRecord>> {
        grid.par_iter().map(|&p0| self.evaluate(p0)).collect()
    }
}

/// Runs the configured cases over the configured grid.
pub fn run_cases(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let grid = cfg.grid.values()?;
    Pipeline::from_config(cfg)?.sweep(&grid)
}

/// [`run_cases`] on a dedicated pool of `threads` workers (`None` = rayon default).
pub fn run_cases_on(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(Vec<SweepRecord>, Duration)> {
    let start = Instant::now();
    let records = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_cases(cfg))?,
        None => run_cases(cfg)?,
    };
    Ok((records, start.elapsed()))
}

/// Shape statistics of a sweep, mainly for the uncapped finite-alphabet curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub finite_no_pc_peak_p0: Option<f64>,
    pub finite_no_pc_peak: Option<f64>,
    pub finite_no_pc_terminal: Option<f64>,
    pub finite_pc_terminal: Option<f64>,
    pub gaussian_terminal: Option<f64>,
}

pub fn summarize(records: &[SweepRecord]) -> SweepSummary {
    let peak = records
        .iter()
        .filter_map(|r| r.rs_finite_no_pc.map(|v| (r.p0, v)))
        .fold(None::<(f64, f64)>, |acc, (p, v)| match acc {
            Some((_, best)) if best >= v => acc,
            _ => Some((p, v)),
        });
    let last = records.last();
    SweepSummary {
        finite_no_pc_peak_p0: peak.map(|p| p.0),
        finite_no_pc_peak: peak.map(|p| p.1),
        finite_no_pc_terminal: last.and_then(|r| r.rs_finite_no_pc),
        finite_pc_terminal: last.and_then(|r| r.rs_finite_pc),
        gaussian_terminal: last.and_then(|r| r.rs_gaussian),
    }
}
