//! Python bindings for `wiretap-core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wiretap_core::allocator::{kkt_residual, solve_gaussian_with, AllocationProblem};
use wiretap_core::finite::{
    self, Constellation, MmseModel, NoiseQuadrature, QuadratureSpec, ScalarWiretap, DEFAULT_NODES,
};
use wiretap_core::gsvd::{gsvd_decompose, DEFAULT_RANK_TOL};
use wiretap_core::harness::{summarize, ExperimentConfig, Pipeline, SweepRecord};
use wiretap_core::model::{jensen_gap_montecarlo, CovarianceMatrix};
use wiretap_core::rng::RngKind;
use wiretap_core::{CMatrix, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Input(_) | Error::Config(_) | Error::Serde(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::Degenerate(_) | Error::Decomposition(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn quadrature(nodes: usize) -> PyResult<NoiseQuadrature> {
    QuadratureSpec::trapezoid(nodes).build().map_err(to_py)
}

fn named(name: &str) -> PyResult<Constellation> {
    name.parse().map_err(to_py)
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows must have equal length"));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn record_dict<'py>(py: Python<'py>, r: &SweepRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("p0", r.p0)?;
    d.set_item("rs_gaussian", r.rs_gaussian)?;
    d.set_item("rs_finite_no_pc", r.rs_finite_no_pc)?;
    d.set_item("rs_finite_pc", r.rs_finite_pc)?;
    d.set_item("q_gaussian", r.q_gaussian.clone())?;
    d.set_item("q_finite_pc", r.q_finite_pc.clone())?;
    Ok(d)
}

/// `I(X; sqrt(rho) X + N)` in bits for a named constellation.
#[pyfunction]
#[pyo3(signature = (rho, constellation = "bpsk", nodes = DEFAULT_NODES))]
fn mutual_information(rho: f64, constellation: &str, nodes: usize) -> PyResult<f64> {
    finite::mutual_information(&named(constellation)?, rho, &quadrature(nodes)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rho, constellation = "bpsk", nodes = DEFAULT_NODES))]
fn mmse(rho: f64, constellation: &str, nodes: usize) -> PyResult<f64> {
    finite::mmse(&named(constellation)?, rho, &quadrature(nodes)?).map_err(to_py)
}

/// Power maximizing the scalar finite-alphabet secrecy rate; `inf` when it never peaks.
#[pyfunction]
#[pyo3(signature = (h2, z2, delta = 1e-6, constellation = "bpsk", nodes = DEFAULT_NODES))]
fn find_popt(h2: f64, z2: f64, delta: f64, constellation: &str, nodes: usize) -> PyResult<f64> {
    let s = ScalarWiretap::new(h2, z2).map_err(to_py)?;
    finite::find_popt(&named(constellation)?, s, &quadrature(nodes)?, delta).map_err(to_py)
}

/// `[(alpha, beta), ...]` for `model` in {"gaussian", "exponential", "constellation"}.
#[pyfunction]
#[pyo3(signature = (h2, z2, alphas, model = "constellation", constellation = "bpsk", nodes = DEFAULT_NODES))]
fn beta_alpha_curve(
    h2: f64,
    z2: f64,
    alphas: Vec<f64>,
    model: &str,
    constellation: &str,
    nodes: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let s = ScalarWiretap::new(h2, z2).map_err(to_py)?;
    let c = named(constellation)?;
    let q = quadrature(nodes)?;
    let m = match model {
        "gaussian" => MmseModel::Gaussian,
        "exponential" => MmseModel::Exponential,
        "constellation" => MmseModel::constellation(&c, &q),
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    };
    finite::beta_alpha_curve(&m, s, &alphas).map_err(to_py)
}

/// GSVD of `(h, z)` given as nested lists of complex numbers.
#[pyfunction]
#[pyo3(signature = (h, z, rank_tol = DEFAULT_RANK_TOL))]
fn gsvd<'py>(
    py: Python<'py>,
    h: Vec<Vec<Complex64>>,
    z: Vec<Vec<Complex64>>,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (h, z) = (matrix(h)?, matrix(z)?);
    let f = gsvd_decompose(&h, &z, rank_tol).map_err(to_py)?;
    let res = f.residuals(&h, &z);
    let d = PyDict::new(py);
    d.set_item("lambda_h", f.lambda_h.clone())?;
    d.set_item("lambda_z", f.lambda_z.clone())?;
    d.set_item("k", f.k)?;
    d.set_item("r", f.r)?;
    d.set_item("max_residual", res.max())?;
    Ok(d)
}

/// Gaussian-optimal powers for explicit subchannel gains.
#[pyfunction]
#[pyo3(signature = (a, b, c, p0, caps = None))]
fn solve_gaussian<'py>(
    py: Python<'py>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    p0: f64,
    caps: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let set = wiretap_core::gsvd::SubchannelSet::from_gains(&a, &b, &c).map_err(to_py)?;
    let p = AllocationProblem::new(set, p0, caps).map_err(to_py)?;
    let r = solve_gaussian_with(&p, Default::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("q", r.q.clone())?;
    d.set_item("objective", r.objective_gaussian)?;
    d.set_item("mu", r.mu)?;
    d.set_item("active_budget", r.active_budget)?;
    d.set_item("kkt", kkt_residual(&p, &r).max())?;
    Ok(d)
}

/// A prepared experiment: channel, decomposition, subchannels and caps.
#[pyclass(module = "wiretap")]
struct Experiment {
    config: ExperimentConfig,
    pipeline: Pipeline,
}

impl Experiment {
    fn build(config: ExperimentConfig) -> PyResult<Self> {
        let pipeline = Pipeline::from_config(&config).map_err(to_py)?;
        Ok(Self { config, pipeline })
    }
}

#[pymethods]
impl Experiment {
    /// The bundled three-antenna example.
    #[staticmethod]
    fn fig2() -> PyResult<Self> {
        Self::build(ExperimentConfig::fig2())
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Self::build(ExperimentConfig::from_toml_str(text).map_err(to_py)?)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Self::build(ExperimentConfig::load(path).map_err(to_py)?)
    }

    fn to_toml(&self) -> String {
        self.config.to_toml_string()
    }

    fn grid(&self) -> PyResult<Vec<f64>> {
        self.config.grid.values().map_err(to_py)
    }

    /// `(j0, gain2)` of the dominating eavesdropper.
    fn worst_eavesdropper(&self) -> (usize, f64) {
        (self.pipeline.equivalent.j0, self.pipeline.equivalent.gain2)
    }

    fn gsvd_max_residual(&self) -> f64 {
        let eq = &self.pipeline.equivalent;
        self.pipeline
            .factors
            .residuals(self.pipeline.instance.h(), &eq.z)
            .max()
    }

    fn subchannels<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.pipeline
            .subchannels
            .channels
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("index", s.index)?;
                d.set_item("lambda_h", s.lambda_h)?;
                d.set_item("lambda_z", s.lambda_z)?;
                d.set_item("a", s.a)?;
                d.set_item("b", s.b)?;
                d.set_item("c", s.c)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn caps(&self) -> Option<Vec<f64>> {
        self.pipeline.caps.clone()
    }

    fn evaluate<'py>(&self, py: Python<'py>, p0: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = py.detach(|| self.pipeline.evaluate(p0)).map_err(to_py)?;
        record_dict(py, &r)
    }

    /// Runs every case over `grid`, or the configured grid when omitted.
    #[pyo3(signature = (grid = None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        grid: Option<Vec<f64>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let grid = match grid {
            Some(g) => g,
            None => self.grid()?,
        };
        let records = py.detach(|| self.pipeline.sweep(&grid)).map_err(to_py)?;
        records.iter().map(|r| record_dict(py, r)).collect()
    }

    /// Peak and terminal values of a sweep over the configured grid.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.grid()?;
        let records = py.detach(|| self.pipeline.sweep(&grid)).map_err(to_py)?;
        let s = summarize(&records);
        let d = PyDict::new(py);
        d.set_item("finite_no_pc_peak_p0", s.finite_no_pc_peak_p0)?;
        d.set_item("finite_no_pc_peak", s.finite_no_pc_peak)?;
        d.set_item("finite_no_pc_terminal", s.finite_no_pc_terminal)?;
        d.set_item("finite_pc_terminal", s.finite_pc_terminal)?;
        d.set_item("gaussian_terminal", s.gaussian_terminal)?;
        Ok(d)
    }

    /// `(mc_mean, mc_stderr, bound)` for the Gaussian-optimal covariance at `p0`.
    #[pyo3(signature = (p0, samples = 100_000, seed = 1))]
    fn jensen_gap(
        &self,
        py: Python<'_>,
        p0: f64,
        samples: usize,
        seed: u64,
    ) -> PyResult<(f64, f64, f64)> {
        let pipe = &self.pipeline;
        let g = py
            .detach(|| {
                let inst = pipe.instance.with_p0(p0)?;
                let q = if pipe.subchannels.is_empty() {
                    CovarianceMatrix::zeros(inst.n_s())
                } else {
                    let p = AllocationProblem::new(pipe.subchannels.clone(), p0, None)?;
                    solve_gaussian_with(&p, pipe.options)?.covariance
                };
                jensen_gap_montecarlo(
                    &inst,
                    &pipe.equivalent,
                    &q,
                    samples,
                    seed,
                    RngKind::Chacha20,
                )
            })
            .map_err(to_py)?;
        Ok((g.mc_mean, g.mc_stderr, g.bound))
    }
}

#[pymodule]
fn wiretap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(mmse, m)?)?;
    m.add_function(wrap_pyfunction!(find_popt, m)?)?;
    m.add_function(wrap_pyfunction!(beta_alpha_curve, m)?)?;
    m.add_function(wrap_pyfunction!(gsvd, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gaussian, m)?)?;
    m.add_class::<Experiment>()?;
    Ok(())
}
