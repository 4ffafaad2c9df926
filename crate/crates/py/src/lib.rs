//! Python bindings: configuration, potentials, forward solves, sweeps,
//! estimates and reconstructions.

use std::path::PathBuf;

use polyscatter::Complex64;
use polyscatter::config::{validate, ExperimentConfig, ValidatedConfig};
use polyscatter::farfield::SweepDataset;
use polyscatter::forward::{BornOrder, SolveConfig};
use polyscatter::grid::{ComplexField, GridSpec};
use polyscatter::inverse::StrengthEstimate;
use polyscatter::{pipeline, Dim, Error};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        4 => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn dim(d: u32) -> PyResult<Dim> {
    Dim::try_from(d).map_err(to_py)
}

fn born_order(text: Option<&str>) -> PyResult<Option<BornOrder>> {
    text.map(|t| t.parse::<BornOrder>().map_err(|e| PyValueError::new_err(e.to_string())))
        .transpose()
}

/// A validated experiment configuration.
#[pyclass(module = "polyscatter", frozen)]
struct Config {
    inner: ValidatedConfig,
}

#[pymethods]
impl Config {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: pipeline::load_config(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = ExperimentConfig::from_toml_str(text).map_err(to_py)?;
        Ok(Self {
            inner: validate(&cfg).map_err(to_py)?,
        })
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.config.seed
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.grid.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.potential.n()
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    #[getter]
    fn directions(&self) -> Vec<Vec<f64>> {
        self.inner.directions.clone()
    }

    #[getter]
    fn taus(&self) -> Vec<f64> {
        self.inner.taus.clone()
    }

    fn kappas(&self) -> Vec<f64> {
        self.inner.kappas()
    }

    fn to_toml(&self) -> String {
        self.inner.config.to_toml_string()
    }

    /// Exact `â^c(ξ)` of the configured law.
    fn covariance_strength_hat(&self, xi: Vec<f64>) -> Complex64 {
        self.inner.potential.covariance_strength_hat(&xi)
    }

    /// Exact `â^r(ξ)` of the configured law.
    fn relation_strength_hat(&self, xi: Vec<f64>) -> Complex64 {
        self.inner.potential.relation_strength_hat(&xi)
    }

    fn __repr__(&self) -> String {
        format!("Config(hash={}, d={}, n={}, m={})", &self.inner.hash[..12], self.d(), self.n(), self.m())
    }
}

/// Complex samples on a periodic grid `[-L, L)^d`, row-major.
#[pyclass(module = "polyscatter", frozen)]
struct Field {
    inner: ComplexField,
}

#[pymethods]
impl Field {
    #[new]
    fn new(d: u32, half_width: f64, n_points: usize, values: Vec<Complex64>) -> PyResult<Self> {
        let grid = GridSpec::new(dim(d)?, half_width, n_points).map_err(to_py)?;
        Ok(Self {
            inner: ComplexField::new(grid, values).map_err(to_py)?,
        })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        let g = self.inner.spec();
        vec![g.n_points(); g.dim()]
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.spec().half_width()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spec().spacing()
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn l2_norm(&self) -> f64 {
        self.inner.l2_norm()
    }

    fn write(&self, path: PathBuf, kind: &str, config: &Config) -> PyResult<()> {
        let meta = polyscatter::io::FieldMeta::new(kind, self.inner.spec(), &pipeline::stamp(&config.inner));
        polyscatter::io::write_field(&path, &self.inner, &meta).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = polyscatter::io::read_field(&path).map_err(to_py)?;
        Ok(Self { inner })
    }
}

/// Backscattering data `u^∞(±x̂, ∓x̂, κ)` over a wavenumber lattice.
#[pyclass(module = "polyscatter", frozen)]
struct Sweep {
    inner: SweepDataset,
}

#[pymethods]
impl Sweep {
    #[getter]
    fn kappas(&self) -> Vec<f64> {
        self.inner.kappas.clone()
    }

    #[getter]
    fn directions(&self) -> Vec<Vec<f64>> {
        self.inner.directions.clone()
    }

    /// `u^∞(x̂_j, -x̂_j, κ)` over the lattice.
    fn forward(&self, j: usize) -> PyResult<Vec<Complex64>> {
        self.inner
            .forward
            .get(j)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("direction index {j} out of range")))
    }

    /// `u^∞(-x̂_j, x̂_j, κ)` over the lattice.
    fn reverse(&self, j: usize) -> PyResult<Vec<Complex64>> {
        self.inner
            .reverse
            .get(j)
            .cloned()
            .ok_or_else(|| PyValueError::new_err(format!("direction index {j} out of range")))
    }

    /// `(x̂, θ, κ, value)` tuples.
    fn records(&self) -> Vec<(Vec<f64>, Vec<f64>, f64, Complex64)> {
        self.inner
            .records()
            .into_iter()
            .map(|r| (r.x_hat, r.theta, r.kappa, r.value))
            .collect()
    }

    fn write(&self, path: PathBuf, config: &Config) -> PyResult<()> {
        polyscatter::io::write_sweep(&path, &self.inner, &pipeline::stamp(&config.inner)).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = polyscatter::io::read_sweep(&path).map_err(to_py)?;
        Ok(Self { inner })
    }
}

/// Band-averaged estimate of `â^c(ξ)` and `â^r(ξ)` at `ξ = 2τx̂`.
#[pyclass(module = "polyscatter", frozen, get_all, from_py_object)]
#[derive(Clone)]
struct Estimate {
    x_hat: Vec<f64>,
    tau: f64,
    xi: Vec<f64>,
    c_hat: Complex64,
    r_hat: Complex64,
    q: f64,
    n_kappa: usize,
}

impl From<StrengthEstimate> for Estimate {
    fn from(e: StrengthEstimate) -> Self {
        Self {
            x_hat: e.x_hat,
            tau: e.tau,
            xi: e.xi,
            c_hat: e.c_hat,
            r_hat: e.r_hat,
            q: e.q,
            n_kappa: e.n_kappa,
        }
    }
}

impl From<&Estimate> for StrengthEstimate {
    fn from(e: &Estimate) -> Self {
        Self {
            x_hat: e.x_hat.clone(),
            tau: e.tau,
            xi: e.xi.clone(),
            c_hat: e.c_hat,
            r_hat: e.r_hat,
            q: e.q,
            n_kappa: e.n_kappa,
        }
    }
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!("Estimate(tau={}, xi={:?}, c_hat={}, r_hat={})", self.tau, self.xi, self.c_hat, self.r_hat)
    }
}

#[pyfunction]
fn hankel0(z: Complex64) -> PyResult<Complex64> {
    polyscatter::special_fn::hankel0_first(z).map_err(to_py)
}

/// Root wavenumbers `κ e^{ijπ/n}`.
#[pyfunction]
fn roots(kappa: f64, n: usize) -> PyResult<Vec<Complex64>> {
    Ok(polyscatter::greens::root_system(kappa, n).map_err(to_py)?.roots().to_vec())
}

/// Polyharmonic Green function at distance `r` (the origin limit at `r = 0`).
#[pyfunction]
fn green(r: f64, kappa: f64, n: usize, d: u32) -> PyResult<Complex64> {
    let rs = polyscatter::greens::root_system(kappa, n).map_err(to_py)?;
    if r == 0.0 {
        return Ok(polyscatter::greens::green_at_origin(&rs, dim(d)?));
    }
    polyscatter::greens::green(r, &rs, dim(d)?).map_err(to_py)
}

#[pyfunction]
fn farfield_amplitude(kappa: f64, n: usize, d: u32) -> PyResult<Complex64> {
    let rs = polyscatter::greens::root_system(kappa, n).map_err(to_py)?;
    Ok(polyscatter::greens::farfield_amplitude(&rs, dim(d)?))
}

/// One realization of the configured potential (seeded by the configuration
/// unless `seed` is given).
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn sample_potential(config: &Config, seed: Option<u64>) -> PyResult<Field> {
    let v = &config.inner;
    let r = polyscatter::gmig::sample_complex_gmig(&v.potential, &v.grid, seed.unwrap_or(v.config.seed)).map_err(to_py)?;
    Ok(Field { inner: r.rho })
}

fn solver(config: &Config, tol: Option<f64>, order: Option<&str>) -> PyResult<SolveConfig> {
    let mut s = config.inner.config.solver.clone();
    if let Some(t) = tol {
        s.tol = t;
    }
    if let Some(b) = born_order(order)? {
        s.born_order = b;
    }
    s.check().map_err(to_py)?;
    Ok(s)
}

/// Total field for incidence direction `theta` at wavenumber `kappa`.
/// Returns `(field, residual, iterations)`.
#[pyfunction]
#[pyo3(signature = (config, potential, kappa, theta, tol=None, born_order=None))]
fn forward(
    py: Python<'_>,
    config: &Config,
    potential: &Field,
    kappa: f64,
    theta: Vec<f64>,
    tol: Option<f64>,
    born_order: Option<&str>,
) -> PyResult<(Field, f64, usize)> {
    let s = solver(config, tol, born_order)?;
    let n = config.inner.potential.n();
    let u = py
        .detach(|| pipeline::forward_stage(&potential.inner, n, kappa, &theta, &s))
        .map_err(to_py)?;
    Ok((Field { inner: u.values }, u.residual, u.iterations))
}

/// Backscattering sweep over the configured band and directions.
#[pyfunction]
#[pyo3(signature = (config, potential, born_order=None))]
fn sweep(py: Python<'_>, config: &Config, potential: &Field, born_order: Option<&str>) -> PyResult<Sweep> {
    let s = solver(config, None, born_order)?;
    let ds = py
        .detach(|| pipeline::sweep_stage(&config.inner, &potential.inner, &s))
        .map_err(to_py)?;
    Ok(Sweep { inner: ds })
}

#[pyfunction]
fn estimate(config: &Config, sweep: &Sweep) -> PyResult<Vec<Estimate>> {
    Ok(pipeline::estimate_stage(&config.inner, &sweep.inner)
        .map_err(to_py)?
        .into_iter()
        .map(Estimate::from)
        .collect())
}

/// Reconstructed strengths on the configured reconstruction grid, as a dict.
#[pyfunction]
fn reconstruct(py: Python<'_>, config: &Config, estimates: Vec<Estimate>) -> PyResult<Py<PyAny>> {
    let est: Vec<StrengthEstimate> = estimates.iter().map(StrengthEstimate::from).collect();
    let rec = pipeline::reconstruct_stage(&config.inner, &est).map_err(to_py)?;
    let row = pipeline::error_row(&config.inner, &rec).map_err(to_py)?;
    json_to_py(
        py,
        &serde_json::json!({
            "n_points": rec.grid.n_points(),
            "a_c": rec.a_c,
            "a_r": rec.a_r,
            "coverage": rec.coverage,
            "errors": row,
        }),
    )
}

/// Monte-Carlo check of the second-moment identities.
#[pyfunction]
fn expectation_check(
    py: Python<'_>,
    config: &Config,
    x_hat: Vec<f64>,
    tau: f64,
    kappa: f64,
    n_realizations: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let report = py
        .detach(|| polyscatter::inverse::expectation_check(&config.inner.potential, &x_hat, tau, kappa, n_realizations, seed))
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Run the whole experiment into `out_dir`; returns the summary.
#[pyfunction]
fn reproduce(py: Python<'_>, config: &Config, out_dir: PathBuf) -> PyResult<Py<PyAny>> {
    let out = py.detach(|| pipeline::reproduce(&config.inner, &out_dir)).map_err(to_py)?;
    json_to_py(py, &out.summary)
}

#[pyfunction]
fn verify(py: Python<'_>, config: &Config, out_dir: PathBuf) -> PyResult<Py<PyAny>> {
    let report = py.detach(|| pipeline::verify(&config.inner, &out_dir)).map_err(to_py)?;
    json_to_py(py, &report)
}

/// Polyharmonic scattering by complex GMIG potentials and band-averaged
/// strength reconstruction.
#[pymodule(name = "polyscatter")]
mod module {
    #[pymodule_export]
    use super::{
        estimate, expectation_check, farfield_amplitude, forward, green, hankel0, reconstruct, reproduce, roots,
        sample_potential, sweep, verify, Config, Estimate, Field, Sweep,
    };
}
