//! Python bindings: parameters, configurations, trajectories, the PDE solver
//! and the command-line modes.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use pmm_core::analysis::detect_blocked;
use pmm_core::engine::{replica_rng, sample_initial, RunStatus, SimState};
use pmm_core::harness::{execute, parse_config as parse_run_config};
use pmm_core::model::{transitions, Configuration, Constraint, Dynamics, ModelParams, TransitionKind};
use pmm_core::pde::{self, BoundaryCondition, DensityGrid};
use pmm_core::Error;

create_exception!(pmm_slow, PmmError, PyException);
create_exception!(pmm_slow, UsageError, PmmError);

fn err(e: Error) -> PyErr {
    match e {
        Error::Usage { .. } => UsageError::new_err(e.to_string()),
        _ => PmmError::new_err(format!("[{}] {e}", e.kind())),
    }
}

fn boundary(alpha: f64, beta: f64, kappa: Option<f64>) -> PyResult<BoundaryCondition> {
    match kappa {
        Some(k) => BoundaryCondition::robin(k, alpha, beta),
        None => BoundaryCondition::dirichlet(alpha, beta),
    }
    .map_err(err)
}

#[pyclass(name = "ModelParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams(ModelParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, theta=0.0, m=1.0, a=1.5, alpha=0.2, beta=0.8, big_m=2, pure_pmm=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(n: usize, theta: f64, m: f64, a: f64, alpha: f64, beta: f64, big_m: u32, pure_pmm: bool) -> PyResult<Self> {
        let dynamics = if pure_pmm { Dynamics::PurePmm } else { Dynamics::Full };
        let p = ModelParams::new(n, theta, m, a, alpha, beta)
            .map_err(err)?
            .with_constraint(Constraint::from_exponent(big_m).map_err(err)?)
            .with_dynamics(dynamics);
        Ok(PyParams(p))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    #[getter]
    fn m(&self) -> f64 {
        self.0.m
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn big_m(&self) -> u32 {
        self.0.big_m.exponent()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "ModelParams(n={}, theta={}, m={}, a={}, alpha={}, beta={}, big_m={})",
            p.n,
            p.theta,
            p.m,
            p.a,
            p.alpha,
            p.beta,
            p.big_m.exponent()
        )
    }
}

#[pyclass(name = "Configuration", from_py_object)]
#[derive(Clone)]
struct PyConfiguration(Configuration);

#[pymethods]
impl PyConfiguration {
    /// Occupations of sites `1..n-1`.
    #[new]
    fn new(occupations: Vec<u8>, params: &PyParams) -> PyResult<Self> {
        Configuration::for_params(occupations, &params.0).map(PyConfiguration).map_err(err)
    }

    fn occupations(&self) -> Vec<u8> {
        self.0.occupations().to_vec()
    }

    fn particle_count(&self) -> usize {
        self.0.particle_count()
    }

    /// `(kind, site, rate)` for every move with positive unscaled rate.
    fn transitions(&self, params: &PyParams) -> PyResult<Vec<(String, usize, f64)>> {
        Ok(transitions(&self.0, &params.0)
            .map_err(err)?
            .into_iter()
            .map(|t| match t.kind {
                TransitionKind::Exchange(x) => ("exchange".to_owned(), x, t.rate),
                TransitionKind::Flip(z) => ("flip".to_owned(), z, t.rate),
            })
            .collect())
    }

    fn is_blocked(&self, params: &PyParams) -> PyResult<bool> {
        detect_blocked(&self.0, &params.0).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.occupations().len()
    }
}

/// One trajectory of the particle system in macroscopic time.
#[pyclass(name = "Simulation")]
struct PySimulation(SimState);

#[pymethods]
impl PySimulation {
    /// Starts from `occupations` if given, else from a product measure with the
    /// linear profile between the reservoir densities.
    #[new]
    #[pyo3(signature = (params, occupations=None, seed=0, replica=0))]
    fn new(params: &PyParams, occupations: Option<Vec<u8>>, seed: u64, replica: u64) -> PyResult<Self> {
        let p = params.0;
        let mut rng = replica_rng(seed, replica);
        let config = match occupations {
            Some(occ) => Configuration::for_params(occ, &p).map_err(err)?,
            None => sample_initial(|u| p.alpha + (p.beta - p.alpha) * u, &p, &mut rng).map_err(err)?,
        };
        SimState::new(p, config, rng).map(PySimulation).map_err(err)
    }

    /// Runs to time `t`; returns the absorption time if the system got stuck.
    fn advance_to(&mut self, py: Python<'_>, t: f64) -> Option<f64> {
        let state = &mut self.0;
        match py.detach(|| state.advance_to(t, ())) {
            RunStatus::Reached => None,
            RunStatus::Absorbed { at } => Some(at),
        }
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }

    #[getter]
    fn events(&self) -> u64 {
        self.0.events()
    }

    fn configuration(&self) -> PyConfiguration {
        PyConfiguration(self.0.config().clone())
    }

    fn occupations(&self) -> Vec<u8> {
        self.0.config().occupations().to_vec()
    }
}

/// Closed-form stationary profile; Robin when `kappa` is given, Dirichlet otherwise.
#[pyfunction]
#[pyo3(signature = (u, alpha, beta, kappa=None))]
fn stationary_profile(u: Vec<f64>, alpha: f64, beta: f64, kappa: Option<f64>) -> PyResult<Vec<f64>> {
    let bc = boundary(alpha, beta, kappa)?;
    u.into_iter().map(|x| pde::stationary_profile(&bc, x).map_err(err)).collect()
}

/// Solves from nodal values `initial` (length `J+1`); returns `(times, rows)`.
#[pyfunction]
#[pyo3(signature = (initial, alpha, beta, horizon, sample_times, kappa=None))]
fn solve(
    py: Python<'_>,
    initial: Vec<f64>,
    alpha: f64,
    beta: f64,
    horizon: f64,
    sample_times: Vec<f64>,
    kappa: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let bc = boundary(alpha, beta, kappa)?;
    let grid = DensityGrid::new(initial, 0.0).map_err(err)?;
    let j = grid.j();
    let field = py
        .detach(|| pde::solve(|u| grid.interpolate(u), &bc, horizon, j, &sample_times))
        .map_err(err)?;
    Ok((field.times, field.values))
}

/// Canonical text of a configuration (raises `UsageError` on bad input).
#[pyfunction]
fn parse_config(text: &str) -> PyResult<String> {
    parse_run_config(text).map(|c| c.emit()).map_err(err)
}

/// Runs a configuration in memory; returns `(result_json, {file_name: csv})`.
#[pyfunction]
fn run(py: Python<'_>, text: &str) -> PyResult<(String, Vec<(String, String)>)> {
    let cfg = parse_run_config(text).map_err(err)?;
    let out = py.detach(|| execute(&cfg)).map_err(err)?;
    Ok((out.result.to_string(), out.files))
}

#[pymodule]
fn pmm_slow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(stationary_profile, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("PmmError", m.py().get_type::<PmmError>())?;
    m.add("UsageError", m.py().get_type::<UsageError>())?;
    Ok(())
}
