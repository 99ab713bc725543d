//! Python bindings for the fsi-gcsi solver.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fsi_gcsi::bench::output::vertex_fields;
use fsi_gcsi::bench::problems::{build_problem, discretization};
use fsi_gcsi::bench::run::fingerprint;
use fsi_gcsi::bench::verify::run_suite;
use fsi_gcsi::bench::{self, Oscillation, RunConfig};
use fsi_gcsi::stepper::{bdf_coefficients, Stepper};
use fsi_gcsi::weak_forms::solid_volume;
use fsi_gcsi::FsiError;

fn to_py(e: FsiError) -> PyErr {
    match e {
        FsiError::Config(_) | FsiError::Parse { .. } | FsiError::Checkpoint(_) => PyValueError::new_err(e.to_string()),
        FsiError::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A validated run configuration.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Parses `key = value` configuration text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        bench::parse_config(text).map(|inner| PyRunConfig { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyOSError::new_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    #[getter]
    fn benchmark(&self) -> &'static str {
        self.inner.benchmark.name()
    }

    #[getter]
    fn refinements(&self) -> usize {
        self.inner.refinements
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.scheme.tau
    }

    #[getter]
    fn end_time(&self) -> f64 {
        self.inner.end_time
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme.label()
    }

    #[getter]
    fn point_a(&self) -> (f64, f64) {
        (self.inner.point_a[0], self.inner.point_a[1])
    }

    /// `(velocity, pressure)` unknowns on every level, coarsest first.
    fn dof_counts(&self) -> PyResult<Vec<(usize, usize)>> {
        Ok(discretization(&self.inner).map_err(to_py)?.dof_counts())
    }

    fn __repr__(&self) -> String {
        format!("RunConfig({} {} J={} tau={} T={})", self.benchmark(), self.scheme(), self.inner.refinements, self.tau(), self.end_time())
    }
}

/// Time stepper of an FSI or cavity problem.
#[pyclass(name = "Solver", unsendable)]
struct PySolver {
    stepper: Stepper,
    probe: Option<(usize, [f64; 2])>,
}

#[pymethods]
impl PySolver {
    #[new]
    fn new(config: &PyRunConfig) -> PyResult<Self> {
        let c = &config.inner;
        if !c.benchmark.is_fsi() && c.benchmark != bench::Benchmark::Cavity {
            return Err(PyValueError::new_err(format!("{} is not a time-dependent benchmark", c.benchmark.name())));
        }
        let p = build_problem(c).map_err(to_py)?;
        let probe = if c.benchmark.is_fsi() { p.disc.mesh(p.disc.finest()).locate(c.point_a) } else { None };
        let mut stepper = Stepper::new(p.disc, p.physics, c.scheme.clone(), p.initial).map_err(to_py)?;
        stepper.fingerprint = fingerprint(c);
        Ok(PySolver { stepper, probe })
    }

    /// Advances one step and returns its report.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.stepper.step().map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("step", r.step)?;
        d.set_item("t", r.t)?;
        d.set_item("stage_iterations", r.stage_iterations)?;
        d.set_item("stage_residuals", r.stage_residuals)?;
        d.set_item("extension_iterations", r.extension_iterations)?;
        Ok(d)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.stepper.current().t
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.stepper.current().step
    }

    /// Displacement of the tracked point A.
    fn displacement_at_a(&self) -> PyResult<(f64, f64)> {
        let (c, xi) = self.probe.ok_or_else(|| PyValueError::new_err("no tracking point for this benchmark"))?;
        let d = self.stepper.disc.dof(self.stepper.disc.finest());
        let u = d.eval_vector(&self.stepper.current().u, c, xi);
        Ok((u[0], u[1]))
    }

    fn solid_volume(&self) -> f64 {
        let disc = &self.stepper.disc;
        let f = disc.finest();
        solid_volume(disc.mesh(f), disc.dof(f), &disc.reference_geometry[f], &self.stepper.current().u)
    }

    /// Vertex values: deformed points, velocity, physical pressure and displacement.
    fn vertex_fields<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let disc = &self.stepper.disc;
        let f = disc.finest();
        let v = vertex_fields(disc.mesh(f), disc.dof(f), self.stepper.current());
        let pairs = |a: &[[f64; 2]]| a.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>();
        let d = PyDict::new(py);
        d.set_item("points", pairs(&v.points))?;
        d.set_item("velocity", pairs(&v.velocity))?;
        d.set_item("pressure", v.pressure)?;
        d.set_item("displacement", pairs(&v.displacement))?;
        d.set_item("cells", v.cells)?;
        Ok(d)
    }

    fn save_checkpoint(&self, path: PathBuf) -> PyResult<()> {
        self.stepper.save_checkpoint(&path).map_err(to_py)
    }

    fn load_checkpoint(&mut self, path: PathBuf) -> PyResult<()> {
        self.stepper.load_checkpoint(&path).map_err(to_py)
    }
}

/// Runs a configuration to its end time and returns the time series and
/// oscillation statistics of `u_y(A)`.
#[pyfunction]
fn run<'py>(py: Python<'py>, config: &PyRunConfig, quiet: bool) -> PyResult<Bound<'py, PyDict>> {
    let mut log: Box<dyn std::io::Write> = if quiet { Box::new(std::io::sink()) } else { Box::new(std::io::stdout()) };
    let s = bench::run_benchmark(&config.inner, &mut log).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t", s.records.iter().map(|r| r.t).collect::<Vec<_>>())?;
    d.set_item("ux_a", s.records.iter().map(|r| r.ux_a).collect::<Vec<_>>())?;
    d.set_item("uy_a", s.records.iter().map(|r| r.uy_a).collect::<Vec<_>>())?;
    d.set_item("solid_volume", s.records.iter().map(|r| r.solid_volume).collect::<Vec<_>>())?;
    d.set_item("stage_iterations", s.records.iter().map(|r| r.stage_iterations.clone()).collect::<Vec<_>>())?;
    d.set_item("reference_volume", s.reference_volume)?;
    d.set_item("csv", s.csv)?;
    d.set_item("oscillation", oscillation_dict(py, &s.oscillation)?)?;
    let errors: Vec<(usize, f64, f64, usize)> = s.manufactured.iter().map(|r| (r.level, r.velocity_error, r.pressure_error, r.iterations)).collect();
    d.set_item("manufactured", errors)?;
    Ok(d)
}

fn oscillation_dict<'py>(py: Python<'py>, o: &Oscillation) -> PyResult<Option<Bound<'py, PyDict>>> {
    match o {
        Oscillation::Steady(s) => {
            let d = PyDict::new(py);
            d.set_item("mean", s.mean)?;
            d.set_item("amplitude", s.amplitude)?;
            d.set_item("frequency", s.frequency)?;
            Ok(Some(d))
        }
        Oscillation::NoSteadyOscillations => Ok(None),
    }
}

/// Mean, amplitude and frequency of the last full period, or `None`.
#[pyfunction]
#[pyo3(signature = (t, signal, skip_before = 0.0))]
fn oscillation_stats<'py>(py: Python<'py>, t: Vec<f64>, signal: Vec<f64>, skip_before: f64) -> PyResult<Option<Bound<'py, PyDict>>> {
    if t.len() != signal.len() {
        return Err(PyValueError::new_err("t and signal differ in length"));
    }
    oscillation_dict(py, &bench::oscillation_stats(&t, &signal, skip_before))
}

/// `(gamma, alphas)` of the BDF stencil of order `k`.
#[pyfunction]
fn bdf(k: usize) -> PyResult<(f64, Vec<f64>)> {
    let b = bdf_coefficients(k).map_err(to_py)?;
    Ok((b.gamma, b.alphas))
}

#[pyfunction]
fn inflow_profile(y: f64, v_in: f64, height: f64) -> (f64, f64) {
    let v = bench::inflow_profile_2d(y, v_in, height);
    (v[0], v[1])
}

/// Runs a self-check suite and returns `(name, passed, detail)` triples.
#[pyfunction]
fn verify(suite: &str) -> PyResult<Vec<(String, bool, String)>> {
    let checks = run_suite(suite, &mut std::io::sink()).map_err(to_py)?;
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
#[pyo3(name = "fsi_gcsi")]
fn fsi_gcsi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PySolver>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(oscillation_stats, m)?)?;
    m.add_function(wrap_pyfunction!(bdf, m)?)?;
    m.add_function(wrap_pyfunction!(inflow_profile, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
