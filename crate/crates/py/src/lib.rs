//! Python module `clampfold`: solvers, continuation, eigenvalues and
//! certificates for the radial clamped-plate MEMS equation.

use std::collections::BTreeMap;

use clampfold::branch::{self, extremal_report};
use clampfold::certificates::{self, CertificateSpec};
use clampfold::spectral;
use clampfold::{assemble_biharmonic, build_mesh, DiscreteBiharmonic, Error, RadialField};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(clampfold, NoSolutionError, PyRuntimeError, "No solution at the requested parameter.");
create_exception!(clampfold, SolverError, PyRuntimeError, "Internal solver failure.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Shape { .. } | Error::CertificateDomain { .. } => PyValueError::new_err(e.to_string()),
        e if e.is_no_solution() => NoSolutionError::new_err(e.to_string()),
        e => SolverError::new_err(e.to_string()),
    }
}

/// Run parameters.
#[pyclass(name = "ProblemConfig", module = "clampfold", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: clampfold::ProblemConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (n, intervals = 256, p = 1.0))]
    fn new(n: usize, intervals: usize, p: f64) -> PyResult<Self> {
        let inner = clampfold::ProblemConfig::new(n, intervals).with_p(p);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn intervals(&self) -> usize {
        self.inner.intervals
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn tol_newton(&self) -> f64 {
        self.inner.tol_newton
    }

    #[setter]
    fn set_tol_newton(&mut self, v: f64) -> PyResult<()> {
        self.update(|c| c.tol_newton = v)
    }

    #[getter]
    fn tol_eig(&self) -> f64 {
        self.inner.tol_eig
    }

    #[setter]
    fn set_tol_eig(&mut self, v: f64) -> PyResult<()> {
        self.update(|c| c.tol_eig = v)
    }

    #[getter]
    fn tol_fold(&self) -> f64 {
        self.inner.tol_fold
    }

    #[setter]
    fn set_tol_fold(&mut self, v: f64) -> PyResult<()> {
        self.update(|c| c.tol_fold = v)
    }

    #[getter]
    fn r_min_certificate(&self) -> f64 {
        self.inner.r_min_certificate
    }

    #[setter]
    fn set_r_min_certificate(&mut self, v: f64) -> PyResult<()> {
        self.update(|c| c.r_min_certificate = v)
    }

    fn __repr__(&self) -> String {
        format!(
            "ProblemConfig(n={}, intervals={}, p={})",
            self.inner.n, self.inner.intervals, self.inner.p
        )
    }
}

impl PyConfig {
    fn update(&mut self, f: impl FnOnce(&mut clampfold::ProblemConfig)) -> PyResult<()> {
        let mut next = self.inner.clone();
        f(&mut next);
        next.validate().map_err(to_py)?;
        self.inner = next;
        Ok(())
    }
}

/// Discrete clamped biharmonic on the radial mesh.
#[pyclass(name = "Operator", module = "clampfold")]
pub struct PyOperator {
    inner: DiscreteBiharmonic,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (n, intervals = 256))]
    fn new(n: usize, intervals: usize) -> PyResult<Self> {
        let mesh = build_mesh(intervals).map_err(to_py)?;
        Ok(Self {
            inner: assemble_biharmonic(&mesh, n).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.mesh().nodes().to_vec()
    }

    /// Δ²_h applied to nodal values (the last entry is the boundary row).
    fn apply(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(clampfold::apply(&self.inner, &RadialField::new(values)).map_err(to_py)?.values)
    }

    /// Clamped-plate eigenvalue ν₁ and its eigenfunction.
    fn nu1(&self) -> PyResult<(f64, Vec<f64>)> {
        let pair = spectral::nu1(&self.inner).map_err(to_py)?;
        Ok((pair.value, pair.field.values))
    }

    /// Stability eigenvalue μ₁ of the linearization at `u`.
    #[pyo3(signature = (u, lam, p = 1.0))]
    fn mu1(&self, u: Vec<f64>, lam: f64, p: f64) -> PyResult<f64> {
        Ok(spectral::mu1(&self.inner, &RadialField::new(u), lam, p).map_err(to_py)?.value)
    }
}

/// One solved point on the minimal branch.
#[pyclass(name = "BranchPoint", module = "clampfold", get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBranchPoint {
    lam: f64,
    u: Vec<f64>,
    mu1: f64,
    sup_norm: f64,
    residual: f64,
    method: &'static str,
    iterations: usize,
}

impl From<&clampfold::BranchPoint> for PyBranchPoint {
    fn from(pt: &clampfold::BranchPoint) -> Self {
        Self {
            lam: pt.lambda,
            u: pt.u.values.clone(),
            mu1: pt.mu1,
            sup_norm: pt.sup_norm,
            residual: pt.residual,
            method: pt.method.as_str(),
            iterations: pt.iterations,
        }
    }
}

#[pymethods]
impl PyBranchPoint {
    fn __repr__(&self) -> String {
        format!(
            "BranchPoint(lam={}, sup_norm={}, mu1={}, method={})",
            self.lam, self.sup_norm, self.mu1, self.method
        )
    }
}

/// Minimal branch up to the bracketed fold.
#[pyclass(name = "Continuation", module = "clampfold", skip_from_py_object)]
pub struct PyContinuation {
    inner: clampfold::ContinuationResult,
}

#[pymethods]
impl PyContinuation {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn intervals(&self) -> usize {
        self.inner.intervals
    }

    #[getter]
    fn lambda_lo(&self) -> f64 {
        self.inner.lambda_star_bracket.0
    }

    #[getter]
    fn lambda_hi(&self) -> f64 {
        self.inner.lambda_star_bracket.1
    }

    #[getter]
    fn lambda_star(&self) -> f64 {
        self.inner.lambda_star()
    }

    #[getter]
    fn nu1(&self) -> f64 {
        self.inner.nu1
    }

    #[getter]
    fn u_star(&self) -> Vec<f64> {
        self.inner.u_star.values.clone()
    }

    #[getter]
    fn u_star_sup(&self) -> f64 {
        self.inner.u_star_sup
    }

    #[getter]
    fn regular_on_mesh(&self) -> bool {
        self.inner.regular_on_mesh
    }

    #[getter]
    fn fold_signal(&self) -> Option<f64> {
        self.inner.fold_signal
    }

    #[getter]
    fn points(&self) -> Vec<PyBranchPoint> {
        self.inner.points.iter().map(PyBranchPoint::from).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.points.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Continuation(n={}, intervals={}, lambda_star in [{}, {}])",
            self.inner.n, self.inner.intervals, self.inner.lambda_star_bracket.0, self.inner.lambda_star_bracket.1
        )
    }
}

fn setup(config: &PyConfig) -> PyResult<DiscreteBiharmonic> {
    let mesh = build_mesh(config.inner.intervals).map_err(to_py)?;
    assemble_biharmonic(&mesh, config.inner.n).map_err(to_py)
}

/// Minimal solution by monotone iteration from zero.
#[pyfunction]
fn monotone_solve(config: &PyConfig, lam: f64) -> PyResult<PyBranchPoint> {
    let op = setup(config)?;
    let pt = branch::monotone_solve(&op, lam, &config.inner).map_err(to_py)?;
    Ok((&pt).into())
}

/// Newton's method from `guess` (zero by default).
#[pyfunction]
#[pyo3(signature = (config, lam, guess = None))]
fn newton_solve(config: &PyConfig, lam: f64, guess: Option<Vec<f64>>) -> PyResult<PyBranchPoint> {
    let op = setup(config)?;
    let guess = guess.map_or_else(|| RadialField::zeros(op.len()), RadialField::new);
    let pt = branch::newton_solve(&op, lam, &guess, &config.inner).map_err(to_py)?;
    Ok((&pt).into())
}

/// Continue the minimal branch and bracket λ*.
#[pyfunction]
fn continue_branch(py: Python<'_>, config: &PyConfig) -> PyResult<PyContinuation> {
    let cfg = config.inner.clone();
    let inner = py.detach(move || branch::run_continuation(&cfg)).map_err(to_py)?;
    Ok(PyContinuation { inner })
}

/// Regularity verdict of `u*` from continuations on several meshes.
#[pyfunction]
fn extremal_verdict(runs: Vec<PyRef<'_, PyContinuation>>) -> PyResult<(String, f64)> {
    let results: Vec<_> = runs.iter().map(|r| r.inner.clone()).collect();
    let rep = extremal_report(&results).map_err(to_py)?;
    Ok((rep.verdict.as_str().to_string(), rep.sup_variation))
}

/// Sup deviation of `u_λ / V_λ - 1` at a small parameter.
#[pyfunction]
fn extinction_check(config: &PyConfig, lam: f64, lambda_lo: f64) -> PyResult<(f64, f64)> {
    let op = setup(config)?;
    let rep = branch::extinction_check(&op, lam, lambda_lo, &config.inner).map_err(to_py)?;
    Ok((rep.sup_ratio_deviation, rep.min_excess))
}

#[pyfunction]
fn lower_bound(n: usize) -> f64 {
    certificates::lower_bound(n)
}

type Report = (String, f64, Option<f64>, BTreeMap<String, f64>);

fn report(rep: clampfold::CertificateReport) -> Report {
    (rep.verdict.as_str().to_string(), rep.margin, rep.derived_bound, rep.extras)
}

/// Quartic subsolution check; returns `(verdict, margin, bound, extras)`.
#[pyfunction]
fn check_omega_alpha(config: &PyConfig, alpha: f64) -> PyResult<Report> {
    let op = setup(config)?;
    let spec = CertificateSpec::omega_alpha(config.inner.n, alpha);
    certificates::check_omega_alpha(&spec, &op).map(report).map_err(to_py)
}

/// Logarithmic supersolution check with the default parameters.
#[pyfunction]
fn check_g_beta(config: &PyConfig) -> PyResult<Report> {
    let op = setup(config)?;
    let spec = CertificateSpec::standard_g_beta(config.inner.n, config.inner.r_min_certificate);
    certificates::check_g_beta(&spec, &op).map(report).map_err(to_py)
}

/// λ_hi ≤ ν₁/4 for a continuation on the same mesh.
#[pyfunction]
fn upper_bound_check(run: &PyContinuation) -> PyResult<Report> {
    let mesh = build_mesh(run.inner.intervals).map_err(to_py)?;
    let op = assemble_biharmonic(&mesh, run.inner.n).map_err(to_py)?;
    certificates::upper_bound_check(&op, &run.inner).map(report).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "clampfold")]
pub fn clampfold_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyBranchPoint>()?;
    m.add_class::<PyContinuation>()?;
    m.add("NoSolutionError", m.py().get_type::<NoSolutionError>())?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(monotone_solve, m)?)?;
    m.add_function(wrap_pyfunction!(newton_solve, m)?)?;
    m.add_function(wrap_pyfunction!(continue_branch, m)?)?;
    m.add_function(wrap_pyfunction!(extremal_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(extinction_check, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_omega_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(check_g_beta, m)?)?;
    m.add_function(wrap_pyfunction!(upper_bound_check, m)?)?;
    Ok(())
}
