//! Python bindings. Structured inputs (weights, domains, rules, holomorphic
//! functions, d-bar sources) are taken as dicts or JSON strings in the same
//! shape as the command-line configs; structured results come back as dicts.

use holobound::bounds::{self, BoundReport};
use holobound::checks;
use holobound::config::PhiSpec;
use holobound::convex::{self, SupInverseKind};
use holobound::dbar::{DbarData, DbarQuadrature, Source};
use holobound::geom::{self, Domain, HoloFunction, Weight};
use holobound::quadrature::QuadratureSpec;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: holobound::error::Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn e<E: Into<holobound::error::Error>>(e: E) -> PyErr {
    err(e.into())
}

/// A dict (or JSON string) into a serde type.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>, what: &str) -> PyResult<T> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|err| PyValueError::new_err(format!("invalid {what}: {err}")))
}

/// A serde value into plain Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|err| PyValueError::new_err(err.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn quadrature(q: Option<&Bound<'_, PyAny>>, n: usize) -> PyResult<QuadratureSpec> {
    q.map_or(Ok(QuadratureSpec::default_for(n)), |q| from_py(q, "quadrature"))
}

fn report(py: Python<'_>, r: PyResult<BoundReport>) -> PyResult<Py<PyAny>> {
    to_py(py, &r?)
}

/// A convex rule `phi` on an interval.
#[pyclass(name = "ConvexFunction", frozen)]
struct PyConvexFunction(convex::ConvexFunction);

#[pymethods]
impl PyConvexFunction {
    /// `spec` as in the `phi` config field, e.g. `{"rule": "power", "p": 2}`.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let spec: PhiSpec = from_py(spec, "phi")?;
        Ok(Self(spec.build().map_err(e)?))
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.0.eval_f64(t).map_err(e)
    }

    /// Which case of the invertibility analysis `phi` falls into.
    fn classify(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &convex::classify(&self.0))
    }

    fn sup_inverse(&self) -> PyResult<PySupInverse> {
        Ok(PySupInverse(convex::sup_inverse(&self.0).map_err(e)?))
    }

    fn __repr__(&self) -> String {
        format!("ConvexFunction({:?})", self.0.rule())
    }
}

/// `y -> sup phi^{-1}(y)` on the image of `phi`.
#[pyclass(name = "SupInverse", frozen)]
struct PySupInverse(convex::SupInverse);

#[pymethods]
impl PySupInverse {
    fn __call__(&self, y: f64) -> PyResult<f64> {
        self.0.eval_f64(y).map_err(e)
    }

    /// `"root"`, `"log"` or `"other"`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.0.kind() {
            SupInverseKind::Root { .. } => "root",
            SupInverseKind::Log { .. } => "log",
            SupInverseKind::Other => "other",
        }
    }

    /// The exponent `p` of a root or log sup-inverse.
    #[getter]
    fn p(&self) -> Option<f64> {
        match self.0.kind() {
            SupInverseKind::Root { p } | SupInverseKind::Log { p } => Some(p),
            SupInverseKind::Other => None,
        }
    }

    #[getter]
    fn strict(&self) -> bool {
        self.0.strict()
    }

    /// `count` points spread over the image of `phi`.
    fn sample_image(&self, count: usize) -> Vec<f64> {
        self.0.sample_image(count)
    }
}

/// Mean of `weight` over the ball `B(z, r)`; `z` as real coordinates.
#[pyfunction]
#[pyo3(signature = (weight, z, r, quadrature=None))]
fn ball_mean(weight: &Bound<'_, PyAny>, z: Vec<f64>, r: f64, quadrature: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let w: Weight = from_py(weight, "weight")?;
    let q = self::quadrature(quadrature, z.len() / 2)?;
    geom::ball_mean(&w, &z, r, &q).map_err(e)
}

/// Normalized mean of `weight` over the sphere `|z' - z| = r`.
#[pyfunction]
#[pyo3(signature = (weight, z, r, quadrature=None))]
fn sphere_mean(weight: &Bound<'_, PyAny>, z: Vec<f64>, r: f64, quadrature: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let w: Weight = from_py(weight, "weight")?;
    let q = self::quadrature(quadrature, z.len() / 2)?;
    geom::sphere_mean(&w, &z, r, &q).map_err(e)
}

/// `(int_D |f|^p e^{-w})^(1/p)`.
#[pyfunction]
#[pyo3(signature = (function, p, weight, domain, quadrature=None))]
fn weighted_norm(
    function: &Bound<'_, PyAny>,
    p: f64,
    weight: &Bound<'_, PyAny>,
    domain: &Bound<'_, PyAny>,
    quadrature: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let f: HoloFunction = from_py(function, "function")?;
    let w: Weight = from_py(weight, "weight")?;
    let dom: Domain = from_py(domain, "domain")?;
    let q = self::quadrature(quadrature, dom.n())?;
    geom::weighted_norm(&f, p, &w, &dom, &q).map_err(e)
}

/// Mean-based bound on `ln|f(z)|` from `||f||_{p,w}`.
#[pyfunction]
#[pyo3(signature = (norm, weight, p, z, domain, quadrature=None))]
fn bound_thm31(
    py: Python<'_>,
    norm: f64,
    weight: &Bound<'_, PyAny>,
    p: f64,
    z: Vec<f64>,
    domain: &Bound<'_, PyAny>,
    quadrature: Option<&Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let w: Weight = from_py(weight, "weight")?;
    let dom: Domain = from_py(domain, "domain")?;
    let q = self::quadrature(quadrature, dom.n())?;
    report(py, bounds::bound_thm31(norm, &w, p, &z, &dom, &q).map_err(e))
}

/// Mean-based bound for a general convex `phi` with `N_phi = n_phi`.
#[pyfunction]
#[pyo3(signature = (n_phi, phi, v, z, domain, quadrature=None))]
fn bound_thm41(
    py: Python<'_>,
    n_phi: f64,
    phi: &PyConvexFunction,
    v: &Bound<'_, PyAny>,
    z: Vec<f64>,
    domain: &Bound<'_, PyAny>,
    quadrature: Option<&Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let v: Weight = from_py(v, "v")?;
    let dom: Domain = from_py(domain, "domain")?;
    let q = self::quadrature(quadrature, dom.n())?;
    let si = convex::sup_inverse(&phi.0).map_err(e)?;
    report(py, bounds::bound_thm41(n_phi, &si, &v, &z, &dom, &q).map_err(e))
}

/// Bound using the supremum of the weight over the ball.
#[pyfunction]
#[pyo3(signature = (norm, weight, p, z, domain, quadrature=None))]
fn bound_sup_based(
    py: Python<'_>,
    norm: f64,
    weight: &Bound<'_, PyAny>,
    p: f64,
    z: Vec<f64>,
    domain: &Bound<'_, PyAny>,
    quadrature: Option<&Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let w: Weight = from_py(weight, "weight")?;
    let dom: Domain = from_py(domain, "domain")?;
    let q = self::quadrature(quadrature, dom.n())?;
    report(py, bounds::bound_sup_based(norm, &w, p, &z, &dom, &q).map_err(e))
}

/// Randomized Jensen-inequality trials; returns the summary.
#[pyfunction]
#[pyo3(signature = (trials=10_000, max_atoms=8, max_pieces=6, seed=7))]
fn jensen_property_run(py: Python<'_>, trials: usize, max_atoms: usize, max_pieces: usize, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &checks::jensen_property_run(trials, max_atoms, max_pieces, seed).map_err(err)?)
}

/// Classification and invariants of the sup-inverse on the reference rules
/// plus `random` random piecewise-linear ones.
#[pyfunction]
#[pyo3(signature = (random=20, samples=1000, seed=7))]
fn sup_inverse_suite(py: Python<'_>, random: usize, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &checks::sup_inverse_suite(random, samples, seed).map_err(err)?)
}

/// The Fock-space bound at `z = (re, im)` against its closed form.
#[pyfunction]
#[pyo3(signature = (z, norm=1.0, quadrature=None))]
fn fock_row(py: Python<'_>, z: [f64; 2], norm: f64, quadrature: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let q = self::quadrature(quadrature, 1)?;
    to_py(py, &checks::fock_row(z, norm, &q).map_err(err)?)
}

/// Mean-based against supremum-based bound in the upper half-plane at
/// height `h`.
#[pyfunction]
#[pyo3(signature = (h, re=0.0, quadrature=None))]
fn halfplane_row(py: Python<'_>, h: f64, re: f64, quadrature: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let q = self::quadrature(quadrature, 1)?;
    to_py(py, &checks::halfplane_row(h, re, &q).map_err(err)?)
}

/// Averaged growth bound for the Cauchy solution of `dbar f = g` at each
/// `(re, im, r)`; returns `(summary, per-point reports)`.
#[pyfunction]
#[pyo3(signature = (g, points, v=None, a=2.0))]
fn dbar_check(
    py: Python<'_>,
    g: &Bound<'_, PyAny>,
    points: Vec<[f64; 3]>,
    v: Option<&Bound<'_, PyAny>>,
    a: f64,
) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let g: Source = from_py(g, "g")?;
    let v = v.map_or(Ok(Weight::constant(0.0)), |v| from_py(v, "v"))?;
    let pts: Vec<([f64; 2], f64)> = points.iter().map(|p| ([p[0], p[1]], p[2])).collect();
    let (summary, reports) = checks::dbar_chain("g", DbarData { g, v, a }, &pts, DbarQuadrature::default()).map_err(err)?;
    Ok((to_py(py, &summary)?, to_py(py, &reports)?))
}

/// The built-in self-check; one dict per check.
#[pyfunction]
#[pyo3(signature = (seed=7))]
fn verify_all(py: Python<'_>, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &checks::verify_all(seed))
}

/// Runs the command-line tool in-process; returns `(exit code, stdout,
/// stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("holobound".to_string()).chain(args);
    let code = holobound::cli::main_with(argv.map(Into::into), &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}

#[pymodule]
#[pyo3(name = "holobound")]
pub fn holobound_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConvexFunction>()?;
    m.add_class::<PySupInverse>()?;
    m.add_function(wrap_pyfunction!(ball_mean, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_mean, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_norm, m)?)?;
    m.add_function(wrap_pyfunction!(bound_thm31, m)?)?;
    m.add_function(wrap_pyfunction!(bound_thm41, m)?)?;
    m.add_function(wrap_pyfunction!(bound_sup_based, m)?)?;
    m.add_function(wrap_pyfunction!(jensen_property_run, m)?)?;
    m.add_function(wrap_pyfunction!(sup_inverse_suite, m)?)?;
    m.add_function(wrap_pyfunction!(fock_row, m)?)?;
    m.add_function(wrap_pyfunction!(halfplane_row, m)?)?;
    m.add_function(wrap_pyfunction!(dbar_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
