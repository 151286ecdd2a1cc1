//! The module driven through an embedded interpreter.

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(f: impl FnOnce(Python<'_>, &Bound<'_, PyModule>) -> PyResult<()>) {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(holobound_py::holobound_module)(py).into_bound(py).cast_into::<PyModule>().unwrap();
        f(py, &m).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn fock_bound_through_python() {
    with_module(|py, m| {
        let weight = PyDict::new(py);
        weight.set_item("type", "abs-sq")?;
        let report = m.call_method1("bound_thm31", (1.0, &weight, 2.0, vec![0.0, 0.0], r#"{"type": "full-space", "n": 1}"#))?;
        let r_star: f64 = report.get_item("r_star")?.extract()?;
        assert!((r_star - 2f64.sqrt()).abs() < 1e-8);
        Ok(())
    });
}

#[test]
fn sup_inverse_through_python() {
    with_module(|_, m| {
        let phi = m.getattr("ConvexFunction")?.call1((r#"{"rule": "exponential", "p": 2}"#,))?;
        let si = phi.call_method0("sup_inverse")?;
        assert_eq!(si.getattr("kind")?.extract::<String>()?, "log");
        let t: f64 = si.call1((std::f64::consts::E,))?.extract()?;
        assert!((t - 0.5).abs() < 1e-12);
        Ok(())
    });
}

#[test]
fn errors_become_python_exceptions() {
    with_module(|py, m| {
        let err = m.getattr("ConvexFunction")?.call1((r#"{"rule": "power", "p": 0.5}"#,)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let (code, _, stderr): (i32, String, String) = m.call_method1("run_cli", (vec!["bound"],))?.extract()?;
        assert_eq!(code, 2);
        assert!(stderr.contains("\"field\":\"config\""));
        Ok(())
    });
}
