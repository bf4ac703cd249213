//! Python bindings: densities, flow records and the inequality checks.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use infoflow::density::parse::parse_density;
use infoflow::error::Error;
use infoflow::functionals::{self, Flow, FunctionalRecord};
use infoflow::heatflow;
use infoflow::inequalities as ineq;
use infoflow::report::catalog_listing;
use infoflow::Params;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownFamily(_)
        | Error::ParamOutOfRange(_)
        | Error::ParseError { .. }
        | Error::Config(_)
        | Error::GridFile(_)
        | Error::WeightMismatch(_)
        | Error::NonpositiveScale(_)
        | Error::DimensionMismatch(..) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None(),
        serde_json::Value::Bool(b) => b.into_py_any(py)?,
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py)?,
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

/// Functional values of one flow state.
#[pyclass(name = "Record", from_py_object)]
#[derive(Clone)]
struct PyRecord {
    inner: FunctionalRecord,
}

#[pymethods]
impl PyRecord {
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn entropy(&self) -> f64 {
        self.inner.entropy
    }

    #[getter]
    fn entropy_power(&self) -> f64 {
        self.inner.entropy_power
    }

    #[getter]
    fn fisher(&self) -> f64 {
        self.inner.fisher
    }

    #[getter]
    fn fisher_reciprocal(&self) -> f64 {
        self.inner.fisher_reciprocal
    }

    #[getter]
    fn j(&self) -> f64 {
        self.inner.j
    }

    #[getter]
    fn k(&self) -> Option<f64> {
        self.inner.k
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    /// Sign certificate 2p^2 - 3p + 1.
    #[getter]
    fn certificate(&self) -> f64 {
        self.inner.certificate()
    }

    fn as_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let d = PyDict::new(py);
        d.set_item("t", self.inner.t)?;
        d.set_item("n", self.inner.n)?;
        d.set_item("H", self.inner.entropy)?;
        d.set_item("N", self.inner.entropy_power)?;
        d.set_item("I", self.inner.fisher)?;
        d.set_item("I_tilde", self.inner.fisher_reciprocal)?;
        d.set_item("J", self.inner.j)?;
        d.set_item("K", self.inner.k)?;
        d.set_item("p", self.inner.p())?;
        d.into_py_any(py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Record(t={}, n={}, H={:.6}, N={:.6}, I={:.6}, J={:.6}, K={:?})",
            self.inner.t, self.inner.n, self.inner.entropy, self.inner.entropy_power,
            self.inner.fisher, self.inner.j, self.inner.k
        )
    }
}

/// A probability density built from the spec mini-language
/// (`family:key=val,...`, `grid:file=PATH`, `product:...`, `mix:...`).
#[pyclass(name = "Density", from_py_object)]
#[derive(Clone)]
struct PyDensity {
    inner: infoflow::density::Density,
    params: Params,
}

#[pymethods]
impl PyDensity {
    #[new]
    #[pyo3(signature = (spec, m=4096, tail_eps=1e-12))]
    fn new(spec: &str, m: usize, tail_eps: f64) -> PyResult<Self> {
        let params = Params {
            m,
            tail_eps,
            ..Params::default()
        };
        let inner = parse_density(spec, &params).map_err(to_py_err)?;
        Ok(PyDensity { inner, params })
    }

    /// Dimension (number of product factors).
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn spec(&self) -> String {
        self.inner.spec_string()
    }

    /// (verdict, worst second derivative of log f, location).
    #[pyo3(signature = (tol=1e-8))]
    fn is_log_concave(&self, tol: f64) -> (bool, f64, f64) {
        let lc = self.inner.is_log_concave(tol);
        (lc.verdict, lc.worst_violation, lc.location)
    }

    /// Law of a*X.
    fn dilate(&self, a: f64) -> PyResult<PyDensity> {
        Ok(PyDensity {
            inner: self.inner.dilated(a).map_err(to_py_err)?,
            params: self.params,
        })
    }

    /// Law of X + Z_t (grid-backed density).
    fn evolve(&self, t: f64) -> PyResult<PyDensity> {
        Ok(PyDensity {
            inner: heatflow::evolve_density(&self.inner, t, &self.params).map_err(to_py_err)?,
            params: self.params,
        })
    }

    /// Shannon entropy at t = 0.
    fn entropy(&self) -> PyResult<f64> {
        functionals::entropy(&self.inner, &self.params).map_err(to_py_err)
    }

    /// Entropy power at t = 0.
    fn entropy_power(&self) -> PyResult<f64> {
        functionals::entropy_power(&self.inner, &self.params).map_err(to_py_err)
    }

    /// Fisher information at t = 0 (smooth densities only).
    fn fisher(&self) -> PyResult<f64> {
        functionals::fisher(&self.inner, &self.params).map_err(to_py_err)
    }

    /// J functional at t = 0 (smooth densities only).
    fn j_functional(&self) -> PyResult<f64> {
        functionals::j_functional(&self.inner, &self.params).map_err(to_py_err)
    }

    /// All functionals of X + Z_t; K absent when the stencil does not fit.
    #[pyo3(signature = (t, h=1e-3))]
    fn record(&self, t: f64, h: f64) -> PyResult<PyRecord> {
        let rec = Flow::new(&self.inner, self.params)
            .record(t, h)
            .map_err(to_py_err)?;
        Ok(PyRecord { inner: rec })
    }

    fn __repr__(&self) -> String {
        format!("Density({:?})", self.inner.spec_string())
    }
}

/// Closed-form Gaussian values: N = sigma, I = n/sigma, J = n/sigma^2,
/// K = 2n/sigma^3.
#[pyfunction]
fn gaussian_oracle(sigma: f64, n: usize) -> PyRecord {
    PyRecord {
        inner: functionals::gaussian_oracle(sigma, n),
    }
}

/// Cross term H(X,Y) of the convolution inequality (sum of I(f_i) I(g_i)).
#[pyfunction]
fn cross_term(f: &PyDensity, g: &PyDensity) -> PyResult<f64> {
    functionals::cross_term(&f.inner, &g.inner, &f.params).map_err(to_py_err)
}

/// Minimizer of Lambda(alpha) on [0,1] and the gap to the small-t
/// expansion 1 - (J/I) t.
#[pyfunction]
fn optimal_alpha(f: &PyDensity, t: f64) -> PyResult<(f64, f64)> {
    ineq::optimal_alpha(&f.inner, t, &f.params).map_err(to_py_err)
}

fn reports_to_py(py: Python<'_>, reports: Vec<ineq::InequalityReport>) -> PyResult<Py<PyAny>> {
    let vals = serde_json::to_value(&reports)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &vals)
}

/// Run one named inequality check along a time lattice; returns a list of
/// report dicts. Pair checks (epi, blachman_stam, sharp2) take `g` as the
/// second density (defaults to the density itself).
#[pyfunction]
#[pyo3(signature = (name, f, t_lattice, h=1e-3, g=None, alpha_points=101))]
fn run_check(
    py: Python<'_>,
    name: &str,
    f: &PyDensity,
    t_lattice: Vec<f64>,
    h: f64,
    g: Option<&PyDensity>,
    alpha_points: usize,
) -> PyResult<Py<PyAny>> {
    let params = f.params;
    let d = &f.inner;
    let other = g.map(|g| g.inner.clone()).unwrap_or_else(|| d.clone());
    let reports = match name {
        "epi" => vec![ineq::check_epi(d, &other, &params).map_err(to_py_err)?],
        "blachman_stam" => vec![ineq::check_blachman_stam(d, &other, &params).map_err(to_py_err)?],
        "sharp2" => vec![ineq::check_sharp2(d, &other, &params).map_err(to_py_err)?],
        "costa" => {
            let (a, b) = ineq::check_costa(d, &t_lattice, h, &params).map_err(to_py_err)?;
            vec![a, b]
        }
        "fisher_concavity" => {
            let (a, b) =
                ineq::check_fisher_concavity(d, &t_lattice, h, &params).map_err(to_py_err)?;
            vec![a, b]
        }
        "third_derivative" => {
            vec![ineq::check_third_derivative(d, &t_lattice, h, &params).map_err(to_py_err)?]
        }
        "ine_m" => {
            let (a, b) =
                ineq::check_ine_m(d, &t_lattice, alpha_points, &params).map_err(to_py_err)?;
            vec![a, b]
        }
        "ineK" => {
            let (a, b) = ineq::check_ine_k(d, &t_lattice, h, &params).map_err(to_py_err)?;
            vec![a, b]
        }
        "dem_p" => vec![ineq::check_dem(d, &t_lattice, h, &params).map_err(to_py_err)?],
        "iso" => {
            let (a, b, c) = ineq::check_iso_family(d, &t_lattice, h, &params).map_err(to_py_err)?;
            vec![a, b, c]
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown check `{other}`; expected one of epi, blachman_stam, sharp2, costa, \
                 fisher_concavity, third_derivative, ine_m, ineK, dem_p, iso"
            )))
        }
    };
    reports_to_py(py, reports)
}

/// The analytic family catalog with parameter constraints.
#[pyfunction]
fn families() -> String {
    catalog_listing()
}

#[pymodule]
fn infoflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensity>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(gaussian_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(cross_term, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    Ok(())
}
