//! Python bindings for `tailbound`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tailbound::comparison;
use tailbound::oracle;
use tailbound::simulate::{self, FamilyKind, IncrementFamily};
use tailbound::{bounds as core_bounds, Error, Query};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Internal(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Binomial law `Bin(n, p)` with its log tail table.
#[pyclass(name = "BinomialSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBinomialSpec {
    inner: tailbound::BinomialSpec,
}

#[pymethods]
impl PyBinomialSpec {
    #[new]
    fn new(n: u64, p: f64) -> PyResult<Self> {
        Ok(PyBinomialSpec { inner: tailbound::BinomialSpec::new(n, p).map_err(to_py)? })
    }

    /// Exact rational `p = num / den`.
    #[staticmethod]
    fn from_ratio(n: u64, num: u64, den: u64) -> PyResult<Self> {
        Ok(PyBinomialSpec { inner: tailbound::BinomialSpec::from_ratio(n, num, den).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn j_star(&self) -> u64 {
        self.inner.j_star()
    }

    /// `ln P(B = j)`.
    fn log_pmf(&self, j: u64) -> PyResult<f64> {
        Ok(tailbound::log_pmf(&self.inner, j).map_err(to_py)?.ln())
    }

    /// `ln P(B >= j)` for `0 <= j <= n + 1`.
    fn log_tails(&self) -> Vec<f64> {
        tailbound::TailTable::new(self.inner.clone()).log_tail_slice().iter().map(|v| v.ln()).collect()
    }

    fn __repr__(&self) -> String {
        format!("BinomialSpec(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

/// The least log-concave majorant of the linearly interpolated tail.
#[pyclass(name = "Majorant", frozen)]
struct PyMajorant {
    inner: tailbound::Majorant,
}

#[pymethods]
impl PyMajorant {
    #[new]
    fn new(spec: &PyBinomialSpec) -> PyResult<Self> {
        Ok(PyMajorant { inner: tailbound::Majorant::new(spec.inner.clone()).map_err(to_py)? })
    }

    /// `ln Q^{Lin,LC}(x + 1/2)`.
    fn log_shifted(&self, x: f64) -> f64 {
        self.inner.shifted(x).ln()
    }

    /// `ln Q^LC(x)`.
    fn log_lc(&self, x: f64) -> f64 {
        self.inner.lc(x).ln()
    }

    /// `ln Q^Lin(x)`.
    fn log_lin(&self, x: f64) -> f64 {
        self.inner.lin(x).ln()
    }

    /// `(j, y_j, x_j)` for `j* <= j <= n + 1`.
    fn knots(&self) -> Vec<(u64, f64, f64)> {
        self.inner.lattice().knots().iter().map(|k| (k.j, k.y, k.x)).collect()
    }

    /// `Q^{Lin,LC}(x + 1/2) / Q^LC(x)` for `x <= n`.
    fn ratio(&self, x: f64) -> PyResult<f64> {
        comparison::ratio_r(&self.inner, x).map_err(to_py)
    }

    /// Largest `|ln Q - hull|` against the brute-force hull oracle.
    #[pyo3(signature = (step = 1e-3))]
    fn oracle_discrepancy(&self, step: f64) -> PyResult<f64> {
        Ok(oracle::oracle_check(&self.inner, step).map_err(to_py)?.max_log_discrepancy)
    }
}

/// Supermartingale problem with upper bound `d` and per-step `sigma_i`.
#[pyclass(name = "SupermartingaleSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpec {
    inner: tailbound::SupermartingaleSpec,
}

#[pymethods]
impl PySpec {
    #[new]
    fn new(d: f64, sigmas: Vec<f64>) -> PyResult<Self> {
        Ok(PySpec { inner: tailbound::SupermartingaleSpec::new(d, sigmas).map_err(to_py)? })
    }

    #[staticmethod]
    fn homogeneous(n: u64, d: f64, sigma: f64) -> PyResult<Self> {
        Ok(PySpec { inner: tailbound::SupermartingaleSpec::homogeneous(n, d, sigma).map_err(to_py)? })
    }

    /// `d = 1`, `sigma^2 = p / q`.
    #[staticmethod]
    fn lattice(spec: &PyBinomialSpec) -> Self {
        PySpec { inner: tailbound::SupermartingaleSpec::from_lattice(spec.inner.clone()) }
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn rescale(&self, y: f64) -> f64 {
        self.inner.rescale(y)
    }
}

/// All bound families for one problem.
#[pyclass(name = "MartingaleBounds", frozen)]
struct PyBounds {
    inner: tailbound::MartingaleBounds,
}

#[pymethods]
impl PyBounds {
    #[new]
    fn new(spec: &PySpec) -> PyResult<Self> {
        Ok(PyBounds { inner: tailbound::MartingaleBounds::new(spec.inner.clone()).map_err(to_py)? })
    }

    fn new_bound(&self, y: f64) -> f64 {
        self.inner.new_bound(y)
    }

    fn old_bound(&self, y: f64) -> f64 {
        self.inner.old_bound(y)
    }

    /// Truncation bound given `sum_i P(X_i >= d)`.
    fn truncation_bound(&self, y: f64, exceedance_sum: f64) -> PyResult<f64> {
        self.inner.truncation_bound(y, &core_bounds::Exceedance::Sum(exceedance_sum)).map_err(to_py)
    }

    /// Every bound at `y` (or at lattice coordinate `x`) as a dict.
    #[pyo3(signature = (y = None, x = None))]
    fn report<'py>(&self, py: Python<'py>, y: Option<f64>, x: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let query = match (y, x) {
            (Some(y), None) => Query::Y(y),
            (None, Some(x)) => Query::X(x),
            _ => return Err(PyValueError::new_err("give exactly one of y or x")),
        };
        let r = self.inner.report(query);
        let d = PyDict::new(py);
        d.set_item("y", r.y)?;
        d.set_item("x", r.x)?;
        d.set_item("new_bound", r.new_bound)?;
        d.set_item("log10_new_bound", r.log10_new_bound)?;
        d.set_item("old_bound", r.old_bound)?;
        d.set_item("log10_old_bound", r.log10_old_bound)?;
        d.set_item("ratio", r.ratio)?;
        d.set_item("gaussian_bound", r.gaussian_bound)?;
        d.set_item("hoeffding_baseline", r.hoeffding_baseline)?;
        d.set_item("clipped_new", r.clipped_new)?;
        d.set_item("clipped_old", r.clipped_old)?;
        Ok(d)
    }
}

/// `u*, u**, 1/u**, alpha*, r(alpha*), e^{r(alpha*)} - 1, c2, c3`.
#[pyfunction]
fn constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let k = tailbound::ComparisonConstants::get();
    let d = PyDict::new(py);
    d.set_item("u_star", k.u_star)?;
    d.set_item("u_double_star", k.u_double_star)?;
    d.set_item("inverse_u_double_star", k.inverse_u_double_star())?;
    d.set_item("alpha_star", k.alpha_star)?;
    d.set_item("r_alpha_star", k.r_alpha_star)?;
    d.set_item("exp_r_alpha_star_minus_one", k.exp_r_minus_one)?;
    d.set_item("c2", core_bounds::c2())?;
    d.set_item("c3", core_bounds::c3())?;
    Ok(d)
}

#[pyfunction]
fn c_alpha(alpha: f64) -> PyResult<f64> {
    tailbound::c_alpha(alpha).map_err(to_py)
}

#[pyfunction]
fn normal_tail(z: f64) -> f64 {
    tailbound::normal_tail(z)
}

#[pyfunction]
fn j_double_star(n: u64, p: f64) -> PyResult<i64> {
    comparison::j_double_star(n, p).map_err(to_py)
}

#[pyfunction]
fn dominance_all_x(n: u64, p: f64) -> PyResult<bool> {
    comparison::dominance_all_x(n, p).map_err(to_py)
}

/// `P(B >= j)` from exact big-integer arithmetic.
#[pyfunction]
fn exact_tail(spec: &PyBinomialSpec, j: u64) -> PyResult<f64> {
    Ok(oracle::exact_tail(&spec.inner, j).map_err(to_py)?.to_f64())
}

/// Monte Carlo `P(S_n >= y)`: `(point, ci_low, ci_high)`.
#[pyfunction]
#[pyo3(signature = (spec, family, y, trials, seed, use_max = false, drift = 0.0))]
fn estimate_tail(
    spec: &PySpec,
    family: &str,
    y: f64,
    trials: u64,
    seed: u64,
    use_max: bool,
    drift: f64,
) -> PyResult<(f64, f64, f64)> {
    let kind: FamilyKind = family.parse().map_err(to_py)?;
    let fam = IncrementFamily::new(kind).with_drift(drift);
    let e = simulate::estimate_tail(&spec.inner, &fam, y, trials, seed, use_max).map_err(to_py)?;
    Ok((e.point, e.ci_low, e.ci_high))
}

#[pymodule]
fn tailbound_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBinomialSpec>()?;
    m.add_class::<PyMajorant>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyBounds>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(c_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(normal_tail, m)?)?;
    m.add_function(wrap_pyfunction!(j_double_star, m)?)?;
    m.add_function(wrap_pyfunction!(dominance_all_x, m)?)?;
    m.add_function(wrap_pyfunction!(exact_tail, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_tail, m)?)?;
    Ok(())
}
