use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use chabauty_core::batch::{parse_jobs, run_batch, run_job, CurveJob, CurveSpec, JobOutcome, SummaryRow};
use chabauty_core::coleman::IntegrationContext;
use chabauty_core::curve::{HyperellipticCurve, RationalPoint};
use chabauty_core::frobenius::{brute_force_l_polynomial, zeta, ZetaData};
use chabauty_core::local::DifferentialForm;
use chabauty_core::pipeline::{run, RunOptions, ZeroPoint, ZeroSetReport};
use chabauty_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::BadInput(_) | Error::NotOnCurve(_) | Error::BadReduction { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn point(s: &str) -> PyResult<RationalPoint> {
    RationalPoint::parse(s).map_err(err)
}

/// y² = G(x) with G of degree 7, given by coefficients constant term first.
#[pyclass(name = "Curve", frozen)]
pub struct PyCurve {
    inner: HyperellipticCurve,
}

#[pymethods]
impl PyCurve {
    #[new]
    #[pyo3(signature = (coeffs, scaling=None))]
    fn new(coeffs: Vec<String>, scaling: Option<(String, String)>) -> PyResult<Self> {
        let spec = CurveSpec { coeffs, scaling: scaling.map(|(u, v)| [u, v]) };
        Ok(PyCurve { inner: spec.curve().map_err(err)? })
    }

    /// Coefficients of the monic working model.
    #[getter]
    fn model_coeffs(&self) -> Vec<String> {
        self.inner.f().0.iter().map(chabauty_core::curve::format_rational).collect()
    }

    fn choose_prime(&self, lower_bound: u64) -> u64 {
        self.inner.choose_prime(lower_bound)
    }

    fn zeta(&self, p: u64) -> PyResult<PyZeta> {
        Ok(PyZeta { inner: zeta(&self.inner, p).map_err(err)? })
    }

    fn zeta_brute_force(&self, p: u64) -> PyResult<PyZeta> {
        Ok(PyZeta { inner: brute_force_l_polynomial(&self.inner, p).map_err(err)? })
    }

    /// Rational points with x = a/b, |a|, b ≤ height, as strings.
    fn search_points(&self, height: u64) -> Vec<String> {
        self.inner.search_rational_points(height).iter().map(|p| p.to_string()).collect()
    }

    /// ∫ ω_i from one rational point to another ("x,y" or "infinity"), as a p-adic digit string.
    #[pyo3(signature = (p, form, start, end, prec=10))]
    fn integrate(&self, p: u64, form: usize, start: &str, end: &str, prec: i64) -> PyResult<String> {
        if form > 2 {
            return Err(PyValueError::new_err("form index must be 0, 1 or 2"));
        }
        self.inner.check_good_reduction(p).map_err(err)?;
        let lift = |s: &str| -> PyResult<_> {
            let pt = self.inner.from_original(&point(s)?);
            if !self.inner.is_on_curve(&pt) {
                return Err(PyValueError::new_err(format!("{s} is not on the curve")));
            }
            Ok(self.inner.rational_to_padic(&pt, p, prec + 6))
        };
        let (a, b) = (lift(start)?, lift(end)?);
        let ctx = IntegrationContext::new(&self.inner, p, prec).map_err(err)?;
        let v = ctx.coleman_integral(&DifferentialForm::basis(form, p, prec + 6), &a, &b).map_err(err)?;
        Ok(v.to_string())
    }

    /// Zero set for base point `p0` and known points (strings "x,y" or "infinity").
    #[pyo3(signature = (p0, known, p=None, n=None))]
    fn zero_set(&self, p0: &str, known: Vec<String>, p: Option<u64>, n: Option<i64>) -> PyResult<PyReport> {
        let known: Vec<RationalPoint> = known.iter().map(|s| point(s)).collect::<PyResult<_>>()?;
        let r = run(&self.inner, &point(p0)?, &known, &RunOptions { p, n, m: None }).map_err(err)?;
        Ok(PyReport { inner: r })
    }

    fn __repr__(&self) -> String {
        let c: Vec<String> = self.inner.original().0.iter().map(chabauty_core::curve::format_rational).collect();
        format!("Curve([{}])", c.join(", "))
    }
}

#[pyclass(name = "Zeta", frozen)]
pub struct PyZeta {
    inner: ZetaData,
}

#[pymethods]
impl PyZeta {
    #[getter]
    fn prime(&self) -> u64 {
        self.inner.prime
    }
    #[getter]
    fn l_poly(&self) -> Vec<i64> {
        self.inner.l_poly.clone()
    }
    #[getter]
    fn points_fp(&self) -> u64 {
        self.inner.points_fp
    }
    #[getter]
    fn jacobian_order(&self) -> u64 {
        self.inner.jacobian_order
    }
    #[getter]
    fn coleman_bound(&self) -> u64 {
        self.inner.points_fp + 4
    }
    fn functional_equation_holds(&self) -> bool {
        self.inner.functional_equation_holds()
    }
    fn __eq__(&self, other: &PyZeta) -> bool {
        self.inner == other.inner
    }
    fn __repr__(&self) -> String {
        format!("Zeta(p={}, l_poly={:?})", self.inner.prime, self.inner.l_poly)
    }
}

fn describe(z: &ZeroPoint) -> String {
    match &z.exact {
        Some(e) => format!("({}, {})", e.x, e.y),
        None => format!("{:?}", z.point),
    }
}

#[pyclass(name = "Report", frozen)]
pub struct PyReport {
    inner: ZeroSetReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.inner.status)
    }
    #[getter]
    fn known(&self) -> Vec<String> {
        self.inner.known.iter().map(describe).collect()
    }
    #[getter]
    fn new_rational(&self) -> Vec<String> {
        self.inner.new_rational.iter().map(describe).collect()
    }
    #[getter]
    fn torsion(&self) -> Vec<String> {
        self.inner.torsion.iter().map(describe).collect()
    }
    #[getter]
    fn other_algebraic(&self) -> Vec<String> {
        self.inner.other_algebraic.iter().map(describe).collect()
    }
    #[getter]
    fn weierstrass_count(&self) -> usize {
        self.inner.weierstrass_w.len()
    }
    /// (x minimal polynomial, y minimal polynomial) of each point outside C(Q)_known and W.
    fn extra_minpolys(&self) -> Vec<(String, String)> {
        self.inner.extra_points().filter_map(|z| z.exact.as_ref().map(|e| (e.x_minpoly.clone(), e.y_minpoly.clone()))).collect()
    }
    fn summary(&self) -> String {
        self.inner.summary()
    }
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

fn outcome_json(o: &JobOutcome) -> PyResult<String> {
    serde_json::to_string(o).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs one job given as a JSON object; returns the outcome as JSON.
#[pyfunction]
fn analyze_job(job_json: &str) -> PyResult<String> {
    let job: CurveJob = serde_json::from_str(job_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    outcome_json(&run_job(&job))
}

/// Runs a JSON-lines job list, writing reports under `out`; returns the summary rows as JSON.
#[pyfunction]
fn batch(py: Python<'_>, jobs_text: &str, parallel: usize, out: PathBuf) -> PyResult<String> {
    let jobs = parse_jobs(jobs_text).map_err(err)?;
    let outcomes = py.detach(|| run_batch(&jobs, parallel, &out)).map_err(err)?;
    let rows: Vec<SummaryRow> = outcomes.iter().map(SummaryRow::from_outcome).collect();
    serde_json::to_string(&rows).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn chabauty(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyZeta>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(analyze_job, m)?)?;
    m.add_function(wrap_pyfunction!(batch, m)?)?;
    Ok(())
}
