//! Python bindings exposing the main types and operations of the
//! laboratory: coefficient families and their condition checks, recurrence
//! sweeps, the phase decomposition, kernel functions and their Fourier
//! coefficients, limit estimators, the stability scanner, and the operator
//! layer on trigonometric signals.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use oplab::chromatic::{self, TrigSignal};
use oplab::conditions;
use oplab::family::{CoefficientFamily, OffsetRule};
use oplab::fourier;
use oplab::kernels;
use oplab::lemmas::{self, LemmaId};
use oplab::limits::{self, LimitEstimate};
use oplab::phase::{self, Parity};
use oplab::recurrence;

fn value_err<E: std::fmt::Display>(err: E) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// A recursion-coefficient family.
#[pyclass(name = "Family", from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: CoefficientFamily,
}

#[pymethods]
impl PyFamily {
    #[staticmethod]
    fn power_law(c: f64, p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoefficientFamily::power_law(c, p).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn hermite() -> Self {
        Self {
            inner: CoefficientFamily::hermite_exact(),
        }
    }

    #[staticmethod]
    fn freud_leading(beta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoefficientFamily::freud_leading(beta).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn custom_table(table: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: CoefficientFamily::custom_table(table).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn detour(base: &PyFamily, period: u64, depth: u64) -> PyResult<Self> {
        Ok(Self {
            inner: CoefficientFamily::detour_perturbed(base.inner.clone(), period, depth)
                .map_err(value_err)?,
        })
    }

    /// Copy of this family with offsets `beta_n = rho * gamma_n`.
    fn with_rho_offsets(&self, rho: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self
                .inner
                .clone()
                .with_offsets(OffsetRule::RhoProportional { rho })
                .map_err(value_err)?,
        })
    }

    fn id(&self) -> String {
        self.inner.id()
    }

    fn gamma(&self, n: i64) -> PyResult<f64> {
        self.inner.gamma_checked(n).map_err(value_err)
    }

    /// `(s_n, ds_n)` forward differences.
    fn finite_differences(&self, n: u64) -> (f64, f64) {
        self.inner.finite_differences(n)
    }

    fn epsilon(&self, n: u64) -> f64 {
        self.inner.epsilon(n)
    }

    fn eta(&self, n: u64) -> f64 {
        self.inner.eta(n)
    }

    fn check_conditions<'py>(&self, py: Python<'py>, horizon: u64) -> PyResult<Bound<'py, PyDict>> {
        let report = conditions::check_conditions(&self.inner, horizon).map_err(value_err)?;
        let dict = PyDict::new(py);
        dict.set_item("family", &report.family)?;
        dict.set_item("horizon", report.horizon)?;
        dict.set_item("any_violated", report.any_violated())?;
        dict.set_item("n0_m0", report.n0_m0)?;
        dict.set_item("kappa", report.kappa)?;
        let entries = PyDict::new(py);
        for entry in &report.entries {
            let e = PyDict::new(py);
            e.set_item("status", entry.status.as_str())?;
            e.set_item("witness", entry.witness)?;
            let diags = PyDict::new(py);
            for (k, v) in &entry.diagnostics {
                diags.set_item(*k, *v)?;
            }
            e.set_item("diagnostics", diags)?;
            entries.set_item(entry.id, e)?;
        }
        dict.set_item("entries", entries)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!("Family({})", self.inner.id())
    }
}

fn estimate_dict<'py>(py: Python<'py>, est: &LimitEstimate) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("value", est.value)?;
    dict.set_item("window", est.window)?;
    dict.set_item("fluctuation", est.fluctuation)?;
    dict.set_item("method", est.method.as_str())?;
    dict.set_item("converged", est.converged)?;
    Ok(dict)
}

/// Recurrence sweep; returns checkpoint arrays.
#[pyfunction]
#[pyo3(signature = (family, omega, n, stride = 1, nonsymmetric = false))]
fn eval<'py>(
    py: Python<'py>,
    family: &PyFamily,
    omega: f64,
    n: u64,
    stride: u64,
    nonsymmetric: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let trace = if nonsymmetric {
        recurrence::eval_nonsymmetric(&family.inner, omega, n, stride)
    } else {
        recurrence::eval_symmetric(&family.inner, omega, n, stride)
    }
    .map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("n", trace.rows.iter().map(|r| r.n).collect::<Vec<_>>())?;
    dict.set_item("p_n", trace.rows.iter().map(|r| r.p_n).collect::<Vec<_>>())?;
    dict.set_item(
        "p_np1",
        trace.rows.iter().map(|r| r.p_np1).collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "sum_p2",
        trace.rows.iter().map(|r| r.sum_p2).collect::<Vec<_>>(),
    )?;
    dict.set_item(
        "sum_invgamma",
        trace.rows.iter().map(|r| r.sum_invgamma).collect::<Vec<_>>(),
    )?;
    Ok(dict)
}

/// Relative two-point summation identity residual.
#[pyfunction]
fn cd_residual(family: &PyFamily, omega: f64, sigma: f64, n: u64) -> PyResult<f64> {
    recurrence::cd_residual(&family.inner, omega, sigma, n).map_err(value_err)
}

/// Phase decomposition; returns checkpoint arrays plus run diagnostics.
#[pyfunction]
#[pyo3(signature = (family, omega, n, stride = 1, odd_pair = false))]
fn unwind_phase<'py>(
    py: Python<'py>,
    family: &PyFamily,
    omega: f64,
    n: u64,
    stride: u64,
    odd_pair: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let parity = if odd_pair {
        Parity::OddPair
    } else {
        Parity::EvenPair
    };
    let trace =
        phase::unwind_phase(&family.inner, omega, n, stride, parity).map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("n", trace.rows.iter().map(|r| r.n).collect::<Vec<_>>())?;
    dict.set_item(
        "abs_e",
        trace.rows.iter().map(|r| r.abs_e).collect::<Vec<_>>(),
    )?;
    dict.set_item("phi", trace.rows.iter().map(|r| r.phi).collect::<Vec<_>>())?;
    dict.set_item(
        "delta",
        trace.rows.iter().map(|r| r.delta).collect::<Vec<_>>(),
    )?;
    dict.set_item("mu", trace.rows.iter().map(|r| r.mu).collect::<Vec<_>>())?;
    dict.set_item("s", trace.rows.iter().map(|r| r.s).collect::<Vec<_>>())?;
    dict.set_item("burn_in", trace.summary.burn_in)?;
    dict.set_item("two_term_max_rel", trace.summary.two_term_max_rel)?;
    dict.set_item("recon_max_rel", trace.summary.recon_max_rel)?;
    Ok(dict)
}

#[pyfunction]
fn ab_coefficients(family: &PyFamily, omega: f64, n: u64) -> (Complex64, Complex64) {
    phase::ab_coefficients(&family.inner, omega, n)
}

#[pyfunction]
fn f_kernel(x: f64, t: f64) -> PyResult<f64> {
    kernels::f_kernel(x, t).map_err(value_err)
}

#[pyfunction]
fn g_kernel(x: f64, t: f64) -> PyResult<f64> {
    kernels::g_kernel(x, t).map_err(value_err)
}

#[pyfunction]
fn h_kernel(x: f64, t: f64) -> PyResult<f64> {
    kernels::h_kernel(x, t).map_err(value_err)
}

#[pyfunction]
fn l_kernel(m: i32, x: f64, t: f64) -> PyResult<Complex64> {
    kernels::l_kernel(m, x, t).map_err(value_err)
}

#[pyfunction]
fn eps_kernel(m: i32, x: f64, t: f64) -> PyResult<Complex64> {
    kernels::eps_kernel(m, x, t).map_err(value_err)
}

/// Residual-decay verification of one asymptotic representation.
#[pyfunction]
fn verify_lemma<'py>(
    py: Python<'py>,
    lemma: &str,
    family: &PyFamily,
    omega: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let id: LemmaId = lemma.parse().map_err(value_err)?;
    let report = lemmas::verify_lemma(id, &family.inner, omega).map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("lemma", report.lemma.as_str())?;
    dict.set_item("family", &report.family)?;
    dict.set_item("omega", report.omega)?;
    dict.set_item("n", report.samples.iter().map(|s| s.n).collect::<Vec<_>>())?;
    dict.set_item(
        "residual",
        report.samples.iter().map(|s| s.residual).collect::<Vec<_>>(),
    )?;
    dict.set_item("fit_exponent", report.fit_exponent)?;
    dict.set_item("claimed_exponent", report.claimed_exponent)?;
    dict.set_item("verdict", report.verdict.as_str())?;
    Ok(dict)
}

/// Fourier coefficients `c_{-m_max} .. c_{m_max}` of the ratio kernel.
#[pyfunction]
#[pyo3(signature = (x, m_max, grid = None))]
fn cm_table(x: f64, m_max: usize, grid: Option<usize>) -> PyResult<Vec<(i64, Complex64)>> {
    let grid = grid.unwrap_or_else(|| (16 * m_max.max(1)).next_power_of_two().max(64));
    let table = fourier::cm_fft(x, m_max, grid).map_err(value_err)?;
    let m0 = m_max as i64;
    Ok((-m0..=m0).map(|m| (m, table.c(m))).collect())
}

/// One coefficient by the contour/residue route.
#[pyfunction]
fn cm_contour(x: f64, m: i64) -> PyResult<Complex64> {
    Ok(fourier::cm_contour(x, m).map_err(value_err)?.value)
}

#[pyfunction]
#[pyo3(signature = (x, m, k, grid = 64))]
fn fkm(x: f64, m: i32, k: i64, grid: usize) -> PyResult<Complex64> {
    fourier::fkm(x, m, k, grid).map_err(value_err)
}

#[pyfunction]
fn beta_limit<'py>(
    py: Python<'py>,
    family: &PyFamily,
    omega: f64,
    n: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let est = limits::beta_limit(&family.inner, omega, n).map_err(value_err)?;
    estimate_dict(py, &est)
}

#[pyfunction]
fn ratio_limit<'py>(
    py: Python<'py>,
    family: &PyFamily,
    omega: f64,
    n: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let est = limits::ratio_limit(&family.inner, omega, n).map_err(value_err)?;
    estimate_dict(py, &est)
}

#[pyfunction]
fn growth_exponent(family: &PyFamily, omega: f64, n: u64) -> PyResult<f64> {
    limits::growth_exponent(&family.inner, omega, n).map_err(value_err)
}

/// Stability classifications of the non-symmetric recurrence over offset
/// slopes.
#[pyfunction]
fn conjecture_scan<'py>(
    py: Python<'py>,
    family: &PyFamily,
    rhos: Vec<f64>,
    omega: f64,
    n: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let verdicts =
        limits::conjecture_scan(&family.inner, &rhos, omega, n).map_err(value_err)?;
    verdicts
        .iter()
        .map(|v| {
            let dict = PyDict::new(py);
            dict.set_item("rho", v.rho)?;
            dict.set_item("classification", v.classification.as_str())?;
            dict.set_item("tail_rel_change", v.tail_rel_change)?;
            dict.set_item("envelope_ratio", v.envelope_ratio)?;
            dict.set_item("overflow_at", v.overflow_at)?;
            Ok(dict)
        })
        .collect()
}

fn signal_from_terms(terms: Vec<(f64, Complex64)>) -> PyResult<TrigSignal> {
    TrigSignal::new(terms).map_err(value_err)
}

/// Apply the operator of order `n` to a signal given as
/// `[(omega, amplitude)]`; returns the transformed terms.
#[pyfunction]
fn apply_k(
    family: &PyFamily,
    n: i64,
    terms: Vec<(f64, Complex64)>,
) -> PyResult<Vec<(f64, Complex64)>> {
    let signal = signal_from_terms(terms)?;
    let out = chromatic::apply_k(&family.inner, n, &signal).map_err(value_err)?;
    Ok(out.terms().to_vec())
}

#[pyfunction]
fn local_energy(
    family: &PyFamily,
    terms: Vec<(f64, Complex64)>,
    n: u64,
    t: f64,
) -> PyResult<f64> {
    let signal = signal_from_terms(terms)?;
    chromatic::local_energy(&family.inner, &signal, n, t).map_err(value_err)
}

#[pyfunction]
fn signal_norm<'py>(
    py: Python<'py>,
    family: &PyFamily,
    terms: Vec<(f64, Complex64)>,
    n: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let signal = signal_from_terms(terms)?;
    let est = chromatic::norm(&family.inner, &signal, n).map_err(value_err)?;
    estimate_dict(py, &est)
}

/// Decay of the normalised cross sum of two exponentials.
#[pyfunction]
fn orthogonality_decay<'py>(
    py: Python<'py>,
    family: &PyFamily,
    omega: f64,
    sigma: f64,
    n: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let report =
        chromatic::orthogonality_check(&family.inner, omega, sigma, n, (n / 100).max(1))
            .map_err(value_err)?;
    let dict = PyDict::new(py);
    dict.set_item("omega", report.omega)?;
    dict.set_item("sigma", report.sigma)?;
    dict.set_item("ratio_first", report.ratio_first)?;
    dict.set_item("ratio_last", report.ratio_last)?;
    dict.set_item("decay_factor", report.decay_factor)?;
    Ok(dict)
}

/// Max relative residual of the operator summation-by-parts identity.
#[pyfunction]
fn operator_cd_residual(
    family: &PyFamily,
    terms_f: Vec<(f64, Complex64)>,
    terms_g: Vec<(f64, Complex64)>,
    order: u64,
) -> PyResult<f64> {
    let f = signal_from_terms(terms_f)?;
    let g = signal_from_terms(terms_g)?;
    let ts = [-2.0, -1.0, -0.3, 0.0, 0.7, 1.5, 2.4];
    chromatic::operator_cd_residual(&family.inner, &f, &g, order, &ts).map_err(value_err)
}

#[pymodule]
fn oplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(eval, m)?)?;
    m.add_function(wrap_pyfunction!(cd_residual, m)?)?;
    m.add_function(wrap_pyfunction!(unwind_phase, m)?)?;
    m.add_function(wrap_pyfunction!(ab_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(f_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(g_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(h_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(l_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(eps_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma, m)?)?;
    m.add_function(wrap_pyfunction!(cm_table, m)?)?;
    m.add_function(wrap_pyfunction!(cm_contour, m)?)?;
    m.add_function(wrap_pyfunction!(fkm, m)?)?;
    m.add_function(wrap_pyfunction!(beta_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ratio_limit, m)?)?;
    m.add_function(wrap_pyfunction!(growth_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(conjecture_scan, m)?)?;
    m.add_function(wrap_pyfunction!(apply_k, m)?)?;
    m.add_function(wrap_pyfunction!(local_energy, m)?)?;
    m.add_function(wrap_pyfunction!(signal_norm, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_decay, m)?)?;
    m.add_function(wrap_pyfunction!(operator_cd_residual, m)?)?;
    Ok(())
}
