//! Streaming evaluation of orthonormal polynomials by three-term recurrence,
//! symmetric and non-symmetric, with compensated partial sums and
//! checkpointed traces.

use thiserror::Error;

use crate::family::CoefficientFamily;
use crate::report::{csv_document, fmt_f64};
use crate::sum::Compensated;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("recurrence value became non-finite at index {index}")]
    NonFinite { index: u64 },
    #[error("horizon {requested} exceeds table limit {limit}")]
    HorizonExceedsTable { requested: u64, limit: u64 },
    #[error("{0}")]
    BadArgument(String),
}

/// One checkpoint of a recurrence run: state and compensated partial sums
/// through index `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRow {
    pub n: u64,
    pub p_n: f64,
    pub p_np1: f64,
    pub sum_p2: f64,
    pub sum_invgamma: f64,
}

/// Result of a recurrence sweep to index `n`: the final state plus rows
/// recorded every `stride` steps (memory stays O(n/stride)).
#[derive(Debug, Clone)]
pub struct EvalTrace {
    pub omega: f64,
    pub n: u64,
    pub stride: u64,
    pub p_n: f64,
    pub p_np1: f64,
    pub sum_p2: f64,
    pub sum_invgamma: f64,
    pub rows: Vec<CheckpointRow>,
}

impl EvalTrace {
    /// `nu_n = sum p_k^2 / sum 1/gamma_k` at every checkpoint.
    pub fn ratio_rows(&self) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.n, r.sum_p2 / r.sum_invgamma))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        csv_document(
            "n,p_n,p_np1,sum_p2,sum_invgamma",
            self.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_f64(r.p_n),
                    fmt_f64(r.p_np1),
                    fmt_f64(r.sum_p2),
                    fmt_f64(r.sum_invgamma),
                ]
            }),
        )
    }
}

pub(crate) fn check_horizon(family: &CoefficientFamily, needed: u64) -> Result<(), EvalError> {
    if let Some(limit) = family.horizon_limit() {
        if needed > limit {
            return Err(EvalError::HorizonExceedsTable {
                requested: needed,
                limit,
            });
        }
    }
    Ok(())
}

/// Visitor access to one recurrence step.
#[derive(Debug, Clone, Copy)]
pub struct StepState {
    pub n: u64,
    pub gamma_n: f64,
    pub p_n: f64,
    pub p_np1: f64,
    /// Compensated `sum_{k<=n} p_k^2`.
    pub sum_p2: f64,
    /// Compensated `sum_{k<=n} 1/gamma_k`.
    pub sum_invgamma: f64,
}

impl StepState {
    /// `beta_n = gamma_n (p_n^2 + p_{n+1}^2)`.
    pub fn beta(&self) -> f64 {
        self.gamma_n * (self.p_n * self.p_n + self.p_np1 * self.p_np1)
    }

    /// `nu_n = sum p_k^2 / sum 1/gamma_k`.
    pub fn nu(&self) -> f64 {
        self.sum_p2 / self.sum_invgamma
    }
}

/// Core streaming loop shared by every consumer. Starts from `p_{-1} = 0`,
/// `p_0 = 1`, `gamma_{-1} = 1` and iterates
/// `gamma_n p_{n+1} = (omega + beta_n) p_n - gamma_{n-1} p_{n-1}`,
/// calling the visitor once per `n` in `0..=n_max`.
///
/// `use_offsets = false` runs the symmetric recurrence regardless of the
/// family's offset rule, so a zero-offset family produces bit-identical
/// traces through either entry point.
pub fn stream_eval(
    family: &CoefficientFamily,
    use_offsets: bool,
    omega: f64,
    n_max: u64,
    mut visit: impl FnMut(StepState),
) -> Result<(), EvalError> {
    if !omega.is_finite() {
        return Err(EvalError::BadArgument(format!("omega = {omega}")));
    }
    check_horizon(family, n_max)?;
    let mut p_prev = 0.0f64; // p_{n-1}
    let mut p_cur = 1.0f64; // p_n
    let mut gamma_prev = 1.0f64; // gamma_{n-1}
    let mut sum_p2 = Compensated::new();
    let mut sum_inv = Compensated::new();
    for n in 0..=n_max {
        let gamma_n = family.gamma(n as i64);
        let shift = if use_offsets {
            omega + family.beta_offset(n)
        } else {
            omega
        };
        let p_next = (shift * p_cur - gamma_prev * p_prev) / gamma_n;
        if !p_next.is_finite() {
            return Err(EvalError::NonFinite { index: n + 1 });
        }
        sum_p2.add(p_cur * p_cur);
        sum_inv.add(1.0 / gamma_n);
        visit(StepState {
            n,
            gamma_n,
            p_n: p_cur,
            p_np1: p_next,
            sum_p2: sum_p2.value(),
            sum_invgamma: sum_inv.value(),
        });
        p_prev = p_cur;
        p_cur = p_next;
        gamma_prev = gamma_n;
    }
    Ok(())
}

fn eval_inner(
    family: &CoefficientFamily,
    use_offsets: bool,
    omega: f64,
    n_max: u64,
    stride: u64,
) -> Result<EvalTrace, EvalError> {
    if n_max < 1 {
        return Err(EvalError::BadArgument("n_max must be at least 1".into()));
    }
    if stride < 1 {
        return Err(EvalError::BadArgument("stride must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity((n_max / stride + 2) as usize);
    let mut last = None;
    stream_eval(family, use_offsets, omega, n_max, |st| {
        if st.n % stride == 0 || st.n == n_max {
            rows.push(CheckpointRow {
                n: st.n,
                p_n: st.p_n,
                p_np1: st.p_np1,
                sum_p2: st.sum_p2,
                sum_invgamma: st.sum_invgamma,
            });
        }
        last = Some(st);
    })?;
    let last = last.expect("n_max >= 1 guarantees at least one step");
    Ok(EvalTrace {
        omega,
        n: n_max,
        stride,
        p_n: last.p_n,
        p_np1: last.p_np1,
        sum_p2: last.sum_p2,
        sum_invgamma: last.sum_invgamma,
        rows,
    })
}

/// Symmetric sweep; the family's offset rule is ignored.
pub fn eval_symmetric(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
    stride: u64,
) -> Result<EvalTrace, EvalError> {
    eval_inner(family, false, omega, n_max, stride)
}

/// Non-symmetric sweep using the family's offsets `beta_n`.
pub fn eval_nonsymmetric(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
    stride: u64,
) -> Result<EvalTrace, EvalError> {
    eval_inner(family, true, omega, n_max, stride)
}

/// Value pair `(p_n, p_{n+1})` of the symmetric recurrence at a single
/// frequency.
pub fn eval_pair_at(
    family: &CoefficientFamily,
    omega: f64,
    n: u64,
) -> Result<(f64, f64), EvalError> {
    let mut out = (0.0, 0.0);
    stream_eval(family, false, omega, n, |st| {
        if st.n == n {
            out = (st.p_n, st.p_np1);
        }
    })?;
    Ok(out)
}

/// Relative Christoffel-Darboux residual at index `n`:
/// `(omega - sigma) sum_{k<=n} p_k(omega) p_k(sigma)` against
/// `gamma_n (p_{n+1}(omega) p_n(sigma) - p_{n+1}(sigma) p_n(omega))`,
/// normalised by the larger magnitude of the two sides.
pub fn cd_residual(
    family: &CoefficientFamily,
    omega: f64,
    sigma: f64,
    n: u64,
) -> Result<f64, EvalError> {
    if omega == sigma {
        return Err(EvalError::BadArgument(
            "cd_residual requires omega != sigma".into(),
        ));
    }
    check_horizon(family, n)?;
    let mut pw_prev = 0.0;
    let mut pw = 1.0;
    let mut ps_prev = 0.0;
    let mut ps = 1.0;
    let mut gamma_prev = 1.0;
    let mut cross = Compensated::new();
    let mut rhs = 0.0;
    for k in 0..=n {
        let g = family.gamma(k as i64);
        cross.add(pw * ps);
        let pw_next = (omega * pw - gamma_prev * pw_prev) / g;
        let ps_next = (sigma * ps - gamma_prev * ps_prev) / g;
        if !pw_next.is_finite() || !ps_next.is_finite() {
            return Err(EvalError::NonFinite { index: k + 1 });
        }
        if k == n {
            rhs = g * (pw_next * ps - ps_next * pw);
        }
        pw_prev = pw;
        pw = pw_next;
        ps_prev = ps;
        ps = ps_next;
        gamma_prev = g;
    }
    let lhs = (omega - sigma) * cross.value();
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).abs() / scale)
}

/// Christoffel-type ratio `nu_n` at checkpoints of a symmetric sweep.
pub fn christoffel_ratio(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
    stride: u64,
) -> Result<Vec<(u64, f64)>, EvalError> {
    if n_max < 10 {
        return Err(EvalError::BadArgument("n_max must be at least 10".into()));
    }
    let trace = eval_symmetric(family, omega, n_max, stride)?;
    Ok(trace.ratio_rows())
}
