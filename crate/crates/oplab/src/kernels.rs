//! Closed-form kernel functions of the large-index phase analysis.
//!
//! All four are built from the two complex factors
//! `z1 = 1 - x^2/2 - i x + (x^2/2) e^{i t}` and
//! `z3 = 1 - x^2/2 - i x - (x^2/2) e^{-i t}`:
//!
//! * `f = 2 ln|z1| - 2 ln|z3|` (a difference of four principal logs),
//! * `g = -2 (arg z1 + arg z3)`,
//! * `h = f / g`,
//! * `l(m) = i ((z3/conj z3)^m - (conj z1/z1)^m)`, and
//! * `eps(m) = e^{i m t} (l / (m g) - 1)`.
//!
//! The module evaluates them through `ln(1+u)`/`atan2` reformulations that
//! stay fully accurate as `x -> 0`, where the defining log differences
//! cancel to `O(x^2)`. The definitional complex-log routes are kept as
//! audit evaluators for tests.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("|x| = {0} is outside the analyticity disc |x| < 1/4")]
    OutOfDisc(f64),
    #[error("order m must be nonzero")]
    ZeroOrder,
}

pub(crate) fn check_disc(x: f64) -> Result<(), KernelError> {
    if !(x.abs() < 0.25) {
        return Err(KernelError::OutOfDisc(x));
    }
    Ok(())
}

#[inline]
pub(crate) fn z1(x: f64, t: f64) -> Complex64 {
    let (st, ct) = t.sin_cos();
    Complex64::new(
        1.0 - x * x / 2.0 + x * x / 2.0 * ct,
        -x + x * x / 2.0 * st,
    )
}

#[inline]
pub(crate) fn z3(x: f64, t: f64) -> Complex64 {
    let (st, ct) = t.sin_cos();
    Complex64::new(
        1.0 - x * x / 2.0 - x * x / 2.0 * ct,
        -x + x * x / 2.0 * st,
    )
}

/// Sum and difference of the two factor arguments.
#[inline]
fn factor_args(x: f64, t: f64) -> (f64, f64) {
    let a1 = z1(x, t).arg();
    let a3 = z3(x, t).arg();
    (a1 + a3, a3 - a1)
}

/// `f(x, t)`; real-valued on `|x| < 1/4`, vanishing like `2 x^2 cos t`.
pub fn f_kernel(x: f64, t: f64) -> Result<f64, KernelError> {
    check_disc(x)?;
    let (st, ct) = t.sin_cos();
    let half = 1.0 - x * x / 2.0;
    let d = 1.0 + x * x * x * x / 2.0; // |w|^2 + x^4/4 with w = half - i x
    let r_plus = half * ct - x * st;
    let r_minus = half * ct + x * st;
    Ok((x * x * r_plus / d).ln_1p() - (-x * x * r_minus / d).ln_1p())
}

/// `g(x, t)`; real-valued, behaving like `4x - 2 x^2 sin t` near `x = 0`.
pub fn g_kernel(x: f64, t: f64) -> Result<f64, KernelError> {
    check_disc(x)?;
    let (sum, _) = factor_args(x, t);
    Ok(-2.0 * sum)
}

/// `h = f / g`, extended by its limit value 0 at `x = 0`.
pub fn h_kernel(x: f64, t: f64) -> Result<f64, KernelError> {
    check_disc(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(f_kernel(x, t)? / g_kernel(x, t)?)
}

/// The simplified single-log/arctan closed form of `h`; an independent
/// evaluation route used to cross-check [`h_kernel`].
pub fn h_simplified(x: f64, t: f64) -> Result<f64, KernelError> {
    check_disc(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let (st, ct) = t.sin_cos();
    let x2 = x * x;
    let num_arg = 2.0 * x2 * (1.0 - x2 / 2.0) * ct
        / (1.0 - x2 * ct - x2 * x * st + x2 * x2 * (0.5 * t).cos().powi(2));
    let den_arg = 2.0 * x * (1.0 - x2 / 2.0) * (1.0 - x / 2.0 * st) / (1.0 - 2.0 * x2 + x2 * x * st);
    Ok(num_arg.ln_1p() / (2.0 * den_arg.atan()))
}

fn sinc_minus_one(y: f64) -> f64 {
    if y.abs() < 1e-2 {
        let y2 = y * y;
        -y2 / 6.0 * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0))
    } else {
        y.sin() / y - 1.0
    }
}

/// `l(m, x, t)`; equals `-2 e^{i m (arg z3 - arg z1)} sin(m (arg z1 + arg z3))`.
pub fn l_kernel(m: i32, x: f64, t: f64) -> Result<Complex64, KernelError> {
    check_disc(x)?;
    if m == 0 {
        return Err(KernelError::ZeroOrder);
    }
    let (sum, diff) = factor_args(x, t);
    let mf = m as f64;
    Ok(-2.0 * Complex64::from_polar((mf * sum).sin(), mf * diff))
}

/// `eps(m, x, t) = e^{i m t} (l / (m g) - 1)`, evaluated without cancellation:
/// `l/(m g) = e^{i m (arg z3 - arg z1)} sinc(m (arg z1 + arg z3))`.
pub fn eps_kernel(m: i32, x: f64, t: f64) -> Result<Complex64, KernelError> {
    check_disc(x)?;
    if m == 0 {
        return Err(KernelError::ZeroOrder);
    }
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (sum, diff) = factor_args(x, t);
    let mf = m as f64;
    let y = mf * sum;
    let sc1 = sinc_minus_one(y); // sinc(y) - 1
    let phase = mf * diff;
    let (sp, cp) = phase.sin_cos();
    // e^{i phase} sinc(y) - 1 with the unit parts cancelled analytically
    let re = (cp - 1.0) * (1.0 + sc1) + sc1;
    let im = sp * (1.0 + sc1);
    Ok(Complex64::from_polar(1.0, mf * t) * Complex64::new(re, im))
}

/// Definitional four-log evaluation of `f`; audit route for tests.
pub fn f_via_logs(x: f64, t: f64) -> Result<Complex64, KernelError> {
    check_disc(x)?;
    let za = z1(x, t);
    let zb = za.conj(); // 1 - x^2/2 + i x + (x^2/2) e^{-i t}
    let zc = z3(x, t);
    let zd = zc.conj();
    Ok(za.ln() + zb.ln() - zc.ln() - zd.ln())
}

/// Definitional four-log evaluation of `g`; audit route for tests.
pub fn g_via_logs(x: f64, t: f64) -> Result<Complex64, KernelError> {
    check_disc(x)?;
    let i = Complex64::new(0.0, 1.0);
    let za = z1(x, t);
    let zb = za.conj();
    let zc = z3(x, t);
    let zd = zc.conj();
    Ok(i * (za.ln() - zb.ln() + zc.ln() - zd.ln()))
}

/// Definitional power-quotient evaluation of `l`; audit route for tests.
pub fn l_via_powers(m: i32, x: f64, t: f64) -> Result<Complex64, KernelError> {
    check_disc(x)?;
    if m == 0 {
        return Err(KernelError::ZeroOrder);
    }
    let i = Complex64::new(0.0, 1.0);
    let za = z1(x, t);
    let zc = z3(x, t);
    let r1 = za.conj() / za;
    let r3 = zc / zc.conj();
    Ok(i * (r3.powi(m) - r1.powi(m)))
}
