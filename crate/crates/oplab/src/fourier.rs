//! Fourier coefficients of the kernel functions: direct periodic quadrature,
//! the contour/residue decomposition of the same integrals, the cut/pole
//! geometry behind that decomposition, and structure checks on the
//! coefficient families.

use num_complex::Complex64;
use thiserror::Error;

use crate::kernels::{self, KernelError};
use crate::report::{csv_document, fmt_f64, JsonValue};

use std::f64::consts::{PI, TAU};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("x = {0} must lie in (0, 1/4)")]
    OutOfRange(f64),
    #[error("grid {0} must be a power of two >= {1}")]
    BadGrid(usize, usize),
    #[error("quadrature did not converge below {tolerance} (last difference {last_diff})")]
    NonConvergent { tolerance: f64, last_diff: f64 },
    #[error("{0}")]
    BadArgument(String),
}

fn check_open_range(x: f64) -> Result<(), FourierError> {
    if !(x > 0.0 && x < 0.25) {
        return Err(FourierError::OutOfRange(x));
    }
    Ok(())
}

const GRID_CAP: usize = 1 << 20;

/// Table of Fourier coefficients `c_{-M} ... c_M` of `h(x, .)`.
#[derive(Debug, Clone)]
pub struct FourierTable {
    pub x: f64,
    pub half_order: usize,
    coeffs: Vec<Complex64>,
    pub grid: usize,
    pub error_estimate: f64,
}

impl FourierTable {
    pub fn c(&self, m: i64) -> Complex64 {
        let idx = m + self.half_order as i64;
        self.coeffs[idx as usize]
    }

    pub fn to_csv(&self) -> String {
        let m0 = self.half_order as i64;
        csv_document(
            "m,re,im,abs",
            (-m0..=m0).map(|m| {
                let c = self.c(m);
                vec![
                    m.to_string(),
                    fmt_f64(c.re),
                    fmt_f64(c.im),
                    fmt_f64(c.norm()),
                ]
            }),
        )
    }

    pub fn sidecar_json(&self) -> JsonValue {
        JsonValue::object(vec![
            ("x", JsonValue::number(self.x)),
            ("half_order", JsonValue::integer(self.half_order as u64)),
            ("grid", JsonValue::integer(self.grid as u64)),
            ("error_estimate", JsonValue::number(self.error_estimate)),
        ])
    }
}

fn coeffs_at_grid(x: f64, m_max: usize, grid: usize) -> Result<(Vec<Complex64>, f64), FourierError> {
    let mut sums = vec![Complex64::new(0.0, 0.0); m_max + 1];
    let mut max_h = 0.0f64;
    for j in 0..grid {
        let t = -PI + TAU * (j as f64) / (grid as f64);
        let h = kernels::h_kernel(x, t)?;
        max_h = max_h.max(h.abs());
        for (m, sum) in sums.iter_mut().enumerate() {
            let phase = -(m as f64) * t;
            *sum += h * Complex64::from_polar(1.0, phase);
        }
    }
    for sum in &mut sums {
        *sum /= grid as f64;
    }
    Ok((sums, max_h))
}

/// Fourier coefficients of `h(x, .)` by uniform periodic quadrature with
/// grid doubling. Coefficients at negative order come from the Hermitian
/// symmetry of a real-valued integrand.
pub fn cm_fft(x: f64, m_max: usize, grid: usize) -> Result<FourierTable, FourierError> {
    check_open_range(x)?;
    let floor = (16 * m_max.max(1)).max(64);
    if !grid.is_power_of_two() || grid < floor {
        return Err(FourierError::BadGrid(grid, floor));
    }
    let (mut prev, mut max_h) = coeffs_at_grid(x, m_max, grid)?;
    let mut n = grid;
    loop {
        n *= 2;
        if n > GRID_CAP {
            return Err(FourierError::NonConvergent {
                tolerance: 1e-11,
                last_diff: f64::NAN,
            });
        }
        let (cur, mh) = coeffs_at_grid(x, m_max, n)?;
        max_h = max_h.max(mh);
        let diff = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        if diff < 1e-11 {
            let error_estimate = diff.max(4.0 * f64::EPSILON * max_h);
            let mut coeffs = Vec::with_capacity(2 * m_max + 1);
            for m in (1..=m_max).rev() {
                coeffs.push(cur[m].conj());
            }
            coeffs.extend(cur.iter().copied());
            return Ok(FourierTable {
                x,
                half_order: m_max,
                coeffs,
                grid: n,
                error_estimate,
            });
        }
        prev = cur;
    }
}

/// Independent quadrature of a single coefficient, without exploiting the
/// Hermitian symmetry; audit route for tests.
pub fn cm_quadrature_audit(x: f64, m: i64, grid: usize) -> Result<Complex64, FourierError> {
    check_open_range(x)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..grid {
        let t = -PI + TAU * (j as f64) / (grid as f64);
        let h = kernels::h_kernel(x, t)?;
        sum += h * Complex64::from_polar(1.0, -(m as f64) * t);
    }
    Ok(sum / grid as f64)
}

/// The two factor-ratios of the kernel in the complex variable `z = e^{it}`.
fn h_star(x: f64, z: Complex64) -> Complex64 {
    let half = 1.0 - x * x / 2.0;
    let q = x * x / 2.0;
    // first fraction multiplied through by z to remove 1/z
    let num1 = Complex64::new(half, x) * z + q;
    let den1 = Complex64::new(half, -x) * z - q;
    let num2 = Complex64::new(half, -x) + q * z;
    let den2 = Complex64::new(half, x) - q * z;
    let log1 = (num1 / den1).ln();
    let log2 = (num2 / den2).ln();
    let i = Complex64::new(0.0, 1.0);
    let f = log1 + log2;
    let g = -i * log1 + i * log2;
    f / g
}

/// Cut endpoints, half-line anchors, and the pole pair of the contour
/// decomposition, with the arc-containment bound.
#[derive(Debug, Clone, Copy)]
pub struct ContourGeometry {
    pub w1: Complex64,
    pub w2: Complex64,
    pub v1: Complex64,
    pub v2: Complex64,
    pub pl1: Complex64,
    pub pl2: Complex64,
    /// Radius `x^2 / 2` of the disc containing the whole cut arc.
    pub arc_bound_radius: f64,
    /// Exact maximum modulus `sqrt(x^4 / (4 + x^4))` attained on the arc.
    pub arc_max_modulus: f64,
}

pub fn geometry(x: f64) -> Result<ContourGeometry, FourierError> {
    check_open_range(x)?;
    let half = 1.0 - x * x / 2.0;
    let k = x * x / (2.0 * (1.0 + x.powi(4) / 4.0));
    let w1 = Complex64::new(-k * half, k * x);
    let w2 = Complex64::new(k * half, k * x);
    let v1 = Complex64::new(1.0 - 2.0 / (x * x), 2.0 / x);
    let v2 = Complex64::new(-1.0 + 2.0 / (x * x), 2.0 / x);
    let s = (1.0 - x * x / 4.0).sqrt();
    let pl1 = Complex64::new(0.0, x / (2.0 * (1.0 + s)));
    let pl2 = Complex64::new(0.0, 2.0 * (1.0 + s) / x);
    let arc_max_modulus = (x.powi(4) / (4.0 + x.powi(4))).sqrt();
    let geom = ContourGeometry {
        w1,
        w2,
        v1,
        v2,
        pl1,
        pl2,
        arc_bound_radius: x * x / 2.0,
        arc_max_modulus,
    };
    debug_assert!(geom.pl1.norm() < 1.0 && geom.pl2.norm() > 1.0);
    debug_assert!(geom.arc_max_modulus <= geom.arc_bound_radius);
    Ok(geom)
}

/// One coefficient split into its small-circle and residue parts.
#[derive(Debug, Clone, Copy)]
pub struct ContourParts {
    pub value: Complex64,
    pub residue_term: Complex64,
    pub circle_term: Complex64,
    pub grid: usize,
}

/// Coefficient `c_m(x)` by the contour route: a quadrature over the circle
/// `|z| = x^2` (which encloses the whole cut arc) plus the closed-form
/// residue at the inner pole. Computed for negative order, where the two
/// parts decay like `x^{2|m|}` and `(x/4)^{|m|}`; positive orders follow by
/// conjugation.
pub fn cm_contour(x: f64, m: i64) -> Result<ContourParts, FourierError> {
    check_open_range(x)?;
    if m == 0 {
        return Err(FourierError::BadArgument(
            "contour decomposition needs m != 0".into(),
        ));
    }
    let mm = m.unsigned_abs() as i32;

    // small-circle quadrature of x^{2|m|} e^{i |m| t} h*(x, x^2 e^{it})
    let scale = x.powi(2 * mm);
    let eval = |grid: usize| -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..grid {
            let t = -PI + TAU * (j as f64) / (grid as f64);
            let z = Complex64::from_polar(x * x, t);
            sum += h_star(x, z) * Complex64::from_polar(scale, (mm as f64) * t);
        }
        sum / grid as f64
    };
    let mut grid = 64usize;
    let mut prev = eval(grid);
    let circle = loop {
        grid *= 2;
        if grid > GRID_CAP {
            return Err(FourierError::NonConvergent {
                tolerance: 1e-13,
                last_diff: f64::NAN,
            });
        }
        let cur = eval(grid);
        let diff = (cur - prev).norm();
        if diff <= 1e-13_f64.max(1e-9 * cur.norm()) {
            break cur;
        }
        prev = cur;
    };

    // residue of z^{|m|-1} h*(x, z) at the inner pole, assembled verbatim
    // from the closed forms of f* at the pole and the z-derivative of g*
    let s = (1.0 - x * x / 4.0).sqrt();
    let half = 1.0 - x * x / 2.0;
    let u = Complex64::new(1.0 - 2.0 * x * x + x.powi(4) / 2.0, -2.0 * x * s * half);
    // the log in the f* closed form is purely imaginary on (0, 1/4)
    debug_assert!((u.norm() - 1.0).abs() <= 1e-12);
    let f_at_pole = 2.0 * u.ln();
    let g_deriv = Complex64::new(0.0, -8.0 * half * s * (1.0 + s));
    let pl1 = Complex64::new(0.0, x / (2.0 * (1.0 + s)));
    let residue = pl1.powi(mm - 1) * f_at_pole / g_deriv;

    let value_neg = circle + residue;
    if m < 0 {
        Ok(ContourParts {
            value: value_neg,
            residue_term: residue,
            circle_term: circle,
            grid,
        })
    } else {
        Ok(ContourParts {
            value: value_neg.conj(),
            residue_term: residue.conj(),
            circle_term: circle.conj(),
            grid,
        })
    }
}

/// Fourier coefficient `f_k^m(x)` of `eps_m(x, .)` by periodic quadrature
/// with grid doubling.
pub fn fkm(x: f64, m: i32, k: i64, grid: usize) -> Result<Complex64, FourierError> {
    check_open_range(x)?;
    if m == 0 {
        return Err(KernelError::ZeroOrder.into());
    }
    let floor = 64usize;
    if !grid.is_power_of_two() || grid < floor {
        return Err(FourierError::BadGrid(grid, floor));
    }
    let eval = |n: usize| -> Result<Complex64, FourierError> {
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let t = -PI + TAU * (j as f64) / (n as f64);
            let e = kernels::eps_kernel(m, x, t)?;
            sum += e * Complex64::from_polar(1.0, -(k as f64) * t);
        }
        Ok(sum / n as f64)
    };
    let mut n = grid;
    let mut prev = eval(n)?;
    let value = loop {
        n *= 2;
        if n > GRID_CAP {
            return Err(FourierError::NonConvergent {
                tolerance: 1e-13,
                last_diff: f64::NAN,
            });
        }
        let cur = eval(n)?;
        if (cur - prev).norm() <= 1e-13 {
            break cur;
        }
        prev = cur;
    };
    // parity structure: real when m and k share parity, otherwise purely
    // imaginary (exact on the open interval)
    let scale = value.norm().max(1.0);
    if (m as i64 - k) % 2 == 0 {
        debug_assert!(value.im.abs() <= 1e-12 * scale);
    } else {
        debug_assert!(value.re.abs() <= 1e-12 * scale);
    }
    Ok(value)
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub m: i32,
    pub xs: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Largest grid value from which the magnitudes decrease strictly as
    /// `x` decreases; `None` when no tail of length >= 3 is monotone.
    pub threshold: Option<f64>,
}

/// Scan `|c_m(x)|` over a descending grid and report the detected
/// monotonicity threshold.
pub fn monotonicity_scan(m: i32, xs: &[f64]) -> Result<MonotonicityReport, FourierError> {
    if m == 0 {
        return Err(KernelError::ZeroOrder.into());
    }
    if xs.len() < 3 {
        return Err(FourierError::BadArgument(
            "need at least three grid points".into(),
        ));
    }
    for w in xs.windows(2) {
        if !(w[1] < w[0]) {
            return Err(FourierError::BadArgument(
                "grid must be strictly descending".into(),
            ));
        }
    }
    if !(xs[0] <= 0.2 && *xs.last().unwrap() > 0.0) {
        return Err(FourierError::OutOfRange(xs[0]));
    }
    let mm = m.unsigned_abs() as usize;
    let mut magnitudes = Vec::with_capacity(xs.len());
    for &x in xs {
        let table = cm_fft(x, mm, (16 * mm).max(64).next_power_of_two())?;
        magnitudes.push(table.c(m as i64).norm());
    }
    // longest strictly decreasing tail
    let mut start = xs.len() - 1;
    while start > 0 && magnitudes[start - 1] > magnitudes[start] {
        start -= 1;
    }
    let threshold = if xs.len() - start >= 2 {
        Some(xs[start])
    } else {
        None
    };
    Ok(MonotonicityReport {
        m,
        xs: xs.to_vec(),
        magnitudes,
        threshold,
    })
}
