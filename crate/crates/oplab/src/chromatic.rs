//! Differential operators `K_n = (-i)^n p_n(i d/dt)` acting on finite
//! trigonometric sums.
//!
//! On a single exponential, `K_n[e^{i w t}] = i^n p_n(w) e^{i w t}`, so the
//! operators act termwise on the frequency representation and every
//! identity of the operator calculus (the three-term operator recurrence
//! and its summation-by-parts consequence) is exactly checkable. Local
//! energy, normalised energy ratios, inner products, and the orthogonality
//! decay of distinct exponentials are built on top.

use num_complex::Complex64;
use thiserror::Error;

use crate::family::CoefficientFamily;
use crate::limits::{EstimateMethod, LimitEstimate};
use crate::recurrence::{check_horizon, EvalError};
use crate::report::{csv_document, fmt_f64, JsonValue};
use crate::sum::Compensated;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChromaticError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("frequencies must be pairwise distinct (duplicate {0})")]
    DuplicateFrequency(f64),
    #[error("frequency {0} is not finite")]
    BadFrequency(f64),
    #[error("{0}")]
    BadArgument(String),
}

/// A finite sum `f(t) = sum_k q_k e^{i w_k t}`, stored as sorted
/// `(frequency, amplitude)` pairs with pairwise distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSignal {
    terms: Vec<(f64, Complex64)>,
}

impl TrigSignal {
    pub fn new(mut terms: Vec<(f64, Complex64)>) -> Result<Self, ChromaticError> {
        for &(w, _) in &terms {
            if !w.is_finite() {
                return Err(ChromaticError::BadFrequency(w));
            }
        }
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in terms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ChromaticError::DuplicateFrequency(pair[0].0));
            }
        }
        Ok(Self { terms })
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// Single unit-amplitude exponential.
    pub fn exponential(omega: f64) -> Result<Self, ChromaticError> {
        Self::new(vec![(omega, Complex64::new(1.0, 0.0))])
    }

    pub fn terms(&self) -> &[(f64, Complex64)] {
        &self.terms
    }

    /// Bandwidth: the largest absolute frequency present.
    pub fn band(&self) -> f64 {
        self.terms.iter().map(|(w, _)| w.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for &(w, q) in &self.terms {
            sum += q * Complex64::from_polar(1.0, w * t);
        }
        sum
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(w, q)| (w, factor * q)).collect(),
        }
    }
}

fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Recurrence values `p_n(w)` for every signal frequency, plus the next
/// order, in one pass per frequency.
fn p_values(
    family: &CoefficientFamily,
    freqs: &[f64],
    n: u64,
) -> Result<Vec<(f64, f64)>, ChromaticError> {
    freqs
        .iter()
        .map(|&w| crate::recurrence::eval_pair_at(family, w, n).map_err(ChromaticError::from))
        .collect()
}

/// Apply `K_n`: each amplitude is multiplied by `i^n p_n(w_k)`. The index
/// `-1` yields the zero signal by the operator convention.
pub fn apply_k(
    family: &CoefficientFamily,
    n: i64,
    f: &TrigSignal,
) -> Result<TrigSignal, ChromaticError> {
    if n < -1 {
        return Err(ChromaticError::BadArgument(format!(
            "operator order {n} below -1"
        )));
    }
    if n == -1 || f.terms.is_empty() {
        return Ok(TrigSignal::zero());
    }
    let freqs: Vec<f64> = f.terms.iter().map(|&(w, _)| w).collect();
    let pv = p_values(family, &freqs, n as u64)?;
    let phase = i_pow(n);
    let terms = f
        .terms
        .iter()
        .zip(pv)
        .map(|(&(w, q), (p_n, _))| (w, q * phase * p_n))
        .collect();
    Ok(TrigSignal { terms })
}

/// Termwise time derivative: each amplitude is multiplied by `i w_k`.
pub fn d_t(f: &TrigSignal) -> TrigSignal {
    TrigSignal {
        terms: f
            .terms
            .iter()
            .map(|&(w, q)| (w, q * Complex64::new(0.0, w)))
            .collect(),
    }
}

/// Local energy `beta_n^f(t) = gamma_n (|K_n f(t)|^2 + |K_{n+1} f(t)|^2)`.
pub fn local_energy(
    family: &CoefficientFamily,
    f: &TrigSignal,
    n: u64,
    t: f64,
) -> Result<f64, ChromaticError> {
    if f.terms.is_empty() {
        return Ok(0.0);
    }
    let freqs: Vec<f64> = f.terms.iter().map(|&(w, _)| w).collect();
    let pv = p_values(family, &freqs, n)?;
    // moduli are invariant under a global rotation, so phases are taken
    // relative to the first frequency; a single exponential then never
    // sees t at all
    let w0 = freqs[0];
    let mut k_n = Complex64::new(0.0, 0.0);
    let mut k_np1 = Complex64::new(0.0, 0.0);
    for (&(w, q), (p_n, p_np1)) in f.terms.iter().zip(pv) {
        let e = q * Complex64::from_polar(1.0, (w - w0) * t);
        k_n += e * p_n;
        k_np1 += e * p_np1;
    }
    // the i^n phases drop out of the moduli
    Ok(family.gamma(n as i64) * (k_n.norm_sqr() + k_np1.norm_sqr()))
}

/// `nu_n^f(t) = sum_{k<=n} |K_k f(t)|^2 / sum_{k<=n} 1/gamma_k` recorded at
/// checkpoints for each requested `t`.
pub fn nu_seq(
    family: &CoefficientFamily,
    f: &TrigSignal,
    n_max: u64,
    ts: &[f64],
    stride: u64,
) -> Result<Vec<(u64, Vec<f64>)>, ChromaticError> {
    if stride == 0 {
        return Err(ChromaticError::BadArgument("stride must be positive".into()));
    }
    check_horizon(family, n_max)?;
    if f.terms.is_empty() {
        return Ok((0..=n_max)
            .filter(|n| n % stride == 0 || *n == n_max)
            .map(|n| (n, vec![0.0; ts.len()]))
            .collect());
    }
    // run one recurrence per frequency in lockstep
    let freqs: Vec<f64> = f.terms.iter().map(|&(w, _)| w).collect();
    // global rotations do not change |K_k f|; anchor phases at the first
    // frequency so single exponentials are exactly t-independent
    let w0 = f.terms[0].0;
    let phases: Vec<Vec<Complex64>> = ts
        .iter()
        .map(|&t| {
            f.terms
                .iter()
                .map(|&(w, q)| q * Complex64::from_polar(1.0, (w - w0) * t))
                .collect()
        })
        .collect();
    let mut p_prev = vec![0.0f64; freqs.len()];
    let mut p_cur = vec![1.0f64; freqs.len()];
    let mut gamma_prev = 1.0f64;
    let mut energy: Vec<Compensated> = vec![Compensated::new(); ts.len()];
    let mut inv_gamma = Compensated::new();
    let mut out = Vec::new();
    for n in 0..=n_max {
        let g = family.gamma(n as i64);
        inv_gamma.add(1.0 / g);
        for (ti, phase_row) in phases.iter().enumerate() {
            let mut k_val = Complex64::new(0.0, 0.0);
            for (j, amp) in phase_row.iter().enumerate() {
                k_val += amp * p_cur[j];
            }
            energy[ti].add(k_val.norm_sqr());
        }
        if n % stride == 0 || n == n_max {
            out.push((
                n,
                energy
                    .iter()
                    .map(|e| e.value() / inv_gamma.value())
                    .collect(),
            ));
        }
        for j in 0..freqs.len() {
            let p_next = (freqs[j] * p_cur[j] - gamma_prev * p_prev[j]) / g;
            if !p_next.is_finite() {
                return Err(EvalError::NonFinite { index: n + 1 }.into());
            }
            p_prev[j] = p_cur[j];
            p_cur[j] = p_next;
        }
        gamma_prev = g;
    }
    Ok(out)
}

/// Inner-product sequence
/// `sigma_n^{fg}(t) = sum_{k<=n} K_k f(t) conj(K_k g(t)) / sum 1/gamma_k`
/// at checkpoints.
pub fn inner_product_seq(
    family: &CoefficientFamily,
    f: &TrigSignal,
    g: &TrigSignal,
    n_max: u64,
    t: f64,
    stride: u64,
) -> Result<Vec<(u64, Complex64)>, ChromaticError> {
    if stride == 0 {
        return Err(ChromaticError::BadArgument("stride must be positive".into()));
    }
    check_horizon(family, n_max)?;
    let fw: Vec<f64> = f.terms.iter().map(|&(w, _)| w).collect();
    let gw: Vec<f64> = g.terms.iter().map(|&(w, _)| w).collect();
    let f_amp: Vec<Complex64> = f
        .terms
        .iter()
        .map(|&(w, q)| q * Complex64::from_polar(1.0, w * t))
        .collect();
    let g_amp: Vec<Complex64> = g
        .terms
        .iter()
        .map(|&(w, q)| q * Complex64::from_polar(1.0, w * t))
        .collect();
    let mut fp_prev = vec![0.0f64; fw.len()];
    let mut fp_cur = vec![1.0f64; fw.len()];
    let mut gp_prev = vec![0.0f64; gw.len()];
    let mut gp_cur = vec![1.0f64; gw.len()];
    let mut gamma_prev = 1.0f64;
    let mut acc_re = Compensated::new();
    let mut acc_im = Compensated::new();
    let mut inv_gamma = Compensated::new();
    let mut out = Vec::new();
    for n in 0..=n_max {
        let gam = family.gamma(n as i64);
        inv_gamma.add(1.0 / gam);
        let mut kf = Complex64::new(0.0, 0.0);
        for (amp, p) in f_amp.iter().zip(&fp_cur) {
            kf += amp * *p;
        }
        let mut kg = Complex64::new(0.0, 0.0);
        for (amp, p) in g_amp.iter().zip(&gp_cur) {
            kg += amp * *p;
        }
        // the i^n operator phases cancel between K_k f and conj(K_k g)
        let prod = kf * kg.conj();
        acc_re.add(prod.re);
        acc_im.add(prod.im);
        if n % stride == 0 || n == n_max {
            out.push((
                n,
                Complex64::new(acc_re.value(), acc_im.value()) / inv_gamma.value(),
            ));
        }
        for j in 0..fw.len() {
            let next = (fw[j] * fp_cur[j] - gamma_prev * fp_prev[j]) / gam;
            if !next.is_finite() {
                return Err(EvalError::NonFinite { index: n + 1 }.into());
            }
            fp_prev[j] = fp_cur[j];
            fp_cur[j] = next;
        }
        for j in 0..gw.len() {
            let next = (gw[j] * gp_cur[j] - gamma_prev * gp_prev[j]) / gam;
            if !next.is_finite() {
                return Err(EvalError::NonFinite { index: n + 1 }.into());
            }
            gp_prev[j] = gp_cur[j];
            gp_cur[j] = next;
        }
        gamma_prev = gam;
    }
    Ok(out)
}

/// `sigma_N^{fg}(t)` alone.
pub fn inner_product(
    family: &CoefficientFamily,
    f: &TrigSignal,
    g: &TrigSignal,
    n_max: u64,
    t: f64,
) -> Result<Complex64, ChromaticError> {
    let rows = inner_product_seq(family, f, g, n_max, t, n_max.max(1))?;
    Ok(rows.last().expect("at least the final row").1)
}

/// Norm estimate `sqrt(lim nu_n^f)` at the reference instant `t = 0`, with
/// the window fluctuation of the ratio sequence as the convergence measure.
pub fn norm(
    family: &CoefficientFamily,
    f: &TrigSignal,
    n_max: u64,
) -> Result<LimitEstimate, ChromaticError> {
    if f.terms.is_empty() {
        return Ok(LimitEstimate {
            value: 0.0,
            window: (n_max / 2, n_max),
            fluctuation: 0.0,
            method: EstimateMethod::Ratio,
            converged: true,
        });
    }
    let stride = (n_max / 512).max(1);
    let rows = nu_seq(family, f, n_max, &[0.0], stride)?;
    let window = (n_max / 2, n_max);
    let tail: Vec<f64> = rows
        .iter()
        .filter(|(n, _)| *n >= window.0)
        .map(|(_, v)| v[0])
        .collect();
    let last = *tail.last().expect("final checkpoint");
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fluctuation = if last != 0.0 { (hi - lo) / last } else { 0.0 };
    Ok(LimitEstimate {
        value: last.max(0.0).sqrt(),
        window,
        fluctuation,
        method: EstimateMethod::Ratio,
        converged: fluctuation.abs() <= 0.05,
    })
}

/// Spread of `nu_N^f` across a `t` grid; audits the t-independence of the
/// limit.
pub fn nu_t_spread(
    family: &CoefficientFamily,
    f: &TrigSignal,
    n_max: u64,
    ts: &[f64],
) -> Result<f64, ChromaticError> {
    let rows = nu_seq(family, f, n_max, ts, n_max.max(1))?;
    let last = &rows.last().expect("final checkpoint").1;
    let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}

/// Max relative residual of the summation-by-parts identity
/// `D_t [ sum_{m<=n} K_m f K_m g ] =
///  gamma_n (K_{n+1} f K_n g + K_n f K_{n+1} g)` over a `t` grid.
///
/// The left side's derivative acts termwise on the product signal, so both
/// sides are exact trigonometric sums.
pub fn operator_cd_residual(
    family: &CoefficientFamily,
    f: &TrigSignal,
    g: &TrigSignal,
    n: u64,
    ts: &[f64],
) -> Result<f64, ChromaticError> {
    check_horizon(family, n + 1)?;
    let fw: Vec<f64> = f.terms.iter().map(|&(w, _)| w).collect();
    let gw: Vec<f64> = g.terms.iter().map(|&(w, _)| w).collect();
    // cross-frequency sums S(j, l) = sum_{m<=n} (-1)^m p_m(w_j) p_m(w_l)
    // via lockstep recurrences, keeping the final orders for the right side
    let mut fp_prev = vec![0.0f64; fw.len()];
    let mut fp_cur = vec![1.0f64; fw.len()];
    let mut gp_prev = vec![0.0f64; gw.len()];
    let mut gp_cur = vec![1.0f64; gw.len()];
    let mut gamma_prev = 1.0f64;
    let mut cross = vec![vec![Compensated::new(); gw.len()]; fw.len()];
    let mut gamma_n = 1.0;
    for m in 0..=n {
        let gam = family.gamma(m as i64);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (j, row) in cross.iter_mut().enumerate() {
            for (l, acc) in row.iter_mut().enumerate() {
                acc.add(sign * fp_cur[j] * gp_cur[l]);
            }
        }
        for j in 0..fw.len() {
            let next = (fw[j] * fp_cur[j] - gamma_prev * fp_prev[j]) / gam;
            fp_prev[j] = fp_cur[j];
            fp_cur[j] = next;
        }
        for l in 0..gw.len() {
            let next = (gw[l] * gp_cur[l] - gamma_prev * gp_prev[l]) / gam;
            gp_prev[l] = gp_cur[l];
            gp_cur[l] = next;
        }
        gamma_prev = gam;
        gamma_n = gam;
    }
    // after the loop: fp_prev = p_n, fp_cur = p_{n+1}
    let i_parity = i_pow(2 * n as i64 + 1); // i^{n+1} i^n = i^{2n+1}
    let mut worst = 0.0f64;
    for &t in ts {
        let mut lhs = Complex64::new(0.0, 0.0);
        let mut rhs = Complex64::new(0.0, 0.0);
        for (j, &(wj, qj)) in f.terms.iter().enumerate() {
            for (l, &(wl, ql)) in g.terms.iter().enumerate() {
                let amp = qj * ql * Complex64::from_polar(1.0, (wj + wl) * t);
                // D_t multiplies the product term by i (w_j + w_l); the
                // i^m i^m = (-1)^m factors already sit in `cross`
                lhs += amp * Complex64::new(0.0, wj + wl) * cross[j][l].value();
                rhs += amp
                    * i_parity
                    * gamma_n
                    * (fp_cur[j] * gp_prev[l] + fp_prev[j] * gp_cur[l]);
            }
        }
        let scale = lhs.norm().max(rhs.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

/// Decay report of the normalised cross sum of two exponentials.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub omega: f64,
    pub sigma: f64,
    /// `(n, normalised cross sum, normalised two-point bound)` rows.
    pub rows: Vec<(u64, f64, f64)>,
    pub ratio_first: f64,
    pub ratio_last: f64,
    /// `|ratio_first| / |ratio_last|`.
    pub decay_factor: f64,
}

impl OrthogonalityReport {
    pub fn to_csv(&self) -> String {
        csv_document(
            "n,ratio,cd_bound",
            self.rows.iter().map(|r| {
                vec![r.0.to_string(), fmt_f64(r.1), fmt_f64(r.2)]
            }),
        )
    }

    pub fn to_json(&self) -> JsonValue {
        JsonValue::object(vec![
            ("omega", JsonValue::number(self.omega)),
            ("sigma", JsonValue::number(self.sigma)),
            ("ratio_first", JsonValue::number(self.ratio_first)),
            ("ratio_last", JsonValue::number(self.ratio_last)),
            ("decay_factor", JsonValue::number(self.decay_factor)),
            (
                "rows",
                JsonValue::Array(
                    self.rows
                        .iter()
                        .map(|r| {
                            JsonValue::Array(vec![
                                JsonValue::integer(r.0),
                                JsonValue::number(r.1),
                                JsonValue::number(r.2),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }
}

/// Track `sum_{k<=n} p_k(omega) p_k(sigma) / sum_{k<=n} 1/gamma_k` toward
/// zero, alongside the two-point bound
/// `gamma_n |p_{n+1}(omega) p_n(sigma) - p_{n+1}(sigma) p_n(omega)|
///  / |omega - sigma| / sum 1/gamma_k`.
pub fn orthogonality_check(
    family: &CoefficientFamily,
    omega: f64,
    sigma: f64,
    n_max: u64,
    stride: u64,
) -> Result<OrthogonalityReport, ChromaticError> {
    if omega == sigma {
        return Err(ChromaticError::BadArgument(
            "orthogonality decay needs omega != sigma".into(),
        ));
    }
    if stride == 0 {
        return Err(ChromaticError::BadArgument("stride must be positive".into()));
    }
    check_horizon(family, n_max)?;
    let mut pw_prev = 0.0f64;
    let mut pw = 1.0f64;
    let mut ps_prev = 0.0f64;
    let mut ps = 1.0f64;
    let mut gamma_prev = 1.0f64;
    let mut cross = Compensated::new();
    let mut inv_gamma = Compensated::new();
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let g = family.gamma(n as i64);
        cross.add(pw * ps);
        inv_gamma.add(1.0 / g);
        let pw_next = (omega * pw - gamma_prev * pw_prev) / g;
        let ps_next = (sigma * ps - gamma_prev * ps_prev) / g;
        if !pw_next.is_finite() || !ps_next.is_finite() {
            return Err(EvalError::NonFinite { index: n + 1 }.into());
        }
        if n % stride == 0 || n == n_max {
            let bound = g * (pw_next * ps - ps_next * pw).abs()
                / (omega - sigma).abs()
                / inv_gamma.value();
            rows.push((n, cross.value() / inv_gamma.value(), bound));
        }
        pw_prev = pw;
        pw = pw_next;
        ps_prev = ps;
        ps = ps_next;
        gamma_prev = g;
    }
    let ratio_first = rows.first().expect("rows").1;
    let ratio_last = rows.last().expect("rows").1;
    Ok(OrthogonalityReport {
        omega,
        sigma,
        rows,
        ratio_first,
        ratio_last,
        decay_factor: ratio_first.abs() / ratio_last.abs().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hermite() -> CoefficientFamily {
        CoefficientFamily::hermite_exact()
    }

    fn two_tone() -> TrigSignal {
        TrigSignal::new(vec![
            (1.0, Complex64::new(1.0, 0.0)),
            (2.0, Complex64::new(1.0, 0.0)),
        ])
        .unwrap()
    }

    #[test]
    fn signal_construction() {
        assert!(TrigSignal::new(vec![
            (1.0, Complex64::new(1.0, 0.0)),
            (1.0, Complex64::new(2.0, 0.0))
        ])
        .is_err());
        assert!(TrigSignal::new(vec![(f64::NAN, Complex64::new(1.0, 0.0))]).is_err());
        assert_eq!(two_tone().band(), 2.0);
    }

    #[test]
    fn k0_is_identity_and_k_minus_one_zero() {
        let fam = hermite();
        let f = two_tone();
        let k0 = apply_k(&fam, 0, &f).unwrap();
        assert_eq!(k0, f);
        let km = apply_k(&fam, -1, &f).unwrap();
        assert_eq!(km, TrigSignal::zero());
    }

    #[test]
    fn k1_single_exponential() {
        // K_1[e^{it}] has amplitude i p_1(1) = i sqrt(2)
        let fam = hermite();
        let f = TrigSignal::exponential(1.0).unwrap();
        let k1 = apply_k(&fam, 1, &f).unwrap();
        let amp = k1.terms()[0].1;
        assert!((amp - Complex64::new(0.0, 2f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn operator_recurrence_termwise() {
        // gamma_n K_{n+1} f = D_t K_n f + gamma_{n-1} K_{n-1} f
        let fam = hermite();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = TrigSignal::new(vec![
                (
                    rng.random_range(-2.0..2.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
                (
                    rng.random_range(2.5..4.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
            ])
            .unwrap();
            for n in [0u64, 1, 7, 100, 1000] {
                let lhs = apply_k(&fam, n as i64 + 1, &f)
                    .unwrap()
                    .scale(Complex64::new(fam.gamma(n as i64), 0.0));
                let mid = d_t(&apply_k(&fam, n as i64, &f).unwrap());
                let low = apply_k(&fam, n as i64 - 1, &f)
                    .unwrap()
                    .scale(Complex64::new(fam.gamma(n as i64 - 1), 0.0));
                for (j, &(w, ql)) in lhs.terms().iter().enumerate() {
                    let qr = mid.terms().get(j).map_or(Complex64::new(0.0, 0.0), |x| x.1)
                        + low.terms().get(j).map_or(Complex64::new(0.0, 0.0), |x| x.1);
                    assert!(
                        (ql - qr).norm() <= 1e-12 * ql.norm().max(1.0),
                        "n={n} w={w}"
                    );
                }
            }
        }
    }

    #[test]
    fn linearity_exact() {
        let fam = hermite();
        let f = TrigSignal::exponential(1.0).unwrap();
        let g = TrigSignal::exponential(2.0).unwrap();
        let alpha = Complex64::new(0.7, -0.3);
        let combo = TrigSignal::new(vec![(1.0, alpha), (2.0, Complex64::new(1.0, 0.0))]).unwrap();
        let k_combo = apply_k(&fam, 5, &combo).unwrap();
        let k_f = apply_k(&fam, 5, &f).unwrap();
        let k_g = apply_k(&fam, 5, &g).unwrap();
        assert_eq!(k_combo.terms()[0].1, alpha * k_f.terms()[0].1);
        assert_eq!(k_combo.terms()[1].1, k_g.terms()[0].1);
    }

    #[test]
    fn local_energy_single_exponential_t_independent() {
        let fam = hermite();
        let f = TrigSignal::exponential(1.3).unwrap();
        let n = 40;
        let reference = local_energy(&fam, &f, n, 0.0).unwrap();
        for &t in &[-5.0, -1.0, 0.4, 2.0, 17.0] {
            let v = local_energy(&fam, &f, n, t).unwrap();
            assert_eq!(v, reference, "t={t}");
        }
        // equals the recurrence-side quantity exactly
        let (p_n, p_np1) = crate::recurrence::eval_pair_at(&fam, 1.3, n).unwrap();
        let direct = fam.gamma(n as i64) * (p_n * p_n + p_np1 * p_np1);
        assert!((reference - direct).abs() <= 1e-12 * direct);
        assert_eq!(local_energy(&fam, &TrigSignal::zero(), n, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn two_tone_energy_splits_in_window_mean() {
        // the cross term oscillates without decaying pointwise, but its
        // window mean vanishes, so the averaged pair energy approaches the
        // sum of the single-tone limits, independently of t
        let fam = hermite();
        let f = two_tone();
        let n_max = 100_000u64;
        let orders: Vec<u64> = (0..64).map(|i| n_max / 2 + i * (n_max / 128)).collect();
        let mean = |sig: &TrigSignal, t: f64| -> f64 {
            orders
                .iter()
                .map(|&n| local_energy(&fam, sig, n, t).unwrap())
                .sum::<f64>()
                / orders.len() as f64
        };
        let sum_singles: f64 = [1.0, 2.0]
            .iter()
            .map(|&w| mean(&TrigSignal::exponential(w).unwrap(), 0.0))
            .sum();
        for &t in &[0.0, 0.7, 2.0] {
            let v = mean(&f, t);
            assert!(
                (v - sum_singles).abs() / sum_singles < 0.05,
                "t={t}: {v} vs {sum_singles}"
            );
        }
    }

    #[test]
    fn nu_spread_shrinks_with_order() {
        let fam = hermite();
        let f = two_tone();
        let ts = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let spread_small = nu_t_spread(&fam, &f, 1_000, &ts).unwrap();
        let spread_large = nu_t_spread(&fam, &f, 100_000, &ts).unwrap();
        assert!(
            spread_large < spread_small,
            "{spread_large} vs {spread_small}"
        );
    }

    #[test]
    fn inner_product_symmetry_and_diagonal() {
        let fam = hermite();
        let f = two_tone();
        let g = TrigSignal::new(vec![
            (0.5, Complex64::new(0.3, 0.1)),
            (2.0, Complex64::new(-1.0, 0.4)),
        ])
        .unwrap();
        let fg = inner_product(&fam, &f, &g, 5_000, 0.7).unwrap();
        let gf = inner_product(&fam, &g, &f, 5_000, 0.7).unwrap();
        assert!((fg - gf.conj()).norm() <= 1e-12 * fg.norm().max(1.0));
        // f = g reduces to the energy ratio
        let ff = inner_product(&fam, &f, &f, 5_000, 0.7).unwrap();
        let nu = nu_seq(&fam, &f, 5_000, &[0.7], 5_000).unwrap();
        let nu_val = nu.last().unwrap().1[0];
        assert!((ff.re - nu_val).abs() <= 1e-10 * nu_val);
        assert!(ff.im.abs() <= 1e-12 * nu_val);
    }

    #[test]
    fn cross_inner_product_decays() {
        let fam = hermite();
        let f = TrigSignal::exponential(1.0).unwrap();
        let g = TrigSignal::exponential(2.0).unwrap();
        let small = inner_product(&fam, &f, &g, 1_000, 0.0).unwrap().norm();
        let large = inner_product(&fam, &f, &g, 100_000, 0.0).unwrap().norm();
        assert!(large <= small / 3.0, "{large} vs {small}");
    }

    #[test]
    fn norm_properties() {
        let fam = hermite();
        // constant signal: norm^2 = half the pair limit at frequency zero
        let one = TrigSignal::exponential(0.0).unwrap();
        let est = norm(&fam, &one, 200_000).unwrap();
        assert!(est.converged);
        let expect = (0.5641895835477563f64 / 2.0).sqrt();
        assert!((est.value - expect).abs() / expect < 0.02, "{}", est.value);
        // homogeneity on the estimator
        let two = one.scale(Complex64::new(2.0, 0.0));
        let est2 = norm(&fam, &two, 200_000).unwrap();
        assert!((est2.value - 2.0 * est.value).abs() <= 1e-12 * est2.value);
        // zero signal
        let z = norm(&fam, &TrigSignal::zero(), 1000).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn operator_identity_residual_small() {
        let fam = hermite();
        let ts = [-1.0, 0.0, 0.5, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..4 {
            let f = TrigSignal::new(vec![
                (
                    rng.random_range(-2.0..0.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
                (
                    rng.random_range(0.1..2.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
            ])
            .unwrap();
            let g = TrigSignal::new(vec![
                (
                    rng.random_range(2.1..3.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
                (
                    rng.random_range(3.1..4.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                ),
            ])
            .unwrap();
            for n in [0u64, 1, 50, 200] {
                let r = operator_cd_residual(&fam, &f, &g, n, &ts).unwrap();
                assert!(r <= 1e-10, "n={n}: {r}");
            }
        }
        // base case with f = g = e^{it}
        let e = TrigSignal::exponential(1.0).unwrap();
        let r = operator_cd_residual(&fam, &e, &e, 0, &ts).unwrap();
        assert!(r <= 1e-14);
    }

    #[test]
    fn orthogonality_decay_and_symmetric_pair() {
        let fam = hermite();
        let rep = orthogonality_check(&fam, 1.0, 2.0, 100_000, 1000).unwrap();
        let at = |n: u64| rep.rows.iter().find(|r| r.0 == n).unwrap().1;
        assert!(at(100_000).abs() <= at(1_000).abs() / 3.0);
        // symmetric pair: odd cross terms cancel, decay still holds
        let rep2 = orthogonality_check(&fam, 1.0, -1.0, 100_000, 1000).unwrap();
        let at2 = |n: u64| rep2.rows.iter().find(|r| r.0 == n).unwrap().1;
        assert!(at2(100_000).abs() <= at2(1_000).abs());
        assert!(orthogonality_check(&fam, 1.0, 1.0, 100, 10).is_err());
    }
}
