//! Limit estimation for the normalised pair sequence
//! `beta_n = gamma_n (p_n^2 + p_{n+1}^2)` and the Christoffel-type ratio
//! `nu_n = sum p_k^2 / sum 1/gamma_k`, growth-exponent fits, uniformity
//! scans over frequency grids, and the stability scanner for non-symmetric
//! offset families.

use rayon::prelude::*;
use thiserror::Error;

use crate::conditions::{check_conditions, ls_slope, ConditionError, ConditionStatus};
use crate::family::{CoefficientFamily, OffsetRule};
use crate::recurrence::{stream_eval, EvalError};
use crate::report::{csv_document, fmt_f64, JsonValue};
use crate::sum::Compensated;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Conditions(#[from] ConditionError),
    #[error("family {family} violates condition {condition}; the limit need not exist")]
    FamilyFailsConditions { family: String, condition: String },
    #[error("{0}")]
    BadArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    TailAverage,
    Cesaro,
    Ratio,
}

impl EstimateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::TailAverage => "tail-average",
            EstimateMethod::Cesaro => "cesaro",
            EstimateMethod::Ratio => "ratio",
        }
    }
}

/// A limit value with its estimation window and a fluctuation measure.
#[derive(Debug, Clone, Copy)]
pub struct LimitEstimate {
    pub value: f64,
    pub window: (u64, u64),
    /// Relative spread of the smoothed estimator over the window.
    pub fluctuation: f64,
    pub method: EstimateMethod,
    pub converged: bool,
}

impl LimitEstimate {
    pub fn to_json_fields(&self) -> Vec<(&'static str, JsonValue)> {
        vec![
            ("value", JsonValue::number(self.value)),
            (
                "window",
                JsonValue::Array(vec![
                    JsonValue::integer(self.window.0),
                    JsonValue::integer(self.window.1),
                ]),
            ),
            ("fluctuation", JsonValue::number(self.fluctuation)),
            ("method", JsonValue::str(self.method.as_str())),
            ("converged", JsonValue::boolean(self.converged)),
        ]
    }
}

const FLUCTUATION_THRESHOLD: f64 = 0.05;

fn precheck(family: &CoefficientFamily, n_max: u64) -> Result<(), LimitsError> {
    let horizon = match family.horizon_limit() {
        Some(limit) => limit.saturating_sub(2).min(8192),
        None => 8192,
    }
    .min(n_max.max(1024));
    let report = check_conditions(family, horizon)?;
    if let Some(bad) = report
        .entries
        .iter()
        .find(|e| e.status == ConditionStatus::Violated)
    {
        return Err(LimitsError::FamilyFailsConditions {
            family: family.id(),
            condition: bad.id.to_string(),
        });
    }
    Ok(())
}

/// Estimate `lim beta_n` by a Cesaro-smoothed tail average over
/// `n in [n_max/2, n_max]`. The fluctuation is the relative spread of the
/// running window mean, ignoring its first tenth where the mean is still a
/// handful of samples.
pub fn beta_limit(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
) -> Result<LimitEstimate, LimitsError> {
    precheck(family, n_max)?;
    let window = (n_max / 2, n_max);
    let mut acc = Compensated::new();
    let mut count = 0u64;
    let mut mean_min = f64::INFINITY;
    let mut mean_max = f64::NEG_INFINITY;
    let settle = window.0 + (window.1 - window.0) / 10;
    stream_eval(family, false, omega, n_max, |st| {
        if st.n >= window.0 {
            acc.add(st.beta());
            count += 1;
            if st.n >= settle {
                let mean = acc.value() / count as f64;
                mean_min = mean_min.min(mean);
                mean_max = mean_max.max(mean);
            }
        }
    })?;
    let value = acc.value() / count as f64;
    let fluctuation = if value != 0.0 {
        (mean_max - mean_min).abs() / value.abs()
    } else {
        f64::INFINITY
    };
    Ok(LimitEstimate {
        value,
        window,
        fluctuation,
        method: EstimateMethod::Cesaro,
        converged: fluctuation <= FLUCTUATION_THRESHOLD,
    })
}

/// Estimate `lim nu_n` from the increment ratio of the two compensated
/// sums over the tail window: the discrete l'Hopital form
/// `(sum_p2(n) - sum_p2(n/2)) / (sum_inv(n) - sum_inv(n/2))` drops the
/// initial-transient bias that the cumulative ratio carries. The
/// fluctuation compares the two half-window increment ratios.
pub fn ratio_limit(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
) -> Result<LimitEstimate, LimitsError> {
    precheck(family, n_max)?;
    let window = (n_max / 2, n_max);
    let quarter = window.0 + (window.1 - window.0) / 2;
    let mut marks = [(0.0f64, 0.0f64); 3]; // sums at window.0, quarter, n_max
    stream_eval(family, false, omega, n_max, |st| {
        if st.n == window.0 {
            marks[0] = (st.sum_p2, st.sum_invgamma);
        }
        if st.n == quarter {
            marks[1] = (st.sum_p2, st.sum_invgamma);
        }
        if st.n == n_max {
            marks[2] = (st.sum_p2, st.sum_invgamma);
        }
    })?;
    if window.0 == window.1 {
        // degenerate window: fall back to the cumulative ratio, which at
        // n = 0 is gamma_0 itself
        let mut nu = f64::NAN;
        stream_eval(family, false, omega, n_max, |st| nu = st.nu())?;
        return Ok(LimitEstimate {
            value: nu,
            window,
            fluctuation: f64::INFINITY,
            method: EstimateMethod::Ratio,
            converged: false,
        });
    }
    let increment = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) / (b.1 - a.1);
    let value = increment(marks[0], marks[2]);
    let first_half = increment(marks[0], marks[1]);
    let second_half = increment(marks[1], marks[2]);
    let fluctuation = if value != 0.0 {
        (first_half - second_half).abs() / value.abs()
    } else {
        f64::INFINITY
    };
    Ok(LimitEstimate {
        value,
        window,
        fluctuation,
        method: EstimateMethod::Ratio,
        converged: fluctuation <= FLUCTUATION_THRESHOLD && value.is_finite(),
    })
}

/// Fitted growth exponent of `sum_{k<=n} p_k^2` against `n + 1` over the
/// last two decades of a power-law family sweep.
pub fn growth_exponent(
    family: &CoefficientFamily,
    omega: f64,
    n_max: u64,
) -> Result<f64, LimitsError> {
    if !family.is_power_law() {
        return Err(LimitsError::BadArgument(
            "growth exponent fit applies to power-law families".into(),
        ));
    }
    if n_max < 100_000 {
        return Err(LimitsError::BadArgument(
            "growth exponent fit needs n_max >= 1e5".into(),
        ));
    }
    let lo = n_max / 100;
    // log-uniform sample indices over the last two decades
    let samples: Vec<u64> = (0..=64)
        .map(|i| ((lo as f64) * (100f64).powf(i as f64 / 64.0)) as u64)
        .collect();
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    let mut idx = 0usize;
    stream_eval(family, false, omega, n_max, |st| {
        while idx < samples.len() && st.n == samples[idx].min(n_max) {
            xs.push(((st.n + 1) as f64).ln());
            ys.push(st.sum_p2.ln());
            idx += 1;
        }
    })?;
    Ok(ls_slope(&xs, &ys))
}

#[derive(Debug, Clone)]
pub struct UniformityRow {
    pub omega: f64,
    pub estimate: LimitEstimate,
}

#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub family: String,
    pub band: f64,
    pub n_max: u64,
    pub rows: Vec<UniformityRow>,
    /// Extrema of the converged estimates over the grid.
    pub lower: f64,
    pub upper: f64,
    pub max_fluctuation: f64,
    pub all_converged: bool,
}

impl UniformityReport {
    pub fn to_json(&self) -> JsonValue {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut fields = vec![("omega", JsonValue::number(r.omega))];
                fields.extend(r.estimate.to_json_fields());
                JsonValue::object(fields)
            })
            .collect();
        JsonValue::object(vec![
            ("family", JsonValue::string(&self.family)),
            ("band", JsonValue::number(self.band)),
            ("n_max", JsonValue::integer(self.n_max)),
            ("lower", JsonValue::number(self.lower)),
            ("upper", JsonValue::number(self.upper)),
            ("max_fluctuation", JsonValue::number(self.max_fluctuation)),
            ("all_converged", JsonValue::boolean(self.all_converged)),
            ("rows", JsonValue::Array(rows)),
        ])
    }
}

/// Ratio-limit estimates over a symmetric frequency grid `[-band, band]`.
/// Symmetric families are evaluated at `|omega|`; per-point failures are
/// recorded as non-converged rows rather than aborting the scan.
pub fn uniformity_scan(
    family: &CoefficientFamily,
    band: f64,
    points: usize,
    n_max: u64,
) -> Result<UniformityReport, LimitsError> {
    if points < 16 {
        return Err(LimitsError::BadArgument(
            "uniformity scan needs at least 16 grid points".into(),
        ));
    }
    if !(band > 0.0) {
        return Err(LimitsError::BadArgument("band must be positive".into()));
    }
    precheck(family, n_max)?;
    let grid: Vec<f64> = (0..points)
        .map(|i| -band + 2.0 * band * (i as f64) / ((points - 1) as f64))
        .collect();
    let rows: Vec<UniformityRow> = grid
        .par_iter()
        .map(|&omega| {
            let eval_omega = if family.is_symmetric() {
                omega.abs()
            } else {
                omega
            };
            let estimate = ratio_limit(family, eval_omega, n_max).unwrap_or(LimitEstimate {
                value: f64::NAN,
                window: (n_max / 2, n_max),
                fluctuation: f64::INFINITY,
                method: EstimateMethod::Ratio,
                converged: false,
            });
            UniformityRow { omega, estimate }
        })
        .collect();
    let converged: Vec<&UniformityRow> = rows.iter().filter(|r| r.estimate.converged).collect();
    let lower = converged
        .iter()
        .map(|r| r.estimate.value)
        .fold(f64::INFINITY, f64::min);
    let upper = converged
        .iter()
        .map(|r| r.estimate.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_fluctuation = rows
        .iter()
        .map(|r| r.estimate.fluctuation)
        .fold(0.0f64, f64::max);
    Ok(UniformityReport {
        family: family.id(),
        band,
        n_max,
        all_converged: converged.len() == rows.len(),
        rows,
        lower,
        upper,
        max_fluctuation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeRow {
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
    pub nu: f64,
}

/// Stability verdict for one offset slope `rho`.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub rho: f64,
    pub classification: Classification,
    /// Relative change of `nu` over the last decade of the sweep.
    pub tail_rel_change: f64,
    /// Ratio of the late to mid envelope width of the pair sequence.
    pub envelope_ratio: f64,
    pub overflow_at: Option<u64>,
    pub envelope: Vec<EnvelopeRow>,
}

impl StabilityVerdict {
    pub fn envelope_csv(&self) -> String {
        csv_document(
            "n,env_lo,env_hi,nu",
            self.envelope.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_f64(r.lo),
                    fmt_f64(r.hi),
                    fmt_f64(r.nu),
                ]
            }),
        )
    }

    pub fn to_json(&self) -> JsonValue {
        let mut fields = vec![
            ("rho", JsonValue::number(self.rho)),
            ("classification", JsonValue::str(self.classification.as_str())),
            ("tail_rel_change", JsonValue::number(self.tail_rel_change)),
            ("envelope_ratio", JsonValue::number(self.envelope_ratio)),
        ];
        if let Some(n) = self.overflow_at {
            fields.push(("overflow_at", JsonValue::integer(n)));
        }
        fields
    .push((
            "envelope_points",
            JsonValue::integer(self.envelope.len() as u64),
        ));
        JsonValue::object(fields)
    }
}

const ENVELOPE_CHECKPOINTS: u64 = 256;

fn conjecture_point(
    family: &CoefficientFamily,
    rho: f64,
    omega: f64,
    n_max: u64,
) -> StabilityVerdict {
    let offset_family = family
        .clone()
        .with_offsets(OffsetRule::RhoProportional { rho })
        .expect("finite rho");
    let ckpt_stride = (n_max / ENVELOPE_CHECKPOINTS).max(1);
    let window = (n_max / 64).max(16) as usize;
    let mut ring: Vec<f64> = Vec::with_capacity(window);
    let mut envelope = Vec::new();
    let mut nu_at_tenth = f64::NAN;
    let mut nu_final = f64::NAN;
    let tenth = n_max - n_max / 10;
    let result = stream_eval(&offset_family, true, omega, n_max, |st| {
        if ring.len() == window {
            ring.remove(0);
        }
        ring.push(st.beta());
        if st.n % ckpt_stride == 0 || st.n == n_max {
            let lo = ring.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ring.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            envelope.push(EnvelopeRow {
                n: st.n,
                lo,
                hi,
                nu: st.nu(),
            });
        }
        if st.n == tenth {
            nu_at_tenth = st.nu();
        }
        if st.n == n_max {
            nu_final = st.nu();
        }
    });

    if let Err(EvalError::NonFinite { index }) = result {
        return StabilityVerdict {
            rho,
            classification: Classification::Unstable,
            tail_rel_change: f64::INFINITY,
            envelope_ratio: f64::INFINITY,
            overflow_at: Some(index),
            envelope,
        };
    }

    let tail_rel_change = ((nu_final - nu_at_tenth) / nu_final).abs();
    // envelope widths averaged over a mid window and the final decade
    let width_over = |lo_frac: f64, hi_frac: f64| -> f64 {
        let lo_n = (n_max as f64 * lo_frac) as u64;
        let hi_n = (n_max as f64 * hi_frac) as u64;
        let rows: Vec<&EnvelopeRow> = envelope
            .iter()
            .filter(|r| r.n >= lo_n && r.n <= hi_n)
            .collect();
        if rows.is_empty() {
            return f64::NAN;
        }
        rows.iter().map(|r| r.hi - r.lo).sum::<f64>() / rows.len() as f64
    };
    let mid = width_over(0.3, 0.55);
    let late = width_over(0.75, 1.0);
    let envelope_ratio = late / mid;

    let mut classification = if !tail_rel_change.is_finite() {
        Classification::Unstable
    } else if tail_rel_change <= FLUCTUATION_THRESHOLD && envelope_ratio <= 1.1 {
        Classification::Stable
    } else if tail_rel_change <= FLUCTUATION_THRESHOLD && envelope_ratio <= 2.0 {
        Classification::Inconclusive
    } else {
        Classification::Unstable
    };
    // the boundary |rho| = 2 is deliberately never labelled stable
    if (rho.abs() - 2.0).abs() < 1e-12 && classification == Classification::Stable {
        classification = Classification::Inconclusive;
    }
    StabilityVerdict {
        rho,
        classification,
        tail_rel_change,
        envelope_ratio,
        overflow_at: None,
        envelope,
    }
}

/// Run the non-symmetric recurrence for every offset slope in `rhos` and
/// classify the normalised growth as stable, unstable, or inconclusive.
pub fn conjecture_scan(
    family: &CoefficientFamily,
    rhos: &[f64],
    omega: f64,
    n_max: u64,
) -> Result<Vec<StabilityVerdict>, LimitsError> {
    if !family.is_symmetric() {
        return Err(LimitsError::BadArgument(
            "the scan applies its own offsets; pass the base family".into(),
        ));
    }
    precheck(family, n_max)?;
    let report = check_conditions(
        family,
        family
            .horizon_limit()
            .map_or(8192, |l| l.saturating_sub(2).min(8192)),
    )?;
    if report.entry("C1").map(|e| e.status) == Some(ConditionStatus::Violated) {
        return Err(LimitsError::FamilyFailsConditions {
            family: family.id(),
            condition: "C1".into(),
        });
    }
    let mut sorted: Vec<f64> = rhos.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted
        .par_iter()
        .map(|&rho| conjecture_point(family, rho, omega, n_max))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite() -> CoefficientFamily {
        CoefficientFamily::hermite_exact()
    }

    const INV_SQRT_PI: f64 = 0.5641895835477563;

    #[test]
    fn hermite_pair_limit_at_zero() {
        let est = beta_limit(&hermite(), 0.0, 200_000).unwrap();
        assert!(est.converged, "{est:?}");
        assert!(
            (est.value - INV_SQRT_PI).abs() / INV_SQRT_PI < 0.01,
            "value {}",
            est.value
        );
        let ratio = ratio_limit(&hermite(), 0.0, 200_000).unwrap();
        assert!(ratio.converged);
        assert!((ratio.value - INV_SQRT_PI / 2.0).abs() / (INV_SQRT_PI / 2.0) < 0.01);
    }

    #[test]
    fn ratio_equals_half_pair_limit() {
        for &w in &[0.5, 1.0, 2.0] {
            let b = beta_limit(&hermite(), w, 100_000).unwrap();
            let r = ratio_limit(&hermite(), w, 100_000).unwrap();
            assert!(b.converged && r.converged, "w={w}");
            let rel = (r.value - b.value / 2.0).abs() / r.value;
            assert!(rel <= 0.02, "w={w}: {rel}");
        }
    }

    #[test]
    fn scale_covariance() {
        // gamma -> c gamma, omega -> c omega leaves p_n unchanged, so the
        // pair limit scales by c; exact at c = 2
        let base = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        let scaled = CoefficientFamily::power_law(2.0, 0.5).unwrap();
        let b1 = beta_limit(&base, 1.0, 50_000).unwrap();
        let b2 = beta_limit(&scaled, 2.0, 50_000).unwrap();
        assert!((b2.value - 2.0 * b1.value).abs() / b2.value < 1e-12);
    }

    #[test]
    fn even_in_omega() {
        let b_plus = beta_limit(&hermite(), 1.3, 50_000).unwrap();
        let b_minus = beta_limit(&hermite(), -1.3, 50_000).unwrap();
        assert_eq!(b_plus.value, b_minus.value);
    }

    #[test]
    fn degenerate_window_returns_gamma0() {
        let est = ratio_limit(&hermite(), 0.3, 0).unwrap();
        assert_eq!(est.value, hermite().gamma(0));
        assert!(!est.converged);
    }

    #[test]
    fn constant_family_rejected() {
        let fam = CoefficientFamily::custom_table(vec![1.0; 60_000]).unwrap();
        assert!(matches!(
            beta_limit(&fam, 1.0, 50_000),
            Err(LimitsError::FamilyFailsConditions { .. })
        ));
    }

    #[test]
    fn growth_exponents_match_one_minus_p() {
        for &(p, w) in &[(0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (0.25, 0.5)] {
            let fam = CoefficientFamily::power_law(1.0, p).unwrap();
            let slope = growth_exponent(&fam, w, 100_000).unwrap();
            assert!(
                (slope - (1.0 - p)).abs() <= 0.02,
                "p={p} w={w}: slope {slope}"
            );
        }
        assert!(growth_exponent(&hermite(), 1.0, 100_000).is_err());
    }

    #[test]
    fn uniformity_scan_hermite() {
        let report = uniformity_scan(&hermite(), 2.0, 17, 50_000).unwrap();
        assert!(report.all_converged, "{report:?}");
        assert!(report.lower > 0.0);
        assert!(report.upper >= report.lower);
        // grid includes 0 for odd point count; the same code path covers it
        assert!(report.rows.iter().any(|r| r.omega == 0.0));
        // even in omega
        let v = |w: f64| {
            report
                .rows
                .iter()
                .find(|r| (r.omega - w).abs() < 1e-12)
                .unwrap()
                .estimate
                .value
        };
        assert_eq!(v(2.0), v(-2.0));
        assert!(uniformity_scan(&hermite(), 2.0, 8, 1000).is_err());
    }

    #[test]
    fn conjecture_classifications() {
        let fam = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        let verdicts = conjecture_scan(&fam, &[0.0, 1.0, 2.5], 1.0, 100_000).unwrap();
        assert_eq!(verdicts[0].classification, Classification::Stable, "{:?}", verdicts[0]);
        assert_eq!(verdicts[1].classification, Classification::Stable, "{:?}", verdicts[1]);
        assert_eq!(
            verdicts[2].classification,
            Classification::Unstable,
            "{:?}",
            verdicts[2]
        );
        assert!(verdicts[2].overflow_at.is_some());
        // envelope rows are emitted for downstream plotting
        assert!(verdicts[0].envelope.len() >= 200);
        let csv = verdicts[0].envelope_csv();
        assert!(csv.starts_with("n,env_lo,env_hi,nu\n"));
    }

    #[test]
    fn pair_sequence_tail_stays_bounded_on_corpus() {
        // gamma_n (p_n^2 + p_{n+1}^2) remains inside a fixed band over the
        // second half of the sweep for every corpus family at |omega| <= 2
        for fam in crate::family::corpus() {
            for &w in &[0.5, 2.0] {
                let n_max = 20_000u64;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                crate::recurrence::stream_eval(&fam, false, w, n_max, |st| {
                    if st.n >= n_max / 2 {
                        let beta = st.beta();
                        lo = lo.min(beta);
                        hi = hi.max(beta);
                    }
                })
                .unwrap();
                assert!(lo > 1e-3 && hi < 1e3, "{} w={w}: [{lo}, {hi}]", fam.id());
            }
        }
    }

    #[test]
    fn slower_coefficient_growth_means_larger_fluctuation() {
        // the slower gamma_n grows, the slower the limit settles; the
        // fluctuation measure reflects that ordering
        let slow = CoefficientFamily::power_law(1.0, 0.25).unwrap();
        let fast = CoefficientFamily::power_law(1.0, 0.75).unwrap();
        let f_slow = beta_limit(&slow, 1.0, 20_000).unwrap().fluctuation;
        let f_fast = beta_limit(&fast, 1.0, 20_000).unwrap().fluctuation;
        assert!(f_slow > f_fast, "slow {f_slow} vs fast {f_fast}");
    }

    #[test]
    fn boundary_rho_never_stable() {
        let fam = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        let verdicts = conjecture_scan(&fam, &[2.0], 1.0, 40_000).unwrap();
        assert_ne!(verdicts[0].classification, Classification::Stable);
    }
}
