//! Finite-horizon checkers for the growth and summability conditions a
//! coefficient family must satisfy.
//!
//! Tail conditions cannot be proven by any finite computation, so every
//! check is tri-state: `Consistent`, `Violated` (with a concrete witness
//! index), or `Inconclusive`. A report never claims more than the horizon
//! supports.

use thiserror::Error;

use crate::family::CoefficientFamily;
use crate::report::{fmt_f64, JsonValue};
use crate::sum::Compensated;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("horizon {0} too small; need at least 100")]
    HorizonTooSmall(u64),
    #[error("horizon {requested} exceeds table limit {limit}")]
    HorizonExceedsTable { requested: u64, limit: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Consistent,
    Violated,
    Inconclusive,
}

impl ConditionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionStatus::Consistent => "consistent",
            ConditionStatus::Violated => "violated",
            ConditionStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConditionEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub status: ConditionStatus,
    /// Concrete index witnessing a violation; present whenever
    /// `status == Violated`.
    pub witness: Option<u64>,
    /// Named diagnostic scalars (slopes, partial sums, detected constants).
    pub diagnostics: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub family: String,
    pub horizon: u64,
    pub entries: Vec<ConditionEntry>,
    /// Minimal almost-increasing window detected within the horizon.
    pub n0_m0: Option<(u64, u64)>,
    /// Smallest integer exponent whose reciprocal-power series shows clear
    /// block decay.
    pub kappa: Option<u32>,
}

impl ConditionReport {
    pub fn any_violated(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.status == ConditionStatus::Violated)
    }

    pub fn all_consistent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.status == ConditionStatus::Consistent)
    }

    pub fn entry(&self, id: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn to_json(&self) -> JsonValue {
        let entries: Vec<JsonValue> = self
            .entries
            .iter()
            .map(|e| {
                let mut fields = vec![
                    ("id", JsonValue::str(e.id)),
                    ("description", JsonValue::str(e.description)),
                    ("status", JsonValue::str(e.status.as_str())),
                ];
                if let Some(w) = e.witness {
                    fields.push(("witness", JsonValue::Raw(w.to_string())));
                }
                let diags: Vec<JsonValue> = e
                    .diagnostics
                    .iter()
                    .map(|(k, v)| {
                        JsonValue::object(vec![
                            ("name", JsonValue::str(*k)),
                            ("value", JsonValue::Raw(fmt_f64(*v))),
                        ])
                    })
                    .collect();
                fields.push(("diagnostics", JsonValue::Array(diags)));
                JsonValue::object(fields)
            })
            .collect();
        let mut fields = vec![
            ("family", JsonValue::string(&self.family)),
            ("horizon", JsonValue::Raw(self.horizon.to_string())),
            ("entries", JsonValue::Array(entries)),
        ];
        if let Some((n0, m0)) = self.n0_m0 {
            fields.push(("n0", JsonValue::Raw(n0.to_string())));
            fields.push(("m0", JsonValue::Raw(m0.to_string())));
        }
        if let Some(k) = self.kappa {
            fields.push(("kappa", JsonValue::Raw(k.to_string())));
        }
        JsonValue::object(fields)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Least-squares slope plus its standard error.
pub(crate) fn ls_slope_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let slope = ls_slope(xs, ys);
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return (slope, f64::INFINITY);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut ss_res = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        let pred = my + slope * (x - mx);
        ss_res += (y - pred) * (y - pred);
    }
    if sxx == 0.0 {
        return (slope, f64::INFINITY);
    }
    ((slope), (ss_res / (n - 2.0) / sxx).sqrt())
}

/// Classification of a positive-term series from the slope of its dyadic
/// block sums: block `k` sums terms with `n` in `[2^k, 2^{k+1})`, and for
/// `t_n ~ n^{-q}` the block sums behave like `2^{k(1-q)}`. Only tail blocks
/// enter the fit, keeping pre-asymptotic curvature out of the slope.
struct BlockTrend {
    slope: f64,
    slope_se: f64,
    partial_sum: f64,
}

fn block_trend(horizon: u64, mut term: impl FnMut(u64) -> f64) -> BlockTrend {
    let k_max = 63 - horizon.leading_zeros() as u64; // floor(log2 horizon)
    let k_lo = k_max.saturating_sub(7).max(5);
    let mut total = Compensated::new();
    for n in 0..(1u64 << k_lo) {
        total.add(term(n));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in k_lo..k_max {
        let mut block = Compensated::new();
        for n in (1u64 << k)..(1u64 << (k + 1)) {
            block.add(term(n));
        }
        total.add(block.value());
        let b = block.value().max(1e-300);
        xs.push((k as f64) * std::f64::consts::LN_2);
        ys.push(b.ln());
    }
    let (slope, slope_se) = ls_slope_se(&xs, &ys);
    BlockTrend {
        slope,
        slope_se,
        partial_sum: total.value(),
    }
}

const SLOPE_BAND: f64 = 0.005;

impl BlockTrend {
    /// Width below which the slope cannot distinguish growth from decay:
    /// the fixed band widened by the fit's own uncertainty.
    fn band(&self) -> f64 {
        SLOPE_BAND.max(2.0 * self.slope_se.min(1.0))
    }
}

fn classify_convergent(trend: &BlockTrend) -> ConditionStatus {
    if trend.slope <= -trend.band() {
        ConditionStatus::Consistent
    } else if trend.slope >= trend.band() {
        ConditionStatus::Violated
    } else {
        ConditionStatus::Inconclusive
    }
}

fn classify_divergent(trend: &BlockTrend) -> ConditionStatus {
    if trend.slope >= trend.band() {
        ConditionStatus::Consistent
    } else if trend.slope <= -trend.band() {
        ConditionStatus::Violated
    } else {
        ConditionStatus::Inconclusive
    }
}

/// Run all condition checks on `family` over indices `0..=horizon`.
///
/// Entries C1-C7 follow the displayed numbering (growth, vanishing
/// differences, almost-increasing window, divergent reciprocal sum,
/// integrability exponent, and the two weighted-difference sums); C8
/// restates the integrability-exponent condition under its alternative
/// label and carries the detected `kappa`.
pub fn check_conditions(
    family: &CoefficientFamily,
    horizon: u64,
) -> Result<ConditionReport, ConditionError> {
    if horizon < 100 {
        return Err(ConditionError::HorizonTooSmall(horizon));
    }
    if let Some(limit) = family.horizon_limit() {
        // differences at `horizon` read two entries past it
        if horizon + 2 > limit {
            return Err(ConditionError::HorizonExceedsTable {
                requested: horizon,
                limit,
            });
        }
    }

    let n = horizon;
    let gam: Vec<f64> = (0..=n + 2).map(|i| family.gamma(i as i64)).collect();
    let s: Vec<f64> = (0..=n + 1).map(|i| gam[i as usize + 1] - gam[i as usize]).collect();
    let ds: Vec<f64> = (0..=n).map(|i| s[i as usize + 1] - s[i as usize]).collect();

    let mut entries = Vec::with_capacity(8);

    // C1: gamma_n -> infinity. Log-log tail slope plus a doubling check.
    {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let samples = 64u64;
        for i in 0..samples {
            // log-uniform sample of [n/16, n]
            let t = (i as f64) / (samples - 1) as f64;
            let idx = ((n as f64 / 16.0) * (16f64).powf(t)) as u64;
            let idx = idx.clamp(1, n);
            xs.push((idx as f64).ln());
            ys.push(gam[idx as usize].max(1e-300).ln());
        }
        let slope = ls_slope(&xs, &ys);
        let doubled = gam[n as usize] > gam[(n / 2) as usize];
        let (status, witness) = if !doubled {
            (ConditionStatus::Violated, Some(n))
        } else if slope > 1e-4 {
            (ConditionStatus::Consistent, None)
        } else {
            (ConditionStatus::Inconclusive, None)
        };
        entries.push(ConditionEntry {
            id: "C1",
            description: "gamma_n -> infinity",
            status,
            witness,
            diagnostics: vec![
                ("tail_loglog_slope", slope),
                ("gamma_half", gam[(n / 2) as usize]),
                ("gamma_horizon", gam[n as usize]),
            ],
        });
    }

    // C2: s_n -> 0. Compare the peak |s_n| of the last tenth of the horizon
    // against the first tenth.
    {
        let tenth = (n / 10).max(1) as usize;
        let head = s[..tenth].iter().fold(0f64, |a, v| a.max(v.abs()));
        let tail_start = (n as usize) - tenth;
        let (tail, argmax) = s[tail_start..=n as usize]
            .iter()
            .enumerate()
            .fold((0f64, 0usize), |(m, am), (i, v)| {
                if v.abs() > m {
                    (v.abs(), tail_start + i)
                } else {
                    (m, am)
                }
            });
        let (status, witness) = if tail == 0.0 || tail < head {
            (ConditionStatus::Consistent, None)
        } else {
            (ConditionStatus::Violated, Some(argmax as u64))
        };
        entries.push(ConditionEntry {
            id: "C2",
            description: "s_n -> 0",
            status,
            witness,
            diagnostics: vec![("head_max_abs_s", head), ("tail_max_abs_s", tail)],
        });
    }

    // C3: almost increasing; exhaustive suffix-minimum search for the
    // minimal window (n0, m0) with gamma_{n+m} > gamma_n for n >= n0, m >= m0.
    let mut n0_m0 = None;
    {
        let len = n as usize + 1;
        let mut suffmin = vec![0f64; len + 1];
        suffmin[len] = f64::INFINITY;
        for i in (0..len).rev() {
            suffmin[i] = gam[i].min(suffmin[i + 1]);
        }
        let m_cap = 64u64.min(n / 4);
        for m0 in 1..=m_cap {
            // largest n violating suffmin[n + m0] > gamma_n
            let mut last_bad: Option<u64> = None;
            for i in 0..(len - m0 as usize) {
                if suffmin[i + m0 as usize] <= gam[i] {
                    last_bad = Some(i as u64);
                }
            }
            let candidate_n0 = last_bad.map_or(0, |b| b + 1);
            if candidate_n0 <= n / 2 {
                n0_m0 = Some((candidate_n0, m0));
                break;
            }
        }
        let status = if n0_m0.is_some() {
            ConditionStatus::Consistent
        } else {
            ConditionStatus::Inconclusive
        };
        let mut diagnostics = Vec::new();
        if let Some((n0, m0)) = n0_m0 {
            diagnostics.push(("n0", n0 as f64));
            diagnostics.push(("m0", m0 as f64));
        }
        entries.push(ConditionEntry {
            id: "C3",
            description: "almost increasing: gamma_{n+m} > gamma_n for n >= n0, m >= m0",
            status,
            witness: None,
            diagnostics,
        });
    }

    // C4: sum of 1/gamma_n diverges.
    {
        let trend = block_trend(n, |i| 1.0 / gam[i as usize]);
        let status = classify_divergent(&trend);
        entries.push(ConditionEntry {
            id: "C4",
            description: "sum 1/gamma_n diverges",
            status,
            witness: None,
            diagnostics: vec![
                ("block_slope", trend.slope),
                ("block_slope_se", trend.slope_se),
                ("partial_sum", trend.partial_sum),
            ],
        });
    }

    // C5: some integer kappa > 1 makes sum gamma_n^{-kappa} converge.
    let mut kappa_found = None;
    let mut kappa_diag = Vec::new();
    {
        for kappa in 2..=200u32 {
            let trend = block_trend(n, |i| gam[i as usize].powi(-(kappa as i32)));
            if classify_convergent(&trend) == ConditionStatus::Consistent {
                kappa_found = Some(kappa);
                kappa_diag.push(("kappa", kappa as f64));
                kappa_diag.push(("block_slope", trend.slope));
                kappa_diag.push(("block_slope_se", trend.slope_se));
                kappa_diag.push(("partial_sum", trend.partial_sum));
                break;
            }
        }
        let status = if kappa_found.is_some() {
            ConditionStatus::Consistent
        } else {
            ConditionStatus::Inconclusive
        };
        entries.push(ConditionEntry {
            id: "C5",
            description: "sum gamma_n^{-kappa} converges for some kappa > 1",
            status,
            witness: None,
            diagnostics: kappa_diag.clone(),
        });
    }

    // C6: sum |s_n| / gamma_n^2 converges.
    {
        let trend = block_trend(n, |i| s[i as usize].abs() / (gam[i as usize] * gam[i as usize]));
        entries.push(ConditionEntry {
            id: "C6",
            description: "sum |s_n| / gamma_n^2 converges",
            status: classify_convergent(&trend),
            witness: None,
            diagnostics: vec![
                ("block_slope", trend.slope),
                ("partial_sum", trend.partial_sum),
            ],
        });
    }

    // C7: sum |ds_n| / gamma_n converges.
    {
        let trend = block_trend(n - 1, |i| ds[i as usize].abs() / gam[i as usize]);
        entries.push(ConditionEntry {
            id: "C7",
            description: "sum |ds_n| / gamma_n converges",
            status: classify_convergent(&trend),
            witness: None,
            diagnostics: vec![
                ("block_slope", trend.slope),
                ("partial_sum", trend.partial_sum),
            ],
        });
    }

    // C8: the integrability-exponent condition under its alternative label;
    // carries the detected kappa.
    {
        let status = entries[4].status;
        entries.push(ConditionEntry {
            id: "C8",
            description: "integrability exponent kappa detected (alias of C5)",
            status,
            witness: None,
            diagnostics: kappa_diag,
        });
    }

    Ok(ConditionReport {
        family: family.id(),
        horizon,
        entries,
        n0_m0,
        kappa: kappa_found,
    })
}
