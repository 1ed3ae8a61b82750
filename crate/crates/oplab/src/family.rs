//! Recursion-coefficient families and their derived sequences.
//!
//! A family produces the positive coefficients `gamma_n` of a three-term
//! recurrence, optionally together with diagonal offsets `beta_n` for the
//! non-symmetric variant. Everything downstream (recurrence evaluation,
//! phase decomposition, condition checking) consumes this type.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParameter { key: String, message: String },
    #[error("index {index} out of range for custom table of length {len}")]
    IndexOutOfRange { index: u64, len: usize },
    #[error("index below -1 is not defined")]
    IndexBelowConvention,
}

/// Rule generating the offsets `beta_n` of the non-symmetric recurrence.
#[derive(Debug, Clone, PartialEq)]
pub enum OffsetRule {
    /// `beta_n = 0`; the symmetric case.
    Zero,
    /// `beta_n = rho * gamma_n`.
    RhoProportional { rho: f64 },
    /// Explicit finite table of offsets.
    CustomTable { table: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `gamma_n = c (n+1)^p` with `c > 0`, `0 < p < 1`.
    PowerLaw { c: f64, p: f64 },
    /// `gamma_n = ((n+1)/2)^{1/2}`, the orthonormal Hermite coefficients.
    HermiteExact,
    /// `gamma_n = (n+1)^{1/beta} / 2`, the leading-order model for the
    /// coefficients of the exponential weight `exp(-c |w|^beta)`. The
    /// dependence on the weight's constant `c` is deliberately not modeled.
    FreudLeading { beta: f64 },
    /// Rearrangement of a base family: within every period of length
    /// `period`, the last `2*depth` indices are emitted with the upper and
    /// lower halves swapped, so the sequence steps backwards by `depth`
    /// positions once per period and then advances again. Non-monotonic but
    /// almost increasing.
    DetourPerturbed {
        base: Box<CoefficientFamily>,
        period: u64,
        depth: u64,
    },
    /// Explicit finite table of positive coefficients.
    CustomTable { table: Vec<f64> },
}

/// A recursion-coefficient family plus its offset rule.
///
/// Immutable after construction; all accessors are pure, so values can be
/// shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFamily {
    kind: FamilyKind,
    offsets: OffsetRule,
}

fn param_err(key: &str, message: impl Into<String>) -> FamilyError {
    FamilyError::InvalidParameter {
        key: key.to_string(),
        message: message.into(),
    }
}

impl CoefficientFamily {
    pub fn power_law(c: f64, p: f64) -> Result<Self, FamilyError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(param_err("c", format!("must be a positive real, got {c}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(param_err("p", format!("must lie in (0, 1), got {p}")));
        }
        Ok(Self {
            kind: FamilyKind::PowerLaw { c, p },
            offsets: OffsetRule::Zero,
        })
    }

    pub fn hermite_exact() -> Self {
        Self {
            kind: FamilyKind::HermiteExact,
            offsets: OffsetRule::Zero,
        }
    }

    pub fn freud_leading(beta: f64) -> Result<Self, FamilyError> {
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(param_err("beta_w", format!("must exceed 1, got {beta}")));
        }
        Ok(Self {
            kind: FamilyKind::FreudLeading { beta },
            offsets: OffsetRule::Zero,
        })
    }

    pub fn detour_perturbed(
        base: CoefficientFamily,
        period: u64,
        depth: u64,
    ) -> Result<Self, FamilyError> {
        if period == 0 {
            return Err(param_err("detour.period", "must be a positive integer"));
        }
        if depth == 0 {
            return Err(param_err("detour.depth", "must be a positive integer"));
        }
        if period <= 2 * depth {
            return Err(param_err(
                "detour.period",
                format!("period {period} must exceed twice the depth {depth}"),
            ));
        }
        Ok(Self {
            kind: FamilyKind::DetourPerturbed {
                base: Box::new(base),
                period,
                depth,
            },
            offsets: OffsetRule::Zero,
        })
    }

    pub fn custom_table(table: Vec<f64>) -> Result<Self, FamilyError> {
        if table.is_empty() {
            return Err(param_err("table", "must not be empty"));
        }
        if let Some(bad) = table.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(param_err(
                "table",
                format!("entry {bad} is not a positive finite real"),
            ));
        }
        Ok(Self {
            kind: FamilyKind::CustomTable { table },
            offsets: OffsetRule::Zero,
        })
    }

    pub fn with_offsets(mut self, offsets: OffsetRule) -> Result<Self, FamilyError> {
        match &offsets {
            OffsetRule::Zero => {}
            OffsetRule::RhoProportional { rho } => {
                if !rho.is_finite() {
                    return Err(param_err("offsets.rho", "must be finite"));
                }
            }
            OffsetRule::CustomTable { table } => {
                if table.is_empty() {
                    return Err(param_err("offsets.table", "must not be empty"));
                }
                if let Some(bad) = table.iter().position(|b| !b.is_finite()) {
                    return Err(param_err(
                        "offsets.table",
                        format!("entry {bad} is not finite"),
                    ));
                }
            }
        }
        self.offsets = offsets;
        Ok(self)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn offsets(&self) -> &OffsetRule {
        &self.offsets
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.offsets, OffsetRule::Zero)
    }

    pub fn is_power_law(&self) -> bool {
        matches!(self.kind, FamilyKind::PowerLaw { .. })
    }

    /// Largest index `n` for which `gamma(n)` is defined, when the family is
    /// backed by a finite table. `None` means unbounded.
    pub fn horizon_limit(&self) -> Option<u64> {
        let kind_limit = match &self.kind {
            FamilyKind::CustomTable { table } => Some(table.len() as u64 - 1),
            FamilyKind::DetourPerturbed { base, depth, .. } => {
                // the index map looks ahead by at most `depth`
                base.horizon_limit().map(|l| l.saturating_sub(*depth))
            }
            _ => None,
        };
        let offset_limit = match &self.offsets {
            OffsetRule::CustomTable { table } => Some(table.len() as u64 - 1),
            _ => None,
        };
        match (kind_limit, offset_limit) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }

    /// Detour index map: identity except that within each period the last
    /// `2*depth` positions swap their upper and lower halves.
    fn detour_index(period: u64, depth: u64, n: u64) -> u64 {
        let r = n % period;
        if r < period - 2 * depth {
            n
        } else if r < period - depth {
            n + depth
        } else {
            n - depth
        }
    }

    /// Recursion coefficient `gamma_n`. The index `-1` returns 1 by the
    /// standard convention; callers never special-case it.
    ///
    /// Panics on a custom-table index past the table; bulk evaluators check
    /// `horizon_limit` up front and stay on the fast path.
    pub fn gamma(&self, n: i64) -> f64 {
        match n {
            -1 => 1.0,
            n if n < -1 => panic!("gamma index {n} below -1"),
            n => self.gamma_at(n as u64),
        }
    }

    fn gamma_at(&self, n: u64) -> f64 {
        match &self.kind {
            FamilyKind::PowerLaw { c, p } => c * ((n + 1) as f64).powf(*p),
            FamilyKind::HermiteExact => (((n + 1) as f64) / 2.0).sqrt(),
            FamilyKind::FreudLeading { beta } => ((n + 1) as f64).powf(1.0 / beta) / 2.0,
            FamilyKind::DetourPerturbed {
                base,
                period,
                depth,
            } => base.gamma_at(Self::detour_index(*period, *depth, n)),
            FamilyKind::CustomTable { table } => match table.get(n as usize) {
                Some(g) => *g,
                None => panic!(
                    "gamma index {n} out of range for custom table of length {}",
                    table.len()
                ),
            },
        }
    }

    /// Fallible variant of [`gamma`](Self::gamma) for boundary callers.
    pub fn gamma_checked(&self, n: i64) -> Result<f64, FamilyError> {
        if n < -1 {
            return Err(FamilyError::IndexBelowConvention);
        }
        if n >= 0 {
            if let Some(limit) = self.horizon_limit() {
                if n as u64 > limit {
                    return Err(FamilyError::IndexOutOfRange {
                        index: n as u64,
                        len: limit as usize + 1,
                    });
                }
            }
        }
        Ok(self.gamma(n))
    }

    /// Offset `beta_n` of the non-symmetric recurrence.
    pub fn beta_offset(&self, n: u64) -> f64 {
        match &self.offsets {
            OffsetRule::Zero => 0.0,
            OffsetRule::RhoProportional { rho } => rho * self.gamma_at(n),
            OffsetRule::CustomTable { table } => table[n as usize],
        }
    }

    /// First and second forward finite differences at `n >= 0`:
    /// `s_n = gamma_{n+1} - gamma_n`, `ds_n = s_{n+1} - s_n`.
    pub fn finite_differences(&self, n: u64) -> (f64, f64) {
        let g0 = self.gamma_at(n);
        let g1 = self.gamma_at(n + 1);
        let g2 = self.gamma_at(n + 2);
        let s = g1 - g0;
        (s, (g2 - g1) - s)
    }

    /// `s_n` alone.
    pub fn s(&self, n: u64) -> f64 {
        self.gamma_at(n + 1) - self.gamma_at(n)
    }

    /// `ds_n` alone.
    pub fn ds(&self, n: u64) -> f64 {
        self.finite_differences(n).1
    }

    /// `epsilon_n = (gamma_{2n-2} gamma_{2n} - gamma_{2n-1}^2) / gamma_{2n-1}`
    /// for `n >= 1`.
    pub fn epsilon(&self, n: u64) -> f64 {
        assert!(n >= 1, "epsilon requires n >= 1");
        let ga = self.gamma(2 * n as i64 - 2);
        let gb = self.gamma(2 * n as i64 - 1);
        let gc = self.gamma(2 * n as i64);
        let value = (ga * gc - gb * gb) / gb;
        #[cfg(debug_assertions)]
        {
            // same quantity through the finite-difference identity
            // eps_n = ds_{2n-2} - s_{2n-2} s_{2n-1} / gamma_{2n-1};
            // the two routes share the cancellation scale (ga*gc ~ gb^2),
            // so the comparison is relative to that scale, not to eps itself.
            if 2 * n >= 2 {
                let s0 = gb - ga;
                let s1 = gc - gb;
                let ds = s1 - s0;
                let alt = ds - s0 * s1 / gb;
                let scale = (ga * gc).abs().max(gb * gb) / gb;
                debug_assert!(
                    (value - alt).abs() <= 1e-12 * scale.max(1.0),
                    "epsilon route mismatch at n={n}: {value} vs {alt}"
                );
            }
        }
        value
    }

    /// `eta_n = |s_{2n-4}| + |s_{2n-3}| + |s_{2n-2}| + |s_{2n-1}|` for `n >= 2`.
    pub fn eta(&self, n: u64) -> f64 {
        assert!(n >= 2, "eta requires n >= 2");
        let base = 2 * n - 4;
        (0..4).map(|j| self.s(base + j).abs()).sum()
    }

    /// Stable identifier used in artifacts and as a merge key.
    pub fn id(&self) -> String {
        let mut s = match &self.kind {
            FamilyKind::PowerLaw { c, p } => format!("power-law(c={c},p={p})"),
            FamilyKind::HermiteExact => "hermite-exact".to_string(),
            FamilyKind::FreudLeading { beta } => format!("freud-leading(beta={beta})"),
            FamilyKind::DetourPerturbed {
                base,
                period,
                depth,
            } => format!("detour(q={period},d={depth})[{}]", base.id()),
            FamilyKind::CustomTable { table } => format!("custom-table(len={})", table.len()),
        };
        match &self.offsets {
            OffsetRule::Zero => {}
            OffsetRule::RhoProportional { rho } => s.push_str(&format!("+rho({rho})")),
            OffsetRule::CustomTable { table } => {
                s.push_str(&format!("+offsets(len={})", table.len()))
            }
        }
        s
    }
}

impl fmt::Display for CoefficientFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// The ten-family test corpus: power laws with exponents
/// 1/100, 1/4, 1/2, 3/4, 99/100 and their detour-perturbed counterparts
/// (period 50, depth 3).
pub fn corpus() -> Vec<CoefficientFamily> {
    let exponents = [0.01, 0.25, 0.5, 0.75, 0.99];
    let mut families = Vec::with_capacity(10);
    for &p in &exponents {
        families.push(CoefficientFamily::power_law(1.0, p).expect("corpus exponent"));
    }
    for &p in &exponents {
        let base = CoefficientFamily::power_law(1.0, p).expect("corpus exponent");
        families.push(CoefficientFamily::detour_perturbed(base, 50, 3).expect("corpus detour"));
    }
    families
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_matches_closed_form() {
        let fam = CoefficientFamily::hermite_exact();
        assert!((fam.gamma(0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fam.gamma(-1), 1.0);
        for n in 1..200i64 {
            let g = fam.gamma(n);
            let gm = fam.gamma(n - 1);
            // gamma_n^2 - gamma_{n-1}^2 = 1/2 up to rounding of the squares
            assert!(
                (g * g - gm * gm - 0.5).abs() <= 4.0 * f64::EPSILON * g * g,
                "n={n}"
            );
        }
    }

    #[test]
    fn power_law_and_convention() {
        let fam = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        assert_eq!(fam.gamma(3), 2.0);
        assert_eq!(fam.gamma(-1), 1.0);
        assert!(CoefficientFamily::power_law(1.0, 1.0).is_err());
        assert!(CoefficientFamily::power_law(1.0, 0.0).is_err());
        assert!(CoefficientFamily::power_law(0.0, 0.5).is_err());
        assert!(CoefficientFamily::power_law(-1.0, 0.5).is_err());
    }

    #[test]
    fn freud_leading_model() {
        let fam = CoefficientFamily::freud_leading(2.0).unwrap();
        assert!((fam.gamma(3) - 1.0).abs() < 1e-15); // 4^{1/2}/2
        assert!(CoefficientFamily::freud_leading(1.0).is_err());
    }

    #[test]
    fn finite_differences_hermite_hand_values() {
        let fam = CoefficientFamily::hermite_exact();
        let (s0, _) = fam.finite_differences(0);
        // gamma_1 - gamma_0 = 1 - 1/sqrt(2)
        assert!((s0 - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        let table = CoefficientFamily::custom_table(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(table.finite_differences(0), (0.0, 0.0));
    }

    #[test]
    fn epsilon_hand_values() {
        let constant = CoefficientFamily::custom_table(vec![2.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(constant.epsilon(1), 0.0);
        let fam = CoefficientFamily::hermite_exact();
        // (gamma_0 gamma_2 - gamma_1^2)/gamma_1 = sqrt(3)/2 - 1
        let expected = 3f64.sqrt() / 2.0 - 1.0;
        assert!((fam.epsilon(1) - expected).abs() < 1e-15);

        // epsilon_n -> 0 for a power law
        let pl = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        assert!(pl.epsilon(10_000).abs() < 1e-4);
        assert!(pl.epsilon(10_000).abs() < pl.epsilon(100).abs());
    }

    #[test]
    fn epsilon_identity_via_differences() {
        for fam in [
            CoefficientFamily::hermite_exact(),
            CoefficientFamily::power_law(0.7, 0.25).unwrap(),
            CoefficientFamily::power_law(2.0, 0.75).unwrap(),
        ] {
            for n in 1..1000u64 {
                let direct = fam.epsilon(n);
                let (s0, _) = fam.finite_differences(2 * n - 2);
                let s1 = fam.s(2 * n - 1);
                let ds = fam.ds(2 * n - 2);
                let alt = ds - s0 * s1 / fam.gamma(2 * n as i64 - 1);
                let denom = direct.abs().max(1e-30);
                assert!(
                    (direct - alt).abs() / denom < 1e-9 || (direct - alt).abs() < 1e-14,
                    "n={n} direct={direct} alt={alt}"
                );
            }
        }
    }

    #[test]
    fn eta_values() {
        let constant = CoefficientFamily::custom_table(vec![3.0; 8]).unwrap();
        assert_eq!(constant.eta(2), 0.0);
        let fam = CoefficientFamily::hermite_exact();
        // |s_0| + |s_1| + |s_2| + |s_3| from the explicit square roots
        let g: Vec<f64> = (0..5).map(|n| (((n + 1) as f64) / 2.0).sqrt()).collect();
        let expected = (g[1] - g[0]) + (g[2] - g[1]) + (g[3] - g[2]) + (g[4] - g[3]);
        assert!((fam.eta(2) - expected).abs() < 1e-15);
        assert!(fam.eta(2) > 0.87 && fam.eta(2) < 0.88);

        let detour = CoefficientFamily::detour_perturbed(
            CoefficientFamily::power_law(1.0, 0.5).unwrap(),
            10,
            2,
        )
        .unwrap();
        for n in 2..200 {
            assert!(detour.eta(n) > 0.0);
        }
    }

    #[test]
    fn power_law_difference_bounds() {
        // mean-value bounds |s_n| <= c p (n+1)^{p-1}, |ds_n| <= c p (1-p) n^{p-2}
        for &(c, p) in &[(1.0, 0.25), (1.0, 0.5), (2.5, 0.75), (1.0, 0.99)] {
            let fam = CoefficientFamily::power_law(c, p).unwrap();
            for n in 1..5000u64 {
                let (s, ds) = fam.finite_differences(n);
                let nf = n as f64;
                assert!(s.abs() <= c * p * (nf + 1.0).powf(p - 1.0) * (1.0 + 1e-12));
                assert!(ds.abs() <= c * p * (1.0 - p) * nf.powf(p - 2.0) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn detour_is_periodwise_rearrangement() {
        let base = CoefficientFamily::power_law(1.0, 0.5).unwrap();
        let fam = CoefficientFamily::detour_perturbed(base.clone(), 50, 3).unwrap();
        for block in 0..20u64 {
            let mut got: Vec<f64> = (block * 50..(block + 1) * 50)
                .map(|n| fam.gamma(n as i64))
                .collect();
            let mut want: Vec<f64> = (block * 50..(block + 1) * 50)
                .map(|n| base.gamma(n as i64))
                .collect();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            assert_eq!(got, want, "block {block}");
        }
        // non-monotone: some consecutive pair decreases
        let decreases = (0..500).any(|n| fam.gamma(n + 1) < fam.gamma(n));
        assert!(decreases);
        assert!(CoefficientFamily::detour_perturbed(base, 6, 3).is_err());
    }

    #[test]
    fn custom_table_bounds_and_offsets() {
        let fam = CoefficientFamily::custom_table(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fam.horizon_limit(), Some(2));
        assert!(fam.gamma_checked(3).is_err());
        assert!(fam.gamma_checked(2).is_ok());
        assert!(CoefficientFamily::custom_table(vec![]).is_err());
        assert!(CoefficientFamily::custom_table(vec![1.0, -2.0]).is_err());

        let with = CoefficientFamily::hermite_exact()
            .with_offsets(OffsetRule::RhoProportional { rho: 2.0 })
            .unwrap();
        assert_eq!(with.beta_offset(0), 2.0 * with.gamma(0));
        assert!(CoefficientFamily::hermite_exact()
            .with_offsets(OffsetRule::RhoProportional { rho: f64::NAN })
            .is_err());
    }

    #[test]
    fn corpus_contents() {
        let fams = corpus();
        assert_eq!(fams.len(), 10);
        let exps: Vec<f64> = fams
            .iter()
            .take(5)
            .map(|f| match f.kind() {
                FamilyKind::PowerLaw { p, .. } => *p,
                _ => panic!("expected power law"),
            })
            .collect();
        assert_eq!(exps, vec![0.01, 0.25, 0.5, 0.75, 0.99]);
        for f in fams.iter().skip(5) {
            assert!(matches!(f.kind(), FamilyKind::DetourPerturbed { .. }));
        }
    }
}
