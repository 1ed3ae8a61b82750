//! Declarative configuration for coefficient families and trigonometric
//! signals. The key names are the stable CLI contract:
//! `kind`, `c`, `p`, `beta_w`, `base`, `detour.period`, `detour.depth`,
//! `table`, `offsets.kind`, `offsets.rho` for families, and a `terms` list
//! of `{omega, re, im}` entries for signals.

use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

use crate::chromatic::TrigSignal;
use crate::family::{CoefficientFamily, FamilyError, OffsetRule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("`{key}` is required for kind `{kind}`")]
    Missing { key: String, kind: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

impl From<FamilyError> for ConfigError {
    fn from(err: FamilyError) -> Self {
        match err {
            FamilyError::InvalidParameter { key, message } => {
                ConfigError::Invalid { key: format!("family.{key}"), message }
            }
            other => ConfigError::Invalid {
                key: "family".into(),
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DetourConfig {
    pub period: u64,
    pub depth: u64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OffsetsConfig {
    pub kind: String,
    pub rho: Option<f64>,
    pub table: Option<Vec<f64>>,
}

/// Serializable description of a coefficient family.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    pub c: Option<f64>,
    pub p: Option<f64>,
    pub beta_w: Option<f64>,
    pub base: Option<Box<FamilyConfig>>,
    pub detour: Option<DetourConfig>,
    pub table: Option<Vec<f64>>,
    pub offsets: Option<OffsetsConfig>,
}

impl FamilyConfig {
    pub fn build(&self) -> Result<CoefficientFamily, ConfigError> {
        let missing = |key: &str| ConfigError::Missing {
            key: key.to_string(),
            kind: self.kind.clone(),
        };
        let family = match self.kind.as_str() {
            "power-law" => {
                let c = self.c.ok_or_else(|| missing("family.c"))?;
                let p = self.p.ok_or_else(|| missing("family.p"))?;
                CoefficientFamily::power_law(c, p)?
            }
            "hermite-exact" => CoefficientFamily::hermite_exact(),
            "freud-leading" => {
                let beta = self.beta_w.ok_or_else(|| missing("family.beta_w"))?;
                CoefficientFamily::freud_leading(beta)?
            }
            "detour-perturbed" => {
                let base = self.base.as_ref().ok_or_else(|| missing("family.base"))?;
                let detour = self
                    .detour
                    .as_ref()
                    .ok_or_else(|| missing("family.detour"))?;
                CoefficientFamily::detour_perturbed(base.build()?, detour.period, detour.depth)?
            }
            "custom-table" => {
                let table = self.table.clone().ok_or_else(|| missing("family.table"))?;
                CoefficientFamily::custom_table(table)?
            }
            other => {
                return Err(invalid(
                    "family.kind",
                    format!(
                        "unknown kind `{other}` (expected power-law, hermite-exact, \
                         freud-leading, detour-perturbed, or custom-table)"
                    ),
                ))
            }
        };
        let offsets = match &self.offsets {
            None => OffsetRule::Zero,
            Some(cfg) => match cfg.kind.as_str() {
                "zero" => OffsetRule::Zero,
                "rho-proportional" => OffsetRule::RhoProportional {
                    rho: cfg.rho.ok_or_else(|| ConfigError::Missing {
                        key: "family.offsets.rho".into(),
                        kind: cfg.kind.clone(),
                    })?,
                },
                "custom-table" => OffsetRule::CustomTable {
                    table: cfg.table.clone().ok_or_else(|| ConfigError::Missing {
                        key: "family.offsets.table".into(),
                        kind: cfg.kind.clone(),
                    })?,
                },
                other => {
                    return Err(invalid(
                        "family.offsets.kind",
                        format!("unknown offsets kind `{other}`"),
                    ))
                }
            },
        };
        Ok(family.with_offsets(offsets)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTermConfig {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
}

/// Signal specification: `terms` for the primary signal, `terms_g` for the
/// optional second signal of binary operations.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub terms: Vec<SignalTermConfig>,
    pub terms_g: Option<Vec<SignalTermConfig>>,
}

fn build_terms(terms: &[SignalTermConfig], key: &str) -> Result<TrigSignal, ConfigError> {
    TrigSignal::new(
        terms
            .iter()
            .map(|t| (t.omega, Complex64::new(t.re, t.im)))
            .collect(),
    )
    .map_err(|e| invalid(key, e.to_string()))
}

impl SignalConfig {
    pub fn build_f(&self) -> Result<TrigSignal, ConfigError> {
        build_terms(&self.terms, "signal.terms")
    }

    pub fn build_g(&self) -> Result<Option<TrigSignal>, ConfigError> {
        self.terms_g
            .as_ref()
            .map(|terms| build_terms(terms, "signal.terms_g"))
            .transpose()
    }
}
