//! Config documents. Every document carries a schema version and rejects
//! unknown keys, so a typo in a scientific config fails fast instead of
//! silently running defaults.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use chainq_core::analytics::{EmpiricalQueueInputs, PriorityQueueModel, TransitionInputs};
use chainq_core::orderflow::{KModel, OrderSizeLaw};
use chainq_core::queue::{CfmmConfig, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;

fn check_version(version: u32) -> anyhow::Result<()> {
    if version != SCHEMA_VERSION {
        bail!("unsupported schema_version {version}, expected {SCHEMA_VERSION}");
    }
    Ok(())
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> anyhow::Result<T> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_slice(&bytes)
        .with_context(|| format!("cannot parse config {}", path.display()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDocument {
    pub schema_version: u32,
    pub sim: SimConfig,
}

impl SimDocument {
    pub fn validate(&self) -> anyhow::Result<()> {
        check_version(self.schema_version)?;
        self.sim.validate()?;
        Ok(())
    }
}

/// Model input for the analytic command: rates, raw tables, or the measured
/// (head, transition-row) lists produced by ingestion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Rates {
        lambda: f64,
        mu: f64,
        beta: usize,
    },
    Tables {
        beta: usize,
        prob_n: Vec<f64>,
        prob_s: Vec<f64>,
        #[serde(default)]
        tail_mass: Option<f64>,
    },
    Transitions {
        beta: usize,
        prob_n_head: Vec<f64>,
        trans: Vec<f64>,
    },
}

pub enum BuiltModel {
    /// Full rate model; also enables the exact sweep.
    Rates(PriorityQueueModel),
    Tables(EmpiricalQueueInputs),
    Transitions(TransitionInputs),
}

impl ModelSpec {
    pub fn build(&self) -> anyhow::Result<BuiltModel> {
        Ok(match self {
            ModelSpec::Rates { lambda, mu, beta } => {
                BuiltModel::Rates(PriorityQueueModel::new(*lambda, *mu, *beta)?)
            }
            ModelSpec::Tables {
                beta,
                prob_n,
                prob_s,
                tail_mass,
            } => BuiltModel::Tables(match tail_mass {
                Some(tail) => EmpiricalQueueInputs::with_tail_mass(
                    *beta,
                    prob_n.clone(),
                    prob_s.clone(),
                    *tail,
                )?,
                None => EmpiricalQueueInputs::new(*beta, prob_n.clone(), prob_s.clone())?,
            }),
            ModelSpec::Transitions {
                beta,
                prob_n_head,
                trans,
            } => BuiltModel::Transitions(TransitionInputs::new(
                *beta,
                prob_n_head.clone(),
                trans.clone(),
            )?),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticDocument {
    pub schema_version: u32,
    pub model: ModelSpec,
    /// Length of the emitted K' table.
    #[serde(default = "default_kprime_len")]
    pub kprime_len: usize,
    /// Largest message number in the emitted K table.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Also emit exact run-conditioned tables (rates model only).
    #[serde(default)]
    pub exact: bool,
}

fn default_kprime_len() -> usize {
    64
}

fn default_k_max() -> usize {
    256
}

impl AnalyticDocument {
    pub fn validate(&self) -> anyhow::Result<()> {
        check_version(self.schema_version)?;
        if self.exact && !matches!(self.model, ModelSpec::Rates { .. }) {
            bail!("exact tables require the rates model");
        }
        Ok(())
    }
}

/// Prefix-length model for the Monte Carlo command; `rates` derives the
/// geometric parameter from the queue model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KModelSpec {
    Fixed { k: usize },
    Geometric { p: f64 },
    Table { pmf: Vec<f64> },
    Rates { lambda: f64, mu: f64, beta: usize },
}

impl KModelSpec {
    pub fn build(&self) -> anyhow::Result<KModel> {
        Ok(match self {
            KModelSpec::Fixed { k } => KModel::Fixed { k: *k },
            KModelSpec::Geometric { p } => KModel::Geometric { p: *p },
            KModelSpec::Table { pmf } => KModel::Table { pmf: pmf.clone() },
            KModelSpec::Rates { lambda, mu, beta } => {
                let model = PriorityQueueModel::new(*lambda, *mu, *beta)?;
                KModel::Geometric { p: model.p }
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McScenario {
    pub pool: CfmmConfig,
    pub law: OrderSizeLaw,
    pub k_model: KModelSpec,
    /// Signed A-side amount of the tagged order.
    pub order: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDocument {
    pub schema_version: u32,
    pub scenario: McScenario,
}

impl McDocument {
    pub fn validate(&self) -> anyhow::Result<()> {
        check_version(self.schema_version)?;
        if self.scenario.order == 0.0 || !self.scenario.order.is_finite() {
            bail!("order amount must be non-zero and finite");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = r#"{"schema_version":1,"model":{"kind":"rates","lambda":1.0,"mu":2.0,"beta":1},"typo_key":3}"#;
        assert!(serde_json::from_str::<AnalyticDocument>(doc).is_err());
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let doc = r#"{"schema_version":2,"model":{"kind":"rates","lambda":1.0,"mu":2.0,"beta":1}}"#;
        let parsed: AnalyticDocument = serde_json::from_str(doc).unwrap();
        assert!(parsed.validate().is_err());
    }

    #[test]
    fn rates_model_builds() {
        let doc = r#"{"schema_version":1,"model":{"kind":"rates","lambda":1.0,"mu":2.0,"beta":1}}"#;
        let parsed: AnalyticDocument = serde_json::from_str(doc).unwrap();
        parsed.validate().unwrap();
        match parsed.model.build().unwrap() {
            BuiltModel::Rates(m) => assert!((m.p - 0.5).abs() < 1e-12),
            _ => panic!("expected rates model"),
        }
    }
}
