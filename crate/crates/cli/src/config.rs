use std::path::Path;

use anyhow::Context;
use defect_sr::constfit::FitConfig;
use defect_sr::expr::{ComplexityWeights, Grammar};
use defect_sr::search::{PredicateConfig, SearchConfig};
use defect_sr::seqvae::{ModelDims, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::Invalid;

/// Every tunable of a run. Missing sections take their defaults and
/// unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub grammar: Grammar,
    pub complexity: ComplexityWeights,
    pub predicates: PredicateConfig,
    pub model: ModelDims,
    pub train: TrainConfig,
    pub search: SearchConfig,
    pub fit: FitConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.grammar.validate()?;
        self.complexity.validate()?;
        self.predicates.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.search.validate()?;
        self.fit.validate()?;
        Ok(())
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Invalid(format!("config: {e}")))?;
        cfg.validate().map_err(|e| Invalid(format!("config: {e}")))?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                RunConfig::parse(&text)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}
