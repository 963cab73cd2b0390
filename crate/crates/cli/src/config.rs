use rds_circle::classifier::ClassifierParams;
use rds_circle::conjugacy::ConjugacyParams;
use rds_circle::family::FamilySpec;
use rds_circle::structure::McParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub x0: f64,
    /// Orbit points written, `x0` included.
    pub length: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { x0: 0.0, length: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConjugacyConfig {
    #[serde(flatten)]
    pub params: ConjugacyParams,
    /// Residual grid size.
    pub grid: usize,
    /// Half-widths for the residual trend.
    pub trend: Vec<usize>,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        ConjugacyConfig {
            params: ConjugacyParams::default(),
            grid: 512,
            trend: vec![100, 200, 400],
        }
    }
}

/// Fully resolved run configuration. Every field is echoed into outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    pub families: Vec<FamilySpec>,
    /// Window half-width `N`.
    pub half_width: usize,
    pub simulate: SimulateConfig,
    pub mc: McParams,
    pub conjugacy: ConjugacyConfig,
    pub classifier: ClassifierParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            master_seed: 0,
            families: Vec::new(),
            half_width: 200,
            simulate: SimulateConfig::default(),
            mc: McParams::default(),
            conjugacy: ConjugacyConfig::default(),
            classifier: ClassifierParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies a seed override and copies the master seed into the nested
    /// parameter blocks.
    pub fn resolve(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.master_seed = s;
        }
        self.mc.seed = self.master_seed;
        self.classifier.seed = self.master_seed;
        self.classifier.mc.seed = self.master_seed;
        self
    }

    pub fn family(&self, i: usize) -> Result<&FamilySpec, CliError> {
        self.families
            .get(i)
            .ok_or_else(|| CliError::Config(format!("config needs at least {} famil{}", i + 1, if i == 0 { "y" } else { "ies" })))
    }
}
