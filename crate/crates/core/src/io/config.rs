use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::datagen::GeneratorConfig;
use crate::features::FeatureDef;
use crate::fit::FitConfig;
use crate::model::{ForestConfig, GbtConfig};
use crate::preprocess::{CommonGrid, FilterConfig};

/// Common interpolation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points: 30,
            fmin: 1e1,
            fmax: 1e5,
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Result<CommonGrid<f64>, IoError> {
        if self.points < 2 || !(self.fmin > 0.0) || !(self.fmax > self.fmin) {
            return Err(IoError::Format(format!("invalid grid {self:?}")));
        }
        Ok(CommonGrid::new(self.points, self.fmin, self.fmax))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Explicit feature list; `None` uses the full default bank.
    pub bank: Option<Vec<FeatureDef>>,
    pub fdr_level: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            bank: None,
            fdr_level: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2 }
    }
}

/// Everything a pipeline run needs. Unknown keys are rejected and missing
/// keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; propagated to generation, splitting and training.
    pub seed: Option<u64>,
    pub generator: GeneratorConfig,
    pub filter: FilterConfig,
    pub grid: GridConfig,
    pub features: FeatureConfig,
    pub split: SplitConfig,
    pub forest: ForestConfig,
    pub gbt: GbtConfig,
    pub fit: FitConfig,
    pub importance_repeats: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            generator: GeneratorConfig::default(),
            filter: FilterConfig::default(),
            grid: GridConfig::default(),
            features: FeatureConfig::default(),
            split: SplitConfig::default(),
            forest: ForestConfig::default(),
            gbt: GbtConfig::default(),
            fit: FitConfig::default(),
            importance_repeats: 5,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, IoError> {
        serde_json::from_str(s).map_err(|e| IoError::Parse {
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let s = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        Self::from_json(&s)
    }

    /// Pretty JSON with every default written out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Set `seed` and copy it into every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.generator.seed = seed;
        self.forest.seed = seed;
        self.gbt.seed = seed;
        self
    }

    pub fn split_seed(&self) -> u64 {
        self.seed.unwrap_or(self.generator.seed)
    }
}
