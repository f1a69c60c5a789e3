//! The declarative run config: one TOML file with a table per stage.
//! Every key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use topiclab::diagnostics::ReportFormat;
use topiclab::digest::FieldDigest;
use topiclab::inference::HyperTemplate;
use topiclab::{HeldoutSplit, Hyperparams, Init, PreprocessConfig, Preprocessor};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub fit: FitConfig,
    pub heldout: HeldoutSplit,
    pub diagnostics: DiagnosticsConfig,
    pub tasks: TaskConfig,
    pub labels: LabelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub k: usize,
    /// `None` means 50/K.
    pub alpha: Option<f64>,
    pub eta: f64,
    pub max_iterations: usize,
    pub burn_in: usize,
    pub init: Init,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let t = HyperTemplate::default();
        FitConfig { k: 10, alpha: t.alpha, eta: t.eta, max_iterations: t.max_iterations, burn_in: t.burn_in, init: t.init, seed: t.seed }
    }
}

impl FitConfig {
    pub fn template(&self) -> HyperTemplate {
        HyperTemplate {
            alpha: self.alpha,
            eta: self.eta,
            max_iterations: self.max_iterations,
            burn_in: self.burn_in,
            init: self.init,
            seed: self.seed,
        }
    }

    pub fn hyperparams(&self, k: usize) -> Hyperparams {
        self.template().resolve(k, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub k_grid: Vec<usize>,
    pub top_words: usize,
    pub frex_weight: f64,
    pub format: ReportFormat,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            k_grid: vec![5, 10, 15, 20],
            top_words: topiclab::diagnostics::DEFAULT_TOP_WORDS,
            frex_weight: topiclab::diagnostics::DEFAULT_FREX_WEIGHT,
            format: ReportFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub seed: u64,
    pub topic_cases: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig { seed: 0, topic_cases: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub n_topics: usize,
    pub n_words: usize,
    pub n_docs: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig { n_topics: 10, n_words: 5, n_docs: 10 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(HarnessError::file(p))?),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.fit.hyperparams(self.fit.k).validate()?;
        self.heldout.validate()?;
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.diagnostics.k_grid.is_empty() || self.diagnostics.k_grid.iter().any(|&k| k < 2) {
            return bad("diagnostics.k_grid must be non-empty with every K >= 2".into());
        }
        if self.diagnostics.top_words == 0 {
            return bad("diagnostics.top_words must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.diagnostics.frex_weight) {
            return bad("diagnostics.frex_weight must be in [0, 1]".into());
        }
        Ok(())
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        Ok(Preprocessor::new(self.preprocess.clone())?)
    }

    /// Digest of the resolved config with defaults filled in, plus the
    /// contents of built-in word lists it refers to.
    pub fn digest(&self) -> Result<String> {
        let json = serde_json::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))?;
        let pre = self.preprocessor()?;
        let mut d = FieldDigest::new();
        d.field(json.as_bytes()).field(pre.fingerprint().as_bytes());
        Ok(d.finish())
    }
}
