//! Pipeline configuration: built-in defaults, overridden by a JSON
//! config file, overridden by CLI flags. Unknown keys in the file are
//! rejected.

use std::path::Path;

use mound_core::raster::DEFAULT_PATCH_SIZE;
use mound_core::regress::Hyperparameters;
use mound_core::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub patch_size: Option<u32>,
    pub include_partial: Option<bool>,
    pub score_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub models: Option<Vec<String>>,
    pub lasso_lambda: Option<f64>,
    pub svr_tuned: Option<bool>,
    pub svr_c: Option<f64>,
    pub svr_epsilon: Option<f64>,
    pub svr_gamma: Option<f64>,
    pub mlp_hidden: Option<Vec<usize>>,
    pub mlp_learning_rate: Option<f64>,
    pub mlp_epochs: Option<usize>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.patch_size {
            if p == 0 {
                return Err(Error::Validation("patch_size must be >= 1".to_string()));
            }
        }
        if let Some(t) = self.score_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Validation(format!(
                    "score_threshold {t} outside [0, 1]"
                )));
            }
        }
        if let Some(c) = self.svr_c {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Validation(format!("svr_c must be > 0, got {c}")));
            }
        }
        if let Some(e) = self.svr_epsilon {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::Validation(format!(
                    "svr_epsilon must be >= 0, got {e}"
                )));
            }
        }
        if let Some(g) = self.svr_gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Validation(format!(
                    "svr_gamma must be > 0, got {g}"
                )));
            }
        }
        if let Some(l) = self.mlp_learning_rate {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Validation(format!(
                    "mlp_learning_rate must be > 0, got {l}"
                )));
            }
        }
        if let Some(l) = self.lasso_lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Validation(format!(
                    "lasso_lambda must be >= 0, got {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn patch_size(&self, flag: Option<u32>) -> u32 {
        flag.or(self.patch_size).unwrap_or(DEFAULT_PATCH_SIZE)
    }

    pub fn include_partial(&self, flag: Option<bool>) -> bool {
        flag.or(self.include_partial).unwrap_or(true)
    }

    pub fn score_threshold(&self, flag: Option<f64>) -> f64 {
        flag.or(self.score_threshold).unwrap_or(0.5)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn jobs(&self, flag: Option<usize>) -> usize {
        flag.or(self.jobs)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
            .max(1)
    }

    /// Resolve model hyperparameters from config + flag overrides.
    pub fn hyperparameters(&self, lasso_lambda: Option<f64>) -> Hyperparameters {
        let defaults = Hyperparameters::default();
        Hyperparameters {
            lasso_lambda: lasso_lambda.or(self.lasso_lambda),
            svr_tuned: self.svr_tuned.unwrap_or(defaults.svr_tuned),
            svr_c: self.svr_c.unwrap_or(defaults.svr_c),
            svr_epsilon: self.svr_epsilon.unwrap_or(defaults.svr_epsilon),
            svr_gamma: self.svr_gamma.unwrap_or(defaults.svr_gamma),
            mlp_hidden: self.mlp_hidden.clone().unwrap_or(defaults.mlp_hidden),
            mlp_learning_rate: self
                .mlp_learning_rate
                .unwrap_or(defaults.mlp_learning_rate),
            mlp_epochs: self.mlp_epochs.unwrap_or(defaults.mlp_epochs),
        }
    }
}
