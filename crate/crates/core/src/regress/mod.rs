//! The patch-level correction stage: four regressors mapping the patch
//! feature vector to a corrected mound count.
//!
//! Every fit standardizes features internally. Linear and lasso weights
//! are re-expressed in original units, so their bundles carry an
//! identity standardizer; SVR and MLP parameters live in standardized
//! space and their bundles carry the fitted transform. Prediction always
//! applies the bundled standardizer, runs the model, and clamps negative
//! outputs to zero.

mod lasso;
mod linear;
mod mlp;
mod standardize;
mod svr;

pub use lasso::{fit_lasso, fit_lasso_cv, lambda_grid, lambda_max, LassoModel};
pub use linear::{fit_ols, LinearModel};
pub use mlp::{fit_mlp, MlpModel};
pub use standardize::{fit_standardizer, Standardizer};
pub use svr::{fit_svr, fit_svr_tuned, SvrKernel, SvrModel, DEFAULT_GAMMA};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{block_count, rcp};
use crate::features::{FeatureVector, TrainingSet};

/// Supported bundle format version.
pub const BUNDLE_FORMAT_VERSION: &str = "1";

/// One of the four trained predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Svr(SvrModel),
    Lasso(LassoModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(_) => ModelKind::Linear,
            Model::Svr(_) => ModelKind::Svr,
            Model::Lasso(_) => ModelKind::Lasso,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Raw (unclamped) prediction on a standardized input.
    fn predict_standardized(&self, x: &[f64; 4]) -> f64 {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Svr(m) => m.predict_standardized(x),
            Model::Lasso(m) => m.predict(x),
            Model::Mlp(m) => m.forward(x),
        }
    }
}

/// Model kinds in canonical (tie-break) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    Linear,
    Svr,
    Lasso,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Linear,
        ModelKind::Svr,
        ModelKind::Lasso,
        ModelKind::Mlp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Svr => "svr",
            ModelKind::Lasso => "lasso",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "svr" => Ok(ModelKind::Svr),
            "lasso" => Ok(ModelKind::Lasso),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Validation(format!(
                "unknown model kind {other:?} (expected linear, svr, lasso, or mlp)"
            ))),
        }
    }
}

/// Provenance and settings recorded with a trained model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_on: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub hyperparameters: serde_json::Value,
}

/// A trained model plus everything needed to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: Model,
    pub standardizer: Standardizer,
    pub metadata: BundleMetadata,
}

impl ModelBundle {
    pub fn new(model: Model, standardizer: Standardizer, metadata: BundleMetadata) -> Self {
        ModelBundle {
            model,
            standardizer,
            metadata,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    /// Corrected count for one patch: standardize, run the model, clamp
    /// negatives to zero.
    pub fn predict(&self, features: &FeatureVector) -> f64 {
        let x = self.standardizer.apply(&features.as_array());
        self.model.predict_standardized(&x).max(0.0)
    }
}

// --- bundle JSON ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleJson {
    format_version: String,
    model_type: String,
    standardizer: Standardizer,
    params: serde_json::Value,
    metadata: BundleMetadata,
}

/// Serialize a bundle to its versioned JSON form.
pub fn bundle_to_json(bundle: &ModelBundle) -> Result<String> {
    let params = match &bundle.model {
        Model::Linear(m) => serde_json::to_value(m),
        Model::Svr(m) => serde_json::to_value(m),
        Model::Lasso(m) => serde_json::to_value(m),
        Model::Mlp(m) => serde_json::to_value(m),
    }?;
    let json = BundleJson {
        format_version: BUNDLE_FORMAT_VERSION.to_string(),
        model_type: bundle.kind().name().to_string(),
        standardizer: bundle.standardizer.clone(),
        params,
        metadata: bundle.metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&json)?)
}

/// Parse a bundle, rejecting unknown fields and unsupported versions.
pub fn bundle_from_json(text: &str) -> Result<ModelBundle> {
    // Version gate first so old/new formats fail with a clear error
    // rather than an unknown-field parse error.
    let probe: serde_json::Value = serde_json::from_str(text)?;
    match probe.get("format_version").and_then(|v| v.as_str()) {
        Some(BUNDLE_FORMAT_VERSION) => {}
        Some(other) => {
            return Err(Error::UnsupportedVersion {
                found: other.to_string(),
                supported: BUNDLE_FORMAT_VERSION.to_string(),
            })
        }
        None => {
            return Err(Error::Validation(
                "bundle JSON missing format_version".to_string(),
            ))
        }
    }
    let json: BundleJson = serde_json::from_value(probe)?;
    let kind: ModelKind = json.model_type.parse()?;
    let model = match kind {
        ModelKind::Linear => Model::Linear(serde_json::from_value(json.params)?),
        ModelKind::Svr => Model::Svr(serde_json::from_value(json.params)?),
        ModelKind::Lasso => Model::Lasso(serde_json::from_value(json.params)?),
        ModelKind::Mlp => {
            let m: MlpModel = serde_json::from_value(json.params)?;
            m.check_shape()?;
            Model::Mlp(m)
        }
    };
    Ok(ModelBundle {
        model,
        standardizer: json.standardizer,
        metadata: json.metadata,
    })
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    std::fs::write(path, bundle_to_json(bundle)?).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    bundle_from_json(&text)
}

// --- training front door ------------------------------------------------------

/// Hyperparameters for the four fits. Defaults: lasso lambda by 5-fold
/// CV; SVR tuned over a small C/epsilon grid at gamma = 1/4; MLP with
/// hidden layers [16, 8], rate 0.01, 5000 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub lasso_lambda: Option<f64>,
    pub svr_tuned: bool,
    pub svr_c: f64,
    pub svr_epsilon: f64,
    pub svr_gamma: f64,
    pub mlp_hidden: Vec<usize>,
    pub mlp_learning_rate: f64,
    pub mlp_epochs: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            lasso_lambda: None,
            svr_tuned: true,
            svr_c: 10.0,
            svr_epsilon: 0.5,
            svr_gamma: DEFAULT_GAMMA,
            mlp_hidden: vec![16, 8],
            mlp_learning_rate: 0.01,
            mlp_epochs: 5000,
        }
    }
}

/// Train one model kind and wrap it as a bundle.
pub fn train_model(
    kind: ModelKind,
    train: &TrainingSet,
    hyper: &Hyperparameters,
    seed: u64,
    trained_on: &str,
) -> Result<ModelBundle> {
    let (model, standardizer, recorded) = match kind {
        ModelKind::Linear => {
            let m = fit_ols(train)?;
            (
                Model::Linear(m),
                Standardizer::identity(),
                serde_json::json!({}),
            )
        }
        ModelKind::Lasso => {
            let m = match hyper.lasso_lambda {
                Some(lambda) => fit_lasso(train, lambda)?,
                None => fit_lasso_cv(train)?,
            };
            let lambda = m.lambda;
            (
                Model::Lasso(m),
                Standardizer::identity(),
                serde_json::json!({ "lambda": lambda }),
            )
        }
        ModelKind::Svr => {
            let (m, standardizer) = if hyper.svr_tuned {
                fit_svr_tuned(train)?
            } else {
                fit_svr(
                    train,
                    hyper.svr_c,
                    hyper.svr_epsilon,
                    SvrKernel::Rbf {
                        gamma: hyper.svr_gamma,
                    },
                )?
            };
            let recorded = serde_json::json!({
                "c": m.c,
                "epsilon": m.epsilon,
                "kernel": serde_json::to_value(m.kernel)?,
            });
            (Model::Svr(m), standardizer, recorded)
        }
        ModelKind::Mlp => {
            let (m, standardizer) = fit_mlp(
                train,
                &hyper.mlp_hidden,
                hyper.mlp_learning_rate,
                hyper.mlp_epochs,
                seed,
            )?;
            let recorded = serde_json::json!({
                "hidden": hyper.mlp_hidden,
                "learning_rate": hyper.mlp_learning_rate,
                "epochs": hyper.mlp_epochs,
                "seed": seed,
            });
            (Model::Mlp(m), standardizer, recorded)
        }
    };
    Ok(ModelBundle::new(
        model,
        standardizer,
        BundleMetadata {
            trained_on: Some(trained_on.to_string()),
            hyperparameters: recorded,
        },
    ))
}

/// Train several kinds in canonical order.
pub fn train_all(
    kinds: &[ModelKind],
    train: &TrainingSet,
    hyper: &Hyperparameters,
    seed: u64,
    trained_on: &str,
) -> Result<Vec<ModelBundle>> {
    kinds
        .iter()
        .map(|&k| train_model(k, train, hyper, seed, trained_on))
        .collect()
}

/// Outcome of model selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Index of the winner in the candidate list.
    pub best_index: usize,
    /// Block-level validation RCP per candidate, in input order.
    pub rcps: Vec<f64>,
}

/// Pick the candidate with the best block-level RCP on the validation
/// set (sum of predictions vs sum of targets). Ties keep the earliest
/// candidate, so listing candidates in canonical order (linear, svr,
/// lasso, mlp) realizes the documented tie-break.
pub fn select_best(candidates: &[ModelBundle], validation: &TrainingSet) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument(
            "select_best needs at least one candidate".to_string(),
        ));
    }
    if validation.is_empty() {
        return Err(Error::InsufficientData(
            "validation set is empty".to_string(),
        ));
    }
    let targets = validation.targets()?;
    let total_target: f64 = targets.iter().sum();
    let mut rcps = Vec::with_capacity(candidates.len());
    for bundle in candidates {
        let predictions: Vec<f64> = validation
            .samples
            .iter()
            .map(|s| bundle.predict(&s.features))
            .collect();
        let predicted = block_count(&predictions)? as f64;
        rcps.push(rcp(predicted, total_target)?);
    }
    let mut best_index = 0;
    for (i, &value) in rcps.iter().enumerate() {
        if value > rcps[best_index] {
            best_index = i;
        }
    }
    Ok(Selection { best_index, rcps })
}

/// Shared test helper: a training set from raw (features, target) rows.
#[cfg(test)]
pub(crate) fn set_from(rows: &[([f64; 4], f64)]) -> TrainingSet {
    use crate::features::PatchSample;
    TrainingSet::new(
        rows.iter()
            .enumerate()
            .map(|(i, (x, y))| PatchSample {
                block_id: "t".to_string(),
                row: i as u32,
                col: 0,
                features: FeatureVector {
                    mound_count: x[0].max(0.0) as u32,
                    tree_ratio: x[1],
                    water_ratio: x[2],
                    debris_ratio: x[3],
                },
                target: Some(*y),
            })
            .collect(),
    )
}
