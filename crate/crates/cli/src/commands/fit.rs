use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use mound_core::features::read_features_csv;
use mound_core::regress::{save_bundle, train_model, ModelKind};
use mound_core::rng::derive_seed;
use mound_core::Result;

use crate::config::PipelineConfig;
use crate::logging;

use super::{ensure_dir, require_file};

#[derive(Args)]
pub struct FitArgs {
    /// Training feature CSV (targets required).
    pub features: PathBuf,

    /// Output directory; one bundle JSON per model.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Comma-separated model kinds [default: linear,svr,lasso,mlp].
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub models: Vec<String>,

    /// Master seed; per-model sub-seeds are derived from it [default: 0].
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Fixed lasso penalty (skips cross-validation).
    #[arg(long, value_name = "LAMBDA")]
    pub lasso_lambda: Option<f64>,
}

pub fn run(args: FitArgs, config: &PipelineConfig) -> Result<()> {
    require_file(&args.features)?;
    ensure_dir(&args.out)?;
    let train = read_features_csv(&args.features)?;
    let seed = config.seed(args.seed);
    let hyper = config.hyperparameters(args.lasso_lambda);

    let requested: Vec<String> = if args.models.is_empty() {
        config.models.clone().unwrap_or_else(|| {
            ModelKind::ALL.iter().map(|k| k.name().to_string()).collect()
        })
    } else {
        args.models.clone()
    };
    let mut kinds = Vec::new();
    let mut seen = BTreeSet::new();
    for name in &requested {
        let kind: ModelKind = name.parse()?;
        if seen.insert(kind) {
            kinds.push(kind);
        }
    }
    // Canonical order regardless of how the list was written.
    kinds.sort();

    let trained_on: BTreeSet<String> =
        train.samples.iter().map(|s| s.block_id.clone()).collect();
    let trained_on = trained_on.into_iter().collect::<Vec<_>>().join(",");

    for kind in kinds {
        let bundle = train_model(
            kind,
            &train,
            &hyper,
            derive_seed(seed, kind.name(), 0),
            &trained_on,
        )?;
        let path = args.out.join(format!("{kind}.json"));
        save_bundle(&bundle, &path)?;
        logging::info(format!("trained {kind} on {} samples", train.len()));
        println!("wrote {}", path.display());
    }
    Ok(())
}
