use std::path::PathBuf;

use clap::Args;
use mound_core::evaluate::{build_report, BlockCounts};
use mound_core::{Error, Result};

use crate::config::PipelineConfig;

use super::read_to_string;

#[derive(Args)]
pub struct ReportArgs {
    /// Counts CSV: block_id,ground_truth,local_count,<model>...
    pub blocks: PathBuf,

    /// Write the scored report CSV here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn run(args: ReportArgs, _config: &PipelineConfig) -> Result<()> {
    let text = read_to_string(&args.blocks)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation("empty counts CSV".to_string()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[..3] != ["block_id", "ground_truth", "local_count"] {
        return Err(Error::Validation(format!(
            "counts CSV must start with block_id,ground_truth,local_count; got {header:?}"
        )));
    }
    let model_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();

    let mut blocks = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |msg: String| Error::Validation(format!("row {}: {msg}", line_no + 2));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(row_err(format!(
                "expected {} fields, got {}",
                cols.len(),
                fields.len()
            )));
        }
        let parse = |s: &str| s.parse::<u64>().map_err(|e| row_err(format!("{s:?}: {e}")));
        blocks.push(BlockCounts {
            block_id: fields[0].to_string(),
            ground_truth: parse(fields[1])?,
            local_count: parse(fields[2])?,
            model_counts: fields[3..]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<Vec<_>>>()?,
        });
    }

    let report = build_report(&blocks, &model_names)?;
    print!("{}", report.render_text());
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_csv()).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}
