//! Block-level aggregation and the relative counting precision metric.
//!
//! Per-patch predictions stay real-valued; rounding happens once per
//! block (half-up) when the total is formed. RCP is `1 - |p - g| / g`,
//! reported unclamped (negative when the error exceeds the ground
//! truth). A report's overall row is computed from summed counts, never
//! from averaging per-row RCPs; the average-precision row is the
//! unweighted mean of unrounded per-row RCPs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Sum per-patch predictions into a block count, rounding half-up.
pub fn block_count(patch_predictions: &[f64]) -> Result<u64> {
    let mut sum = 0.0;
    for &p in patch_predictions {
        if p.is_nan() {
            return Err(Error::InvalidArgument(
                "NaN patch prediction in block count".to_string(),
            ));
        }
        if p < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative patch prediction {p} in block count"
            )));
        }
        sum += p;
    }
    Ok((sum + 0.5).floor() as u64)
}

/// Relative counting precision: 1 - |predicted - ground_truth| / ground_truth.
pub fn rcp(predicted: f64, ground_truth: f64) -> Result<f64> {
    if !(ground_truth.is_finite() && ground_truth > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "RCP undefined for ground truth {ground_truth}"
        )));
    }
    if predicted.is_nan() {
        return Err(Error::InvalidArgument("NaN predicted count".to_string()));
    }
    Ok(1.0 - (predicted - ground_truth).abs() / ground_truth)
}

/// Integer-percent display: half-up rounding, with two decimals kept when
/// the rounded value reaches 99% (mirrors how near-perfect rows are
/// reported).
pub fn format_percent(rcp_value: f64) -> String {
    let pct = rcp_value * 100.0;
    let rounded = (pct + 0.5).floor();
    if rounded >= 99.0 {
        format!("{:.2}%", (pct * 100.0 + 0.5).floor() / 100.0)
    } else {
        format!("{rounded:.0}%")
    }
}

/// Input row for report building: counts only, metrics are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCounts {
    pub block_id: String,
    pub ground_truth: u64,
    pub local_count: u64,
    /// One corrected count per model column.
    pub model_counts: Vec<u64>,
}

/// One scored row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub block_id: String,
    pub ground_truth: u64,
    pub local_count: u64,
    pub local_rcp: f64,
    /// (corrected count, rcp) per model column.
    pub models: Vec<(u64, f64)>,
}

/// Table-style report over blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub model_names: Vec<String>,
    pub rows: Vec<BlockResult>,
    /// Computed from summed counts across all rows.
    pub overall: BlockResult,
    /// Unweighted mean of per-row RCPs: (local, then one per model).
    pub average_precision: Vec<f64>,
}

fn score_row(counts: &BlockCounts) -> Result<BlockResult> {
    let gt = counts.ground_truth as f64;
    let local_rcp = rcp(counts.local_count as f64, gt)?;
    let models = counts
        .model_counts
        .iter()
        .map(|&c| Ok((c, rcp(c as f64, gt)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockResult {
        block_id: counts.block_id.clone(),
        ground_truth: counts.ground_truth,
        local_count: counts.local_count,
        local_rcp,
        models,
    })
}

/// Build the report: per-row RCPs, an overall row from summed counts,
/// and unweighted average precision per column.
pub fn build_report(blocks: &[BlockCounts], model_names: &[String]) -> Result<Report> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument(
            "report needs at least one block".to_string(),
        ));
    }
    let mut seen = BTreeSet::new();
    for b in blocks {
        if !seen.insert(&b.block_id) {
            return Err(Error::Validation(format!(
                "duplicate block id {:?}",
                b.block_id
            )));
        }
        if b.model_counts.len() != model_names.len() {
            return Err(Error::InvalidArgument(format!(
                "block {:?} has {} model counts for {} model columns",
                b.block_id,
                b.model_counts.len(),
                model_names.len()
            )));
        }
    }
    let rows = blocks.iter().map(score_row).collect::<Result<Vec<_>>>()?;

    let mut totals = BlockCounts {
        block_id: "overall".to_string(),
        ground_truth: 0,
        local_count: 0,
        model_counts: vec![0; model_names.len()],
    };
    for b in blocks {
        totals.ground_truth += b.ground_truth;
        totals.local_count += b.local_count;
        for (t, &c) in totals.model_counts.iter_mut().zip(b.model_counts.iter()) {
            *t += c;
        }
    }
    let overall = score_row(&totals)?;

    let n = rows.len() as f64;
    let mut average_precision = vec![rows.iter().map(|r| r.local_rcp).sum::<f64>() / n];
    for col in 0..model_names.len() {
        average_precision.push(rows.iter().map(|r| r.models[col].1).sum::<f64>() / n);
    }

    Ok(Report {
        model_names: model_names.to_vec(),
        rows,
        overall,
        average_precision,
    })
}

impl Report {
    /// Aligned text table with percent columns.
    pub fn render_text(&self) -> String {
        let mut header = vec![
            "block".to_string(),
            "gt".to_string(),
            "local".to_string(),
            "local_rcp".to_string(),
        ];
        for name in &self.model_names {
            header.push(name.clone());
            header.push(format!("{name}_rcp"));
        }
        let mut table: Vec<Vec<String>> = vec![header];
        let mut any_negative = false;
        {
            let mut push_row = |row: &BlockResult| {
                let mut cells = vec![
                    row.block_id.clone(),
                    row.ground_truth.to_string(),
                    row.local_count.to_string(),
                    format_percent(row.local_rcp),
                ];
                any_negative |= row.local_rcp < 0.0;
                for &(count, r) in &row.models {
                    cells.push(count.to_string());
                    cells.push(format_percent(r));
                    any_negative |= r < 0.0;
                }
                table.push(cells);
            };
            for row in &self.rows {
                push_row(row);
            }
            push_row(&self.overall);
        }
        let mut avg = vec![
            "average_precision".to_string(),
            String::new(),
            String::new(),
            format_percent(self.average_precision[0]),
        ];
        for (i, _) in self.model_names.iter().enumerate() {
            avg.push(String::new());
            avg.push(format_percent(self.average_precision[i + 1]));
        }
        table.push(avg);

        let cols = table[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            for (c, cell) in row.iter().enumerate() {
                if c > 0 {
                    out.push_str("  ");
                }
                let _ = write!(out, "{cell:>width$}", width = widths[c]);
            }
            out.push('\n');
        }
        if any_negative {
            out.push_str("note: negative RCP marks error exceeding the ground truth\n");
        }
        out
    }

    /// CSV form; numeric RCPs at full precision so the file round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_id,ground_truth,local_count,local_rcp");
        for name in &self.model_names {
            let _ = write!(out, ",{name}_count,{name}_rcp");
        }
        out.push('\n');
        let push_row = |row: &BlockResult, out: &mut String| {
            let _ = write!(
                out,
                "{},{},{},{}",
                row.block_id, row.ground_truth, row.local_count, row.local_rcp
            );
            for &(count, r) in &row.models {
                let _ = write!(out, ",{count},{r}");
            }
            out.push('\n');
        };
        for row in &self.rows {
            push_row(row, &mut out);
        }
        push_row(&self.overall, &mut out);
        let _ = write!(out, "average_precision,,,{}", self.average_precision[0]);
        for v in &self.average_precision[1..] {
            let _ = write!(out, ",,{v}");
        }
        out.push('\n');
        out
    }

    /// Parse the CSV form back (inverse of `to_csv`).
    pub fn from_csv(text: &str) -> Result<Report> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("empty report CSV".to_string()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[..4] != ["block_id", "ground_truth", "local_count", "local_rcp"]
        {
            return Err(Error::Validation(format!(
                "unexpected report CSV header {header:?}"
            )));
        }
        let mut model_names = Vec::new();
        for pair in cols[4..].chunks(2) {
            match pair {
                [count_col, _rcp_col] => {
                    model_names.push(
                        count_col
                            .strip_suffix("_count")
                            .ok_or_else(|| {
                                Error::Validation(format!("bad model column {count_col:?}"))
                            })?
                            .to_string(),
                    );
                }
                _ => return Err(Error::Validation("odd model column count".to_string())),
            }
        }
        let mut rows = Vec::new();
        let mut overall = None;
        let mut average_precision = None;
        for (line_no, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let row_err = |msg: String| Error::Validation(format!("row {}: {msg}", line_no + 2));
            if fields.len() != 4 + 2 * model_names.len() {
                return Err(row_err(format!(
                    "expected {} fields",
                    4 + 2 * model_names.len()
                )));
            }
            if fields[0] == "average_precision" {
                let mut values = vec![fields[3]
                    .parse::<f64>()
                    .map_err(|e| row_err(e.to_string()))?];
                for pair in fields[4..].chunks(2) {
                    values.push(pair[1].parse::<f64>().map_err(|e| row_err(e.to_string()))?);
                }
                average_precision = Some(values);
                continue;
            }
            let mut models = Vec::new();
            for pair in fields[4..].chunks(2) {
                models.push((
                    pair[0].parse::<u64>().map_err(|e| row_err(e.to_string()))?,
                    pair[1].parse::<f64>().map_err(|e| row_err(e.to_string()))?,
                ));
            }
            let result = BlockResult {
                block_id: fields[0].to_string(),
                ground_truth: fields[1]
                    .parse()
                    .map_err(|e: std::num::ParseIntError| row_err(e.to_string()))?,
                local_count: fields[2]
                    .parse()
                    .map_err(|e: std::num::ParseIntError| row_err(e.to_string()))?,
                local_rcp: fields[3]
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| row_err(e.to_string()))?,
                models,
            };
            if result.block_id == "overall" {
                overall = Some(result);
            } else {
                rows.push(result);
            }
        }
        Ok(Report {
            model_names,
            rows,
            overall: overall
                .ok_or_else(|| Error::Validation("report CSV missing overall row".to_string()))?,
            average_precision: average_precision.ok_or_else(|| {
                Error::Validation("report CSV missing average_precision row".to_string())
            })?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_block_counts_zero() {
        assert_eq!(block_count(&[]).unwrap(), 0);
    }

    #[test]
    fn exact_sum_rounds_to_itself() {
        assert_eq!(block_count(&[3.0, 4.0, 5.0]).unwrap(), 12);
    }

    #[test]
    fn half_up_rounding_on_fractional_sum() {
        // 2.4 * 3 = 7.2 -> 7; half sums round up.
        assert_eq!(block_count(&[2.4, 2.4, 2.4]).unwrap(), 7);
        assert_eq!(block_count(&[2.5, 5.0]).unwrap(), 8);
    }

    #[test]
    fn nan_prediction_is_rejected() {
        assert!(block_count(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn rcp_matches_published_local_value() {
        let value = rcp(14458.0, 16450.0).unwrap();
        assert!((value - 0.8789).abs() < 5e-5, "{value}");
        assert_eq!(format_percent(value), "88%");
    }

    #[test]
    fn rcp_identity_and_symmetry() {
        assert_eq!(rcp(123.0, 123.0).unwrap(), 1.0);
        assert_eq!(rcp(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(rcp(200.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn rcp_zero_ground_truth_is_undefined() {
        assert!(matches!(rcp(5.0, 0.0), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn rcp_can_be_negative() {
        assert!(rcp(350.0, 100.0).unwrap() < 0.0);
    }

    proptest! {
        #[test]
        fn rcp_is_scale_invariant(p in 0.0f64..1e6, g in 1.0f64..1e6, k in 0.001f64..1000.0) {
            let a = rcp(p, g).unwrap();
            let b = rcp(k * p, k * g).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn rcp_is_one_iff_exact(p in 0.0f64..1e6, g in 1.0f64..1e6) {
            let value = rcp(p, g).unwrap();
            prop_assert_eq!(value == 1.0, p == g);
        }
    }

    fn table_row(id: &str, gt: u64, local: u64, models: &[u64]) -> BlockCounts {
        BlockCounts {
            block_id: id.to_string(),
            ground_truth: gt,
            local_count: local,
            model_counts: models.to_vec(),
        }
    }

    #[test]
    fn single_block_overall_equals_row() {
        let report =
            build_report(&[table_row("b1", 100, 90, &[95])], &["svr".to_string()]).unwrap();
        assert_eq!(report.overall.local_count, report.rows[0].local_count);
        assert_eq!(report.overall.models, report.rows[0].models);
    }

    #[test]
    fn overall_uses_summed_counts_not_mean_rcp() {
        // Two blocks engineered so the mean of RCPs differs from the
        // RCP of the sums.
        let report = build_report(
            &[
                table_row("b1", 100, 50, &[]),
                table_row("b2", 1000, 1000, &[]),
            ],
            &[],
        )
        .unwrap();
        let mean_rcp = (0.5 + 1.0) / 2.0;
        let overall_rcp = rcp(1050.0, 1100.0).unwrap();
        assert!((report.overall.local_rcp - overall_rcp).abs() < 1e-12);
        assert!((report.average_precision[0] - mean_rcp).abs() < 1e-12);
        assert!((overall_rcp - mean_rcp).abs() > 1e-3);
    }

    #[test]
    fn duplicate_block_ids_rejected() {
        let err = build_report(
            &[table_row("b1", 10, 9, &[]), table_row("b1", 20, 19, &[])],
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn malformed_report_rows_error_instead_of_panicking() {
        let report = build_report(&[table_row("b1", 100, 90, &[95])], &["m".to_string()]).unwrap();
        let csv = report.to_csv();
        // Truncate fields off the last data line.
        let mut broken: Vec<&str> = csv.lines().collect();
        let short = "average_precision,,";
        broken.pop();
        broken.push(short);
        let err = Report::from_csv(&broken.join("\n")).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(Report::from_csv("block_id,oops\n").is_err());
        assert!(Report::from_csv("").is_err());
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let report = build_report(
            &[
                table_row("b1", 16450, 14458, &[15820, 15180]),
                table_row("b2", 2650, 2609, &[2816, 2760]),
            ],
            &["linear".to_string(), "svr".to_string()],
        )
        .unwrap();
        let back = Report::from_csv(&report.to_csv()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn percent_formatting_keeps_two_decimals_near_perfect() {
        assert_eq!(format_percent(0.9999), "99.99%");
        assert_eq!(format_percent(0.997), "99.70%");
        assert_eq!(format_percent(0.94), "94%");
        assert_eq!(format_percent(0.945), "95%");
    }

    #[test]
    fn text_rendering_flags_negative_rcp() {
        let report = build_report(&[table_row("b1", 100, 350, &[])], &[]).unwrap();
        let text = report.render_text();
        assert!(text.contains("negative RCP"), "{text}");
    }
}
