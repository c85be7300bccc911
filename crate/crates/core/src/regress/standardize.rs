//! Feature standardization (zero mean, unit variance per column).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column mean and population standard deviation of the training
/// features. Zero-variance columns get a stddev of 1 and a `forced` flag
/// so the transform stays invertible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizer {
    pub means: [f64; 4],
    pub stddevs: [f64; 4],
    pub forced: [bool; 4],
}

impl Standardizer {
    /// No-op transform, used for models whose weights are expressed in
    /// original feature units.
    pub fn identity() -> Self {
        Standardizer {
            means: [0.0; 4],
            stddevs: [1.0; 4],
            forced: [false; 4],
        }
    }

    pub fn apply(&self, x: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (x[i] - self.means[i]) / self.stddevs[i];
        }
        out
    }

    pub fn apply_all(&self, rows: &[[f64; 4]]) -> Vec<[f64; 4]> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// Fit a standardizer on a feature matrix (population stddev).
pub fn fit_standardizer(rows: &[[f64; 4]]) -> Result<Standardizer> {
    if rows.is_empty() {
        return Err(Error::InsufficientData(
            "cannot fit a standardizer on an empty matrix".to_string(),
        ));
    }
    let n = rows.len() as f64;
    let mut means = [0.0; 4];
    for row in rows {
        for i in 0..4 {
            means[i] += row[i];
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stddevs = [0.0; 4];
    for row in rows {
        for i in 0..4 {
            stddevs[i] += (row[i] - means[i]).powi(2);
        }
    }
    let mut forced = [false; 4];
    for i in 0..4 {
        stddevs[i] = (stddevs[i] / n).sqrt();
        if stddevs[i] <= 0.0 {
            stddevs[i] = 1.0;
            forced[i] = true;
        }
    }
    Ok(Standardizer {
        means,
        stddevs,
        forced,
    })
}
