//! Lasso regression by cyclic coordinate descent with soft thresholding.
//!
//! Objective on internally standardized features:
//!
//! ```text
//! (1/2N) * sum_i (y_i - w.x_i - b)^2 + lambda * |w|_1
//! ```
//!
//! The intercept is unpenalized; with mean-zero columns it is simply the
//! target mean. Convergence: max coordinate change <= 1e-8 or 10^4
//! sweeps. Returned weights are re-expressed in original feature units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TrainingSet;

use super::linear::dot;
use super::standardize::fit_standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoModel {
    pub weights: [f64; 4],
    pub intercept: f64,
    pub lambda: f64,
}

impl LassoModel {
    pub fn predict(&self, x: &[f64; 4]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }
}

fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

const MAX_SWEEPS: usize = 10_000;
const TOLERANCE: f64 = 1e-8;

/// Coordinate descent on standardized data. Returns standardized-space
/// weights and the intercept (= mean of y).
fn descend(x: &[[f64; 4]], y: &[f64], lambda: f64) -> ([f64; 4], f64) {
    let n = x.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;

    // Column second moments (1/N) sum x_j^2; exactly 1 for standardized
    // columns, 0 for forced constant columns.
    let mut col_sq = [0.0f64; 4];
    for row in x {
        for j in 0..4 {
            col_sq[j] += row[j] * row[j];
        }
    }
    for c in &mut col_sq {
        *c /= n;
    }

    let mut weights = [0.0f64; 4];
    // Residuals for w = 0, b = y_mean.
    let mut residuals: Vec<f64> = y.iter().map(|&yi| yi - y_mean).collect();
    for _ in 0..MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..4 {
            if col_sq[j] == 0.0 {
                continue;
            }
            // rho = (1/N) X_j^T (r + w_j X_j): partial residual correlation.
            let mut rho = 0.0;
            for (row, r) in x.iter().zip(residuals.iter()) {
                rho += row[j] * r;
            }
            rho = rho / n + weights[j] * col_sq[j];
            let updated = soft_threshold(rho, lambda) / col_sq[j];
            let delta = updated - weights[j];
            if delta != 0.0 {
                for (row, r) in x.iter().zip(residuals.iter_mut()) {
                    *r -= delta * row[j];
                }
                weights[j] = updated;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change <= TOLERANCE {
            break;
        }
    }
    (weights, y_mean)
}

/// Fit the lasso at a fixed penalty.
pub fn fit_lasso(train: &TrainingSet, lambda: f64) -> Result<LassoModel> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let rows = train.feature_rows();
    let y = train.targets()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "lasso needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let standardizer = fit_standardizer(&rows)?;
    let x = standardizer.apply_all(&rows);
    let (w_std, b_std) = descend(&x, &y, lambda);

    let mut weights = [0.0; 4];
    let mut intercept = b_std;
    for j in 0..4 {
        weights[j] = w_std[j] / standardizer.stddevs[j];
        intercept -= w_std[j] * standardizer.means[j] / standardizer.stddevs[j];
    }
    Ok(LassoModel {
        weights,
        intercept,
        lambda,
    })
}

/// Smallest penalty that zeroes every weight: max_j |X_j^T (y - mean y)| / N
/// on standardized columns.
pub fn lambda_max(train: &TrainingSet) -> Result<f64> {
    let rows = train.feature_rows();
    let y = train.targets()?;
    if rows.is_empty() {
        return Err(Error::InsufficientData("empty training set".to_string()));
    }
    let standardizer = fit_standardizer(&rows)?;
    let x = standardizer.apply_all(&rows);
    let n = x.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut max = 0.0f64;
    for j in 0..4 {
        let mut corr = 0.0;
        for (row, &yi) in x.iter().zip(y.iter()) {
            corr += row[j] * (yi - y_mean);
        }
        max = max.max((corr / n).abs());
    }
    Ok(max)
}

/// The cross-validation grid: 13 log-spaced points over [1e-4, 1e1].
pub fn lambda_grid() -> Vec<f64> {
    (0..13)
        .map(|i| 10f64.powf(-4.0 + 5.0 * i as f64 / 12.0))
        .collect()
}

/// Pick lambda by 5-fold cross-validation over the default grid and
/// refit on the full data. Folds are assigned round-robin by sample
/// index, so the result is deterministic. Selection uses the
/// one-standard-error rule: the largest lambda whose mean CV MSE stays
/// within one standard error of the minimum, which keeps the sparser
/// model when the data cannot tell the difference.
pub fn fit_lasso_cv(train: &TrainingSet) -> Result<LassoModel> {
    let n = train.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "lasso needs at least 2 samples, got {n}"
        )));
    }
    let folds = 5.min(n);
    // (lambda, mean CV MSE, standard error of the fold MSEs)
    let mut stats: Vec<(f64, f64, f64)> = Vec::new();
    for &lambda in &lambda_grid() {
        let mut fold_mse = Vec::new();
        for fold in 0..folds {
            let fit_samples: Vec<_> = train
                .samples
                .iter()
                .enumerate()
                .filter(|(i, _)| i % folds != fold)
                .map(|(_, s)| s.clone())
                .collect();
            let held: Vec<_> = train
                .samples
                .iter()
                .enumerate()
                .filter(|(i, _)| i % folds == fold)
                .map(|(_, s)| s.clone())
                .collect();
            if fit_samples.len() < 2 || held.is_empty() {
                continue;
            }
            let model = fit_lasso(&TrainingSet::new(fit_samples), lambda)?;
            let sq: f64 = held
                .iter()
                .map(|s| {
                    let err = model.predict(&s.features.as_array()) - s.target.unwrap();
                    err * err
                })
                .sum();
            fold_mse.push(sq / held.len() as f64);
        }
        if fold_mse.is_empty() {
            continue;
        }
        let k = fold_mse.len() as f64;
        let mean = fold_mse.iter().sum::<f64>() / k;
        let var = fold_mse.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        stats.push((lambda, mean, (var / k).sqrt()));
    }
    if stats.is_empty() {
        return fit_lasso(train, 0.0);
    }
    let (_, best_mse, best_se) = stats
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY, 0.0), |acc, s| if s.1 < acc.1 { s } else { acc });
    let threshold = best_mse + best_se;
    let lambda = stats
        .iter()
        .filter(|s| s.1 <= threshold)
        .map(|s| s.0)
        .fold(0.0f64, f64::max);
    fit_lasso(train, lambda)
}
