//! Ordinary least squares via the normal equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TrainingSet;

use super::standardize::fit_standardizer;

/// Linear predictor in original (unstandardized) feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    pub weights: [f64; 4],
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64; 4]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }
}

pub(super) fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Solve a small symmetric positive (semi-)definite system in place by
/// Gaussian elimination with partial pivoting. Returns None when a
/// pivot falls below `min_pivot` (use a relative threshold to detect
/// numerical rank deficiency; ridge-jittered systems pass 0.0 since
/// their tiny diagonal entries are honest pivots).
pub(super) fn solve_dense(
    mut a: Vec<Vec<f64>>,
    mut b: Vec<f64>,
    min_pivot: f64,
) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() <= min_pivot {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Fit OLS by normal equations on standardized features, re-expressing
/// the solution in original units. A ridge jitter of 1e-10 is added to
/// the feature diagonal when the unjittered system is singular
/// (duplicate or constant columns).
pub fn fit_ols(train: &TrainingSet) -> Result<LinearModel> {
    let rows = train.feature_rows();
    let y = train.targets()?;
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "OLS needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let standardizer = fit_standardizer(&rows)?;
    let x = standardizer.apply_all(&rows);

    // Center the targets so degenerate feature directions see an exactly
    // zero right-hand side instead of float dust that ridge jitter would
    // amplify.
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;

    // Normal equations over [features | intercept].
    let dim = 5;
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut aty = vec![0.0; dim];
    for (row, &target) in x.iter().zip(y.iter()) {
        let aug = [row[0], row[1], row[2], row[3], 1.0];
        for i in 0..dim {
            for j in 0..dim {
                ata[i][j] += aug[i] * aug[j];
            }
            aty[i] += aug[i] * (target - y_mean);
        }
    }
    let scale = ata
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let solution = match solve_dense(ata.clone(), aty.clone(), 1e-9 * scale) {
        Some(s) => s,
        None => {
            let mut jittered = ata;
            for (i, row) in jittered.iter_mut().enumerate().take(4) {
                row[i] += 1e-10;
            }
            solve_dense(jittered, aty, 0.0).ok_or_else(|| {
                Error::InvalidArgument("normal equations singular even with ridge jitter".into())
            })?
        }
    };

    // Back to original units: w_orig = w_std / sd, and the intercept
    // regains the target mean removed before the solve.
    let mut weights = [0.0; 4];
    let mut intercept = solution[4] + y_mean;
    for i in 0..4 {
        weights[i] = solution[i] / standardizer.stddevs[i];
        intercept -= solution[i] * standardizer.means[i] / standardizer.stddevs[i];
    }
    Ok(LinearModel { weights, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    use super::super::set_from;

    #[test]
    fn two_point_line_is_exact() {
        let train = set_from(&[([0.0, 0.0, 0.0, 0.0], 1.0), ([1.0, 0.0, 0.0, 0.0], 3.0)]);
        let model = fit_ols(&train).unwrap();
        assert!((model.weights[0] - 2.0).abs() < 1e-9, "{model:?}");
        assert!((model.intercept - 1.0).abs() < 1e-9, "{model:?}");
    }

    #[test]
    fn constant_target_gives_zero_weights() {
        let train = set_from(&[
            ([1.0, 0.1, 0.0, 0.2], 5.0),
            ([4.0, 0.3, 0.1, 0.0], 5.0),
            ([2.0, 0.6, 0.4, 0.5], 5.0),
        ]);
        let model = fit_ols(&train).unwrap();
        for w in model.weights {
            assert!(w.abs() < 1e-9, "{model:?}");
        }
        assert!((model.intercept - 5.0).abs() < 1e-9);
    }

    #[test]
    fn random_problem_satisfies_stationarity() {
        // The residual gradient X^T r (including the intercept column)
        // vanishes at the least-squares solution.
        let mut rng = Rng::new(17);
        let rows: Vec<([f64; 4], f64)> = (0..50)
            .map(|_| {
                let x = [
                    rng.range_f64(0.0, 40.0).floor(),
                    rng.range_f64(0.0, 1.0),
                    rng.range_f64(0.0, 1.0),
                    rng.range_f64(0.0, 1.0),
                ];
                let y = 1.5 * x[0] + 8.0 * x[1] - 3.0 * x[2] + 0.5 * x[3] + 2.0
                    + rng.range_f64(-1.0, 1.0);
                (x, y)
            })
            .collect();
        let train = set_from(&rows);
        let model = fit_ols(&train).unwrap();

        let mut grad = [0.0f64; 5];
        for (x, y) in &rows {
            let r = model.predict(x) - y;
            for i in 0..4 {
                grad[i] += x[i] * r;
            }
            grad[4] += r;
        }
        let max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        assert!(max <= 1e-8, "stationarity violated: {max}");
    }

    #[test]
    fn duplicate_columns_solved_with_jitter() {
        // x2 duplicates x1's values; unjittered normal equations are
        // singular but the fit must still reproduce the targets.
        let rows: Vec<([f64; 4], f64)> = (0..10)
            .map(|i| {
                let v = i as f64;
                ([v, v, 0.0, 0.0], 3.0 * v + 1.0)
            })
            .collect();
        let model = fit_ols(&set_from(&rows)).unwrap();
        for (x, y) in &rows {
            assert!((model.predict(x) - y).abs() < 1e-6);
        }
    }

    #[test]
    fn single_sample_is_rejected() {
        let train = set_from(&[([1.0, 0.0, 0.0, 0.0], 1.0)]);
        assert!(matches!(
            fit_ols(&train),
            Err(Error::InsufficientData(_))
        ));
    }
}
