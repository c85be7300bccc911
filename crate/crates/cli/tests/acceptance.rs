//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (run with `--nocapture` to see them).
//!
//! 1. Published-table RCP reproduction (metric correctness).
//! 2. Regressor oracle equivalence (OLS/lasso/SVR/MLP).
//! 3. Geometry oracles (rasterization, clip conservation, centroid rule).
//! 4. End-to-end correction property on synthetic suites.
//! 5. Determinism of `fit` and `synth` artifacts.
//! 6. Exhaustive tiling partition and reassembly.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mound_core::annotations::{
    clip_to_patch, rasterize_polygon, AnnotatedObject, AnnotationSet, ObjectClass,
};
use mound_core::detect::MissModel;
use mound_core::evaluate::{block_count, rcp};
use mound_core::features::{build_dataset, FeatureVector, PatchSample, TrainingSet};
use mound_core::geometry::{point_in_polygon, signed_area, Point};
use mound_core::raster::{build_grid, extract_patch, patch_bounds, PatchBounds, Raster};
use mound_core::regress::{
    fit_lasso, fit_mlp, fit_ols, fit_standardizer, fit_svr, lambda_max, select_best, train_all,
    Hyperparameters, ModelKind, SvrKernel, SvrModel,
};
use mound_core::rng::{derive_seed, Rng};
use mound_core::synth::{generate_suite, SynthParams};

/// Published results table: (block, ground truth, local, linear, svr,
/// lasso, mlp) counts and the printed local RCP percent.
const TABLE: [(&str, u64, u64, u64, u64, u64, u64, f64); 18] = [
    ("Block 01", 16450, 14458, 15820, 15180, 15504, 15828, 0.88),
    ("Block 02", 2650, 2609, 2816, 2760, 2851, 2780, 0.98),
    ("Block 03", 750, 712, 724, 737, 771, 728, 0.95),
    ("Block 04", 800, 784, 851, 844, 891, 837, 0.98),
    ("Block 05", 2350, 2233, 2495, 2436, 2562, 2462, 0.95),
    ("Block 06", 1700, 1513, 1623, 1600, 1683, 1621, 0.89),
    ("Block 07", 2050, 1853, 1868, 1879, 1933, 1864, 0.90),
    ("Block 08", 3950, 3443, 3676, 3571, 3649, 3629, 0.87),
    ("Block 09", 6847, 6632, 7041, 6915, 7091, 6923, 0.97),
    ("Block 10", 30200, 28301, 28973, 29145, 30107, 28733, 0.94),
    ("Block 11", 2950, 2742, 2778, 2797, 2894, 2765, 0.93),
    // Block 12's linear count (2765) is the table's printed value; its
    // per-cell RCP is internally inconsistent and excluded from checks,
    // but the printed overall linear sum (101515) includes it.
    ("Block 12", 25450, 24251, 2765, 25447, 25994, 25848, 0.95),
    ("Block 13", 7400, 6658, 7825, 7551, 8079, 7824, 0.90),
    ("Block 14", 5250, 5009, 5620, 5468, 5751, 5563, 0.95),
    ("Block 15", 3557, 3424, 3636, 3653, 3842, 3643, 0.96),
    ("Block 16", 5150, 4320, 5362, 5032, 5418, 5331, 0.84),
    ("Block 17", 4900, 4759, 5164, 5025, 5236, 5128, 0.97),
    ("Block 18", 2650, 2267, 2478, 2492, 2670, 2471, 0.86),
];

#[test]
fn criterion_1_table_rcp_reproduction() {
    let start = Instant::now();

    for (name, gt, local, .., table_rcp) in TABLE {
        let computed = rcp(local as f64, gt as f64).unwrap();
        assert!(
            (computed - table_rcp).abs() <= 0.005,
            "{name}: local RCP {computed:.4} vs published {table_rcp}"
        );
    }
    // Named spot checks.
    assert!((rcp(14458.0, 16450.0).unwrap() - 0.88).abs() <= 0.005);
    assert!((rcp(4320.0, 5150.0).unwrap() - 0.84).abs() <= 0.005);
    assert!((rcp(2267.0, 2650.0).unwrap() - 0.86).abs() <= 0.005);

    // Overall rows from summed counts; the column sums must reproduce the
    // published totals exactly, which also pins the fixture transcription.
    let gt_total: u64 = TABLE.iter().map(|r| r.1).sum();
    let local_total: u64 = TABLE.iter().map(|r| r.2).sum();
    let linear_total: u64 = TABLE.iter().map(|r| r.3).sum();
    let svr_total: u64 = TABLE.iter().map(|r| r.4).sum();
    let lasso_total: u64 = TABLE.iter().map(|r| r.5).sum();
    let mlp_total: u64 = TABLE.iter().map(|r| r.6).sum();
    assert_eq!((local_total, gt_total), (115_968, 125_054));
    assert_eq!(
        (linear_total, svr_total, lasso_total, mlp_total),
        (101_515, 122_532, 126_926, 123_978)
    );
    let overall = [
        ("local", local_total, 0.93),
        ("linear", linear_total, 0.81),
        ("svr", svr_total, 0.98),
        ("lasso", lasso_total, 0.99),
        ("mlp", mlp_total, 0.99),
    ];
    for (name, total, expected) in overall {
        let computed = rcp(total as f64, gt_total as f64).unwrap();
        assert!(
            (computed - expected).abs() <= 0.005,
            "overall {name}: {computed:.4} vs {expected}"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: 18 local RCPs and 5 overall rows within ±0.005 ({elapsed:?})"
    );
}

fn training_fixture(seed: u64, n: usize) -> TrainingSet {
    let mut rng = Rng::new(seed);
    TrainingSet::new(
        (0..n)
            .map(|i| {
                let x = [
                    rng.range_f64(0.0, 40.0).floor(),
                    rng.range_f64(0.0, 1.0),
                    rng.range_f64(0.0, 1.0),
                    rng.range_f64(0.0, 1.0),
                ];
                let y = 1.5 * x[0] + 8.0 * x[1] - 3.0 * x[2] + 0.5 * x[3] + 2.0
                    + rng.range_f64(-1.0, 1.0);
                PatchSample {
                    block_id: "fx".to_string(),
                    row: i as u32,
                    col: 0,
                    features: FeatureVector {
                        mound_count: x[0] as u32,
                        tree_ratio: x[1],
                        water_ratio: x[2],
                        debris_ratio: x[3],
                    },
                    target: Some(y),
                }
            })
            .collect(),
    )
}

/// Reduced SVR dual objective in net coefficients.
fn dual_objective(beta: &[f64], x: &[[f64; 4]], y: &[f64], epsilon: f64, kernel: SvrKernel) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * beta[j] * kernel.eval(&x[i], &x[j]);
        }
    }
    0.5 * quad + epsilon * beta.iter().map(|b| b.abs()).sum::<f64>()
        - beta.iter().zip(y.iter()).map(|(b, yi)| b * yi).sum::<f64>()
}

/// Brute-force shrinking-grid minimizer over the equality-constrained
/// box, refined below 1e-3 spacing.
fn brute_force_dual(x: &[[f64; 4]], y: &[f64], c: f64, epsilon: f64, kernel: SvrKernel) -> f64 {
    let free = x.len() - 1;
    let mut center = vec![0.0f64; free];
    let mut half_range = c;
    let steps = 10i64;
    let mut best_value = f64::INFINITY;
    while half_range / steps as f64 > 2.5e-4 {
        let spacing = half_range / steps as f64;
        let mut best_point = center.clone();
        let mut indices = vec![-steps; free];
        'grid: loop {
            let mut beta = vec![0.0f64; free + 1];
            let mut sum = 0.0;
            for (k, &idx) in indices.iter().enumerate() {
                let val = (center[k] + idx as f64 * spacing).clamp(-c, c);
                beta[k] = val;
                sum += val;
            }
            beta[free] = -sum;
            if beta[free].abs() <= c {
                let value = dual_objective(&beta, x, y, epsilon, kernel);
                if value < best_value {
                    best_value = value;
                    best_point = beta[..free].to_vec();
                }
            }
            for k in 0..free {
                indices[k] += 1;
                if indices[k] <= steps {
                    continue 'grid;
                }
                indices[k] = -steps;
            }
            break;
        }
        center = best_point;
        half_range = spacing * 2.5;
    }
    best_value
}

fn svr_achieved_dual(model: &SvrModel, x_std: &[[f64; 4]], y: &[f64]) -> f64 {
    let mut beta = vec![0.0f64; x_std.len()];
    for (sv, &coeff) in model.support_vectors.iter().zip(model.dual_coeffs.iter()) {
        let p = x_std
            .iter()
            .position(|row| row == sv)
            .expect("support vector matches a training row");
        beta[p] += coeff;
    }
    dual_objective(&beta, x_std, y, model.epsilon, model.kernel)
}

#[test]
fn criterion_2_regressor_oracle_equivalence() {
    let start = Instant::now();

    // OLS stationarity on a random 50x4 problem.
    let train = training_fixture(17, 50);
    let ols = fit_ols(&train).unwrap();
    let mut grad = [0.0f64; 5];
    for s in &train.samples {
        let x = s.features.as_array();
        let r = ols.predict(&x) - s.target.unwrap();
        for i in 0..4 {
            grad[i] += x[i] * r;
        }
        grad[4] += r;
    }
    let stationarity = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    assert!(stationarity <= 1e-8, "OLS stationarity {stationarity}");

    // Lasso at lambda = 0 reproduces OLS; at lambda_max all weights die.
    let lasso0 = fit_lasso(&train, 0.0).unwrap();
    for j in 0..4 {
        assert!(
            (lasso0.weights[j] - ols.weights[j]).abs() <= 1e-6,
            "lasso(0) w{j} {} vs OLS {}",
            lasso0.weights[j],
            ols.weights[j]
        );
    }
    assert!((lasso0.intercept - ols.intercept).abs() <= 1e-6);
    let lmax = lambda_max(&train).unwrap();
    let dead = fit_lasso(&train, lmax).unwrap();
    assert_eq!(dead.weights, [0.0; 4], "lambda_max must zero all weights");

    // SVR dual objective vs brute-force QP on fixtures up to 6 samples.
    let fixtures: Vec<(Vec<([f64; 4], f64)>, f64, f64, SvrKernel)> = vec![
        (
            vec![
                ([0.0, 0.0, 0.0, 0.0], 0.5),
                ([1.0, 0.0, 0.0, 0.0], 2.3),
                ([2.0, 0.0, 0.0, 0.0], 4.1),
                ([3.0, 0.0, 0.0, 0.0], 6.6),
            ],
            1.0,
            0.2,
            SvrKernel::Linear,
        ),
        (
            vec![
                ([0.0, 0.1, 0.6, 0.0], 1.0),
                ([2.0, 0.7, 0.2, 0.1], 5.0),
                ([4.0, 0.3, 0.9, 0.8], 2.5),
            ],
            2.0,
            0.1,
            SvrKernel::Rbf { gamma: 0.5 },
        ),
        (
            vec![
                ([0.0, 0.3, 0.1, 0.6], 1.2),
                ([1.0, 0.8, 0.5, 0.2], 3.0),
                ([2.0, 0.1, 0.9, 0.4], 3.9),
                ([3.0, 0.6, 0.2, 0.9], 6.2),
                ([4.0, 0.4, 0.7, 0.1], 8.4),
            ],
            1.5,
            0.3,
            SvrKernel::Rbf { gamma: 0.25 },
        ),
    ];
    for (idx, (rows, c, epsilon, kernel)) in fixtures.iter().enumerate() {
        let train = TrainingSet::new(
            rows.iter()
                .enumerate()
                .map(|(i, (x, y))| PatchSample {
                    block_id: "svr".to_string(),
                    row: i as u32,
                    col: 0,
                    features: FeatureVector {
                        mound_count: x[0] as u32,
                        tree_ratio: x[1],
                        water_ratio: x[2],
                        debris_ratio: x[3],
                    },
                    target: Some(*y),
                })
                .collect(),
        );
        let (model, standardizer) = fit_svr(&train, *c, *epsilon, *kernel).unwrap();
        let x_std = standardizer.apply_all(&train.feature_rows());
        let y = train.targets().unwrap();
        let achieved = svr_achieved_dual(&model, &x_std, &y);
        let reference = brute_force_dual(&x_std, &y, *c, *epsilon, *kernel);
        assert!(
            (achieved - reference).abs() <= 1e-3,
            "fixture {idx}: dual {achieved} vs brute force {reference}"
        );
    }

    // MLP analytic gradients vs central finite differences.
    let train = training_fixture(3, 8);
    let standardizer = fit_standardizer(&train.feature_rows()).unwrap();
    let xs = standardizer.apply_all(&train.feature_rows());
    let ys = train.targets().unwrap();
    let (model, _) = fit_mlp(&train, &[6, 4], 0.01, 0, 11).unwrap();
    let (grad_w, grad_b) = model.gradients(&xs, &ys);
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    for l in 0..model.weights.len() {
        for k in 0..model.weights[l].len() {
            let mut plus = model.clone();
            plus.weights[l][k] += h;
            let mut minus = model.clone();
            minus.weights[l][k] -= h;
            let numeric = (plus.loss(&xs, &ys) - minus.loss(&xs, &ys)) / (2.0 * h);
            let rel = (numeric - grad_w[l][k]).abs()
                / numeric.abs().max(grad_w[l][k].abs()).max(1e-8);
            worst_rel = worst_rel.max(rel);
        }
        for k in 0..model.biases[l].len() {
            let mut plus = model.clone();
            plus.biases[l][k] += h;
            let mut minus = model.clone();
            minus.biases[l][k] -= h;
            let numeric = (plus.loss(&xs, &ys) - minus.loss(&xs, &ys)) / (2.0 * h);
            let rel = (numeric - grad_b[l][k]).abs()
                / numeric.abs().max(grad_b[l][k].abs()).max(1e-8);
            worst_rel = worst_rel.max(rel);
        }
    }
    assert!(worst_rel <= 1e-4, "MLP gradient relative error {worst_rel}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    println!(
        "criterion 2 PASS: OLS stationarity {stationarity:.2e}, lasso oracle ok, \
         3 SVR duals within 1e-3, MLP gradients within {worst_rel:.2e} ({elapsed:?})"
    );
}

fn convex_fixture(rng: &mut Rng, extent: f64, r_min: f64, r_max: f64) -> Vec<Point> {
    let r = rng.range_f64(r_min, r_max);
    let cx = rng.range_f64(r + 0.5, extent - r - 0.5);
    let cy = rng.range_f64(r + 0.5, extent - r - 0.5);
    let n = 6 + rng.range_u32(6) as usize;
    let offset = rng.range_f64(0.0, std::f64::consts::TAU);
    (0..n)
        .map(|i| {
            let a = offset + i as f64 / n as f64 * std::f64::consts::TAU;
            [cx + r * a.cos(), cy + r * a.sin()]
        })
        .collect()
}

#[test]
fn criterion_3_geometry_oracles() {
    let start = Instant::now();

    // Rasterized area vs Monte-Carlo on 20 convex fixtures.
    let bounds = PatchBounds {
        x0: 0,
        y0: 0,
        width: 16,
        height: 16,
        row: 0,
        col: 0,
    };
    let mut rng = Rng::new(116);
    let mut worst_area = 0.0f64;
    for _ in 0..20 {
        let poly = convex_fixture(&mut rng, 16.0, 2.5, 5.0);
        let bits = rasterize_polygon(&poly, &bounds).count_set() as f64;
        let mut mc = Rng::new(116 * 77 + 5);
        let hits = (0..100_000)
            .filter(|_| point_in_polygon([mc.range_f64(0.0, 16.0), mc.range_f64(0.0, 16.0)], &poly))
            .count();
        let estimate = hits as f64 / 100_000.0 * 256.0;
        let err = (bits - estimate).abs();
        worst_area = worst_area.max(err);
        assert!(err <= 2.0, "rasterized {bits} vs Monte-Carlo {estimate}");
    }

    // Clip conservation: exact across 1000 fuzzed polygons on a 4x4
    // patch grid.
    let mut rng = Rng::new(2025);
    let image = PatchBounds {
        x0: 0,
        y0: 0,
        width: 64,
        height: 64,
        row: 0,
        col: 0,
    };
    let grid = build_grid(64, 64, 16, true).unwrap();
    for i in 0..1000 {
        let poly = convex_fixture(&mut rng, 64.0, 3.0, 16.0);
        let set = AnnotationSet::new(
            "c",
            64,
            64,
            vec![AnnotatedObject::new(ObjectClass::Tree, poly, None).unwrap()],
        );
        let whole = rasterize_polygon(&set.objects[0].polygon, &image).count_set();
        let mut parts = 0;
        for b in grid.iter() {
            let clipped = clip_to_patch(&set, &b).unwrap();
            for obj in &clipped.objects {
                parts += rasterize_polygon(&obj.polygon, &b).count_set();
            }
        }
        assert_eq!(parts, whole, "polygon {i}: {parts} vs {whole}");
    }

    // Centroid rule: every straddling mound counts in exactly one patch.
    let mut rng = Rng::new(4096);
    for i in 0..1000 {
        let poly = convex_fixture(&mut rng, 64.0, 3.0, 16.0);
        let centroid_ok = signed_area(&poly).abs() > 1e-9;
        assert!(centroid_ok, "fixture {i} degenerate");
        let set = AnnotationSet::new(
            "c",
            64,
            64,
            vec![AnnotatedObject::new(ObjectClass::Mound, poly, None).unwrap()],
        );
        let mut counted = 0;
        for b in grid.iter() {
            counted += clip_to_patch(&set, &b).unwrap().counted_mounds();
        }
        assert_eq!(counted, 1, "fixture {i} counted {counted} times");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 3 PASS: 20 areas within ±2 px (worst {worst_area:.3}), \
         1000 clip conservations exact, 1000 centroid assignments unique ({elapsed:?})"
    );
}

#[test]
fn criterion_4_end_to_end_correction() {
    let start = Instant::now();

    let template = SynthParams {
        block_id: "s".to_string(),
        tree_coverage: 0.20,
        water_coverage: 0.12,
        debris_coverage: 0.14,
        miss_model: MissModel {
            intercept: 0.15,
            tree: 0.9,
            water: 1.1,
            debris: 0.7,
        },
        ..SynthParams::default()
    };
    let hyper = Hyperparameters::default();
    let grid = build_grid(
        template.block_width,
        template.block_height,
        template.patch_size,
        true,
    )
    .unwrap();

    let mut favored_picks = 0;
    for suite_seed in [1u64, 2, 3, 4, 5] {
        let suite = generate_suite(18, &template, suite_seed).unwrap();

        // Train on the first block; hold one patch in four out for model
        // selection (all selection data comes from the training block).
        let full = build_dataset(
            &suite[0].ground_truth,
            &suite[0].detections,
            &grid,
            &suite[0].params.block_id,
        )
        .unwrap();
        let (fit_samples, val_samples): (Vec<_>, Vec<_>) = full
            .samples
            .iter()
            .cloned()
            .partition(|s| (s.row + s.col) % 4 != 3);
        let bundles = train_all(
            &ModelKind::ALL,
            &TrainingSet::new(fit_samples),
            &hyper,
            derive_seed(suite_seed, "fit", 0),
            "train-block",
        )
        .unwrap();
        let selection = select_best(&bundles, &TrainingSet::new(val_samples)).unwrap();
        let selected = &bundles[selection.best_index];
        if matches!(selected.kind(), ModelKind::Svr | ModelKind::Lasso) {
            favored_picks += 1;
        }

        // Evaluate the selected model on the 17 held-out blocks.
        let mut mean_local = 0.0;
        let mut mean_corrected = 0.0;
        for block in &suite[1..] {
            let data = build_dataset(
                &block.ground_truth,
                &block.detections,
                &grid,
                &block.params.block_id,
            )
            .unwrap();
            let gt = block.gt_count as f64;
            let local: f64 = data
                .samples
                .iter()
                .map(|s| s.features.mound_count as f64)
                .sum();
            let preds: Vec<f64> = data.samples.iter().map(|s| selected.predict(&s.features)).collect();
            mean_local += rcp(local, gt).unwrap() / 17.0;
            mean_corrected += rcp(block_count(&preds).unwrap() as f64, gt).unwrap() / 17.0;
        }
        assert!(
            mean_corrected > mean_local,
            "seed {suite_seed}: corrected {mean_corrected:.3} not above local {mean_local:.3} \
             (selected {})",
            selected.kind()
        );
        println!(
            "  seed {suite_seed}: local {mean_local:.3} -> corrected {mean_corrected:.3} \
             (selected {})",
            selected.kind()
        );
    }
    assert!(
        favored_picks >= 3,
        "SVR or lasso selected only {favored_picks}/5 times"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}");
    println!(
        "criterion 4 PASS: corrected RCP above local on 5/5 seeds, \
         SVR/lasso selected {favored_picks}/5 ({elapsed:?})"
    );
}

#[test]
fn criterion_5_deterministic_artifacts() {
    let start = Instant::now();
    let mound = env!("CARGO_BIN_EXE_mound");
    let dir = tempfile::tempdir().unwrap();

    let run = |args: &[&str]| {
        let output = Command::new(mound).args(args).output().unwrap();
        assert!(
            output.status.success(),
            "mound {args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };
    let snapshot = |path: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|f| {
                (
                    f.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&f).unwrap(),
                )
            })
            .collect()
    };

    let synth_a = dir.path().join("synth_a");
    let synth_b = dir.path().join("synth_b");
    for out in [&synth_a, &synth_b] {
        run(&["synth", "--out", out.to_str().unwrap(), "--n", "2", "--seed", "9"]);
    }
    let a = snapshot(&synth_a);
    let b = snapshot(&synth_b);
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(b.iter()) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }
    let synth_files = a.len();

    let csv = dir.path().join("features.csv");
    run(&[
        "features",
        "--ground-truth",
        synth_a.join("block00_truth.json").to_str().unwrap(),
        "--detections",
        synth_a.join("block00_detections.json").to_str().unwrap(),
        "--grid",
        synth_a.join("block00_grid.json").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    let fit_a = dir.path().join("fit_a");
    let fit_b = dir.path().join("fit_b");
    for out in [&fit_a, &fit_b] {
        run(&[
            "fit",
            csv.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "4",
        ]);
    }
    let a = snapshot(&fit_a);
    let b = snapshot(&fit_b);
    assert_eq!(a.len(), 4);
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(b.iter()) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }

    let elapsed = start.elapsed();
    println!(
        "criterion 5 PASS: {synth_files} synth files and 4 bundles byte-identical \
         across reruns ({elapsed:?})"
    );
}

#[test]
fn criterion_6_tiling_partition_exhaustive() {
    let start = Instant::now();

    let mut grids_checked = 0u64;
    for width in 1..=64u32 {
        for height in 1..=64u32 {
            // Deterministic pixel pattern.
            let pixels: Vec<u8> = (0..width as usize * height as usize)
                .map(|i| (i * 31 % 251) as u8)
                .collect();
            let source = Raster::new(width, height, 1, pixels).unwrap();
            for &patch in &[1u32, 3, 7, 8, 64] {
                let grid = build_grid(width, height, patch, true).unwrap();
                // Partition: every pixel maps to exactly one patch by
                // floor division, and that patch's bounds contain it.
                for y in 0..height {
                    for x in 0..width {
                        let (row, col) = (y / patch, x / patch);
                        let b = patch_bounds(&grid, row, col).unwrap();
                        assert!(
                            x >= b.x0 && x < b.x0 + b.width && y >= b.y0 && y < b.y0 + b.height
                        );
                    }
                }
                // Reassembly round-trip.
                let mut rebuilt = Raster::filled(width, height, 1, 0).unwrap();
                for b in grid.iter() {
                    let piece = extract_patch(&source, &b).unwrap();
                    for py in 0..b.height {
                        for px in 0..b.width {
                            rebuilt.set_pixel(b.x0 + px, b.y0 + py, &[piece.sample(px, py, 0)]);
                        }
                    }
                }
                assert_eq!(rebuilt, source, "{width}x{height} patch {patch}");
                grids_checked += 1;
            }
        }
    }

    let elapsed = start.elapsed();
    println!(
        "criterion 6 PASS: {grids_checked} grids partition and reassemble bit-exactly \
         ({elapsed:?})"
    );
}
