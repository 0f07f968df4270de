use std::collections::HashSet;

use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest, ProptestConfig};
use proptest::strategy::Strategy as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rebalance_core::dataset::{read_csv, write_csv_to};
use rebalance_core::evaluation::{run_experiment, select_underrepresented};
use rebalance_core::prelude::*;
use rebalance_core::synth::Region;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn standardization_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_matrix(&mut rng, 300, 6);
    let d = Dataset::from_features(x.clone(), vec![0.0; 300]).unwrap();
    let params = fit_standardization(&d).unwrap();
    let back = params.inverse_transform(&params.transform(&x).unwrap()).unwrap();
    for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300) || (a - b).abs() < 1e-14);
    }
}

#[test]
fn files_round_trip_and_models_persist() {
    let dir = tempfile::tempdir().unwrap();
    let synth = generate(&SynthSpec { n: 120, ..SynthSpec::default() }).unwrap();
    let path = dir.path().join("data.csv");
    write_csv(&synth.dataset, &path).unwrap();
    let back = load_csv(&path, &IngestionConfig::for_written(&synth.dataset)).unwrap();
    assert_eq!(back, synth.dataset);

    let model = fit_ols(&back).unwrap();
    let model_path = dir.path().join("model.json");
    model.save(&model_path).unwrap();
    assert_eq!(LinearModel::load(&model_path).unwrap(), model);

    let missing = load_csv(dir.path().join("absent.csv"), &IngestionConfig::new("y")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }) && !missing.is_validation());
}

#[test]
fn ols_residuals_are_orthogonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_matrix(&mut rng, 150, 4);
    let y: Vec<f64> = x.rows_iter().map(|r| r[0] * 3.0 - r[3] + rng.random_range(-1.0..1.0)).collect();
    let d = Dataset::from_features(x.clone(), y.clone()).unwrap();
    let m = fit_ols(&d).unwrap();
    let pred = m.predict(&x).unwrap();
    let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, b)| a - b).collect();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(resid.iter().sum::<f64>().abs() <= 1e-8 * y_norm);
    for j in 0..4 {
        let dot: f64 = resid.iter().zip(x.column(j)).map(|(r, v)| r * v).sum();
        assert!(dot.abs() <= 1e-8 * y_norm);
    }
}

#[test]
fn pca_reconstruction_and_zero_mean_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 80, 5);
    for scaling in [PcaScaling::Center, PcaScaling::Standardize] {
        let m = fit_pca(&x, 5, scaling, FittedOn::Train).unwrap();
        let scores = m.project(&x).unwrap();
        let recon = m.reconstruct(&scores).unwrap();
        for i in 0..80 {
            for j in 0..5 {
                assert!((recon.get(i, j) - x.get(i, j)).abs() < 1e-8);
            }
        }
        for k in 0..5 {
            assert!(scores.column(k).iter().sum::<f64>().abs() / 80.0 < 1e-10);
        }
        let total: f64 = m.explained_variance_ratios.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(m.explained_variance_ratios.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn shell_rows_dominate_the_top_decile() {
    let synth = generate(&SynthSpec::default()).unwrap();
    let index = NeighborIndex::build(synth.dataset.features().clone()).unwrap();
    let scores = index.self_density_scores(5).unwrap();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].mean_knn_distance.total_cmp(&scores[a].mean_knn_distance));
    let top: HashSet<usize> = order[..scores.len() / 10].iter().copied().collect();
    let shell: Vec<usize> = (0..scores.len()).filter(|&i| synth.regions[i] == Region::Shell).collect();
    let inside = shell.iter().filter(|i| top.contains(i)).count();
    assert!(inside as f64 >= 0.9 * shell.len() as f64, "{inside}/{}", shell.len());
}

#[test]
fn pure_cluster_weights_are_near_uniform() {
    let synth = generate(&SynthSpec { n: 1000, cluster_fraction: 1.0, ..SynthSpec::default() }).unwrap();
    let index = NeighborIndex::build(synth.dataset.features().clone()).unwrap();
    let w = density_weights(&index.self_density_scores(100).unwrap()).unwrap();
    let max = w.iter().copied().fold(0.0, f64::max);
    // no row gets more than a few times its uniform share
    assert!(max < 4.0 / 1000.0, "{max}");
}

#[test]
fn underrepresented_subset_is_mostly_shell() {
    let synth = generate(&SynthSpec { n: 2000, cluster_fraction: 0.9, ..SynthSpec::benchmark() }).unwrap();
    let ids = select_underrepresented(&synth.dataset, 0.1, 100).unwrap();
    assert_eq!(ids.len(), 200);
    let shell = ids.iter().filter(|id| synth.regions[id.0 as usize] == Region::Shell).count();
    assert!(shell * 2 > ids.len(), "{shell}/{}", ids.len());
}

#[test]
fn experiment_is_reproducible() {
    let data = generate(&SynthSpec { n: 1200, ..SynthSpec::benchmark() }).unwrap().dataset;
    let (train, test) = train_test_split(&data, &SplitSpec::default()).unwrap();
    let plans: Vec<SamplingPlan> = [Strategy::OnePoint, Strategy::Density].iter().map(|&s| SamplingPlan::new(s, 0)).collect();
    let config = ExperimentConfig { iterations: 3, base_seed: 9, k_underrepresented: 50, ..Default::default() };
    let a = run_experiment(&train, &test, &plans, &config).unwrap();
    let b = run_experiment(&train, &test, &plans, &config).unwrap();
    assert_eq!(a, b);
    let base = a.baseline();
    assert!(base.reports.windows(2).all(|w| w[0].per_row == w[1].per_row));
    assert_eq!(base.overall_rmse.min, base.overall_rmse.max);
    for s in &a.strategies {
        for r in &s.reports {
            assert_eq!(r.underrepresented_count(), 24);
            let truth: Vec<f64> = r.per_row.iter().map(|p| p.truth).collect();
            let pred: Vec<f64> = r.per_row.iter().map(|p| p.prediction).collect();
            assert_eq!(r.overall_rmse, rmse(&truth, &pred).unwrap());
        }
    }
    let density = a.strategy("density").unwrap();
    let seeds: HashSet<u64> = density.reports.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 3);
    assert!(density.reports.iter().all(|r| r.sample_size == 96));
}

#[test]
fn experiment_rejects_overlapping_rows() {
    let data = generate(&SynthSpec { n: 300, ..SynthSpec::benchmark() }).unwrap().dataset;
    let config = ExperimentConfig { k_underrepresented: 10, ..Default::default() };
    let err = run_experiment(&data, &data, &[], &config).unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn experiment_errors_carry_context() {
    let data = generate(&SynthSpec { n: 300, ..SynthSpec::benchmark() }).unwrap().dataset;
    let (train, test) = train_test_split(&data, &SplitSpec::default()).unwrap();
    // 240 training rows cannot support k_density = 500
    let plan = SamplingPlan { k_density: 500, ..SamplingPlan::new(Strategy::Density, 0) };
    let config = ExperimentConfig { k_underrepresented: 10, iterations: 2, ..Default::default() };
    assert!(run_experiment(&train, &test, &[plan], &config).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..30)) {
        let n = rows.len();
        let target: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let d = Dataset::from_features(Matrix::from_rows(&rows).unwrap(), target).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &IngestionConfig::for_written(&d)).unwrap();
        prop_assert_eq!(back.n(), n);
        prop_assert_eq!(back, d);
    }

    #[test]
    fn subset_has_exact_size(n in 12usize..120, fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, n, 2);
        let d = Dataset::from_features(x, vec![0.0; n]).unwrap();
        let ids = select_underrepresented(&d, fraction, 5).unwrap();
        prop_assert_eq!(ids.len(), rebalance_core::evaluation::subset_size(fraction, n));
        prop_assert_eq!(ids.len(), ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize);
    }

    #[test]
    fn filtering_is_idempotent(cols in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.9, -2i32..3), 6), 1..6)) {
        // cols[j] is column j; None marks a missing cell
        let p = cols.len();
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..p).map(|j| cols[j][i].map_or(f64::NAN, f64::from)).collect())
            .collect();
        let d = Dataset::from_features(Matrix::from_rows(&rows).unwrap(), vec![0.0; 6]).unwrap();
        if let Ok((once, _)) = filter_columns(&d) {
            let (twice, report) = filter_columns(&once).unwrap();
            prop_assert!(report.is_empty());
            prop_assert_eq!(twice, once);
        }
    }
}
