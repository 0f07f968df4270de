//! Runs the bundled synthetic benchmark and prints per-strategy RMSE
//! quantiles.
//!
//! `cargo run --release --example benchmark_experiment -- [noise_sd] [curvature] [seed]`

use rebalance_core::prelude::*;

fn main() -> Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut spec = SynthSpec::benchmark();
    if let Some(&v) = args.first() {
        spec.noise_sd = v;
    }
    if let Some(&v) = args.get(1) {
        spec.curvature = v;
    }
    if let Some(&v) = args.get(2) {
        spec.seed = v as u64;
    }
    let data = generate(&spec)?.dataset;
    let (train, test) = train_test_split(&data, &SplitSpec { seed: spec.seed, ..SplitSpec::default() })?;
    let plans: Vec<SamplingPlan> =
        [Strategy::OnePoint, Strategy::Mean, Strategy::Density].into_iter().map(|s| SamplingPlan::new(s, 0)).collect();
    let summary = run_experiment(&train, &test, &plans, &ExperimentConfig::default())?;
    let base = summary.baseline();
    let base_under = base.underrepresented_rmse.median;
    println!("noise_sd={} curvature={} seed={}", spec.noise_sd, spec.curvature, spec.seed);
    for s in &summary.strategies {
        let wins = s.reports.iter().filter(|r| r.underrepresented_rmse < base_under).count();
        println!(
            "{:>8}  overall median {:.4} ({:+.1}%)  underrepresented median {:.4}  wins {}/{}",
            s.strategy,
            s.overall_rmse.median,
            100.0 * (s.overall_rmse.median / base.overall_rmse.median - 1.0),
            s.underrepresented_rmse.median,
            wins,
            s.reports.len()
        );
    }
    Ok(())
}
