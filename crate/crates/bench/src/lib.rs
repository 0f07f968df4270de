//! Fixtures shared by the criterion benchmarks in `benches/`.

use rebalance_core::dataset::{fit_standardization, Dataset};
use rebalance_core::synth::{generate, SynthSpec};
use rebalance_core::Matrix;

/// Synthetic benchmark data with `n` rows and `p` covariates, plus its
/// standardized feature matrix.
pub fn fixture(n: usize, p: usize) -> (Dataset, Matrix) {
    let spec = SynthSpec { n, p, ..SynthSpec::benchmark() };
    let data = generate(&spec).expect("valid spec").dataset;
    let search = fit_standardization(&data).and_then(|s| s.transform(data.features())).expect("non-constant columns");
    (data, search)
}
