//! Covariate-space rebalancing for imbalanced regression.
//!
//! Training sets drawn from tightly controlled processes put most rows in a
//! few dense regions of covariate space. This crate downsamples such data
//! toward a more even covariate density before fitting a linear model, and
//! measures the effect with two RMSE figures: one on the full test set and
//! one on its most sparsely surrounded rows.
//!
//! ```
//! use rebalance_core::prelude::*;
//!
//! let data = generate(&SynthSpec { n: 1_000, ..SynthSpec::benchmark() }).unwrap().dataset;
//! let (train, test) = train_test_split(&data, &SplitSpec::default()).unwrap();
//! let plans = [SamplingPlan::new(Strategy::Density, 0)];
//! let config = ExperimentConfig { iterations: 2, k_underrepresented: 20, ..Default::default() };
//! let summary = run_experiment(&train, &test, &plans, &config).unwrap();
//! assert_eq!(summary.strategies.len(), 2);
//! ```

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod matrix;
pub mod neighbors;
pub mod pca;
pub mod regression;
pub mod rng;
pub mod sampling;
pub mod synth;

pub use dataset::{Dataset, RowId};
pub use error::{Error, Result};
pub use matrix::Matrix;

pub mod prelude {
    pub use crate::dataset::{
        apply_standardization, filter_columns, fit_standardization, load_csv, train_test_split, write_csv,
        Dataset, IngestionConfig, RowId, SplitMode, SplitSpec, StandardizationParams,
    };
    pub use crate::error::{Error, Result};
    pub use crate::evaluation::{
        evaluate, residual_winner_map, rmse, run_experiment, select_underrepresented, EvaluationReport,
        ExperimentConfig, ExperimentSummary, Winner,
    };
    pub use crate::matrix::Matrix;
    pub use crate::neighbors::{DensityScore, NeighborIndex, SearchMode};
    pub use crate::pca::{fit_pca, FittedOn, PcaModel, PcaScaling};
    pub use crate::regression::{fit_ols, LinearModel};
    pub use crate::sampling::{density_weights, draw_sample, SampledDataset, SamplingPlan, Strategy};
    pub use crate::synth::{generate, SynthSpec};
}
