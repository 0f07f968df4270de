//! Principal components via SVD of the centered (optionally scaled) data.

use serde::{Deserialize, Serialize};

use crate::dataset::StandardizationParams;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcaScaling {
    /// Covariance PCA.
    Center,
    /// Correlation PCA: centered and divided by the sample standard deviation.
    #[default]
    Standardize,
}

/// Which rows the model was fitted on, recorded for self-describing output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FittedOn {
    Train,
    #[default]
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// `p × c`, orthonormal columns.
    pub components: Matrix,
    pub explained_variances: Vec<f64>,
    pub explained_variance_ratios: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub scaling: PcaScaling,
    pub fitted_on: FittedOn,
}

pub fn fit_pca(features: &Matrix, num_components: usize, scaling: PcaScaling, fitted_on: FittedOn) -> Result<PcaModel> {
    let (n, p) = (features.nrows(), features.ncols());
    if n < 2 || p == 0 {
        return Err(Error::invalid("PCA needs at least two rows and one column"));
    }
    if !features.all_finite() {
        return Err(Error::NonFinite("PCA input"));
    }
    let max_c = (n - 1).min(p);
    if num_components == 0 || num_components > max_c {
        return Err(Error::invalid(format!("num_components must lie in 1..={max_c}, got {num_components}")));
    }
    let names: Vec<String> = (1..=p).map(|j| format!("column {j}")).collect();
    let (means, scales) = match scaling {
        PcaScaling::Standardize => {
            let params = StandardizationParams::fit(features, &names)?;
            (params.means, params.standard_deviations)
        }
        PcaScaling::Center => {
            let means = (0..p).map(|j| features.column(j).iter().sum::<f64>() / n as f64).collect();
            (means, vec![1.0; p])
        }
    };
    let centered = nalgebra::DMatrix::from_fn(n, p, |i, j| (features.get(i, j) - means[j]) / scales[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::invalid("SVD did not produce right singular vectors"))?;
    let variances: Vec<f64> = svd.singular_values.iter().map(|s| s * s / (n - 1) as f64).collect();
    let total: f64 = variances.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroVariance("all columns".into()));
    }
    let mut components = Matrix::zeros(p, num_components);
    for c in 0..num_components {
        let mut loading: Vec<f64> = (0..p).map(|j| v_t[(c, j)]).collect();
        // sign convention: the largest-magnitude loading is positive
        let pivot = loading
            .iter()
            .enumerate()
            .fold(0, |best, (j, v)| if v.abs() > loading[best].abs() { j } else { best });
        if loading[pivot] < 0.0 {
            loading.iter_mut().for_each(|v| *v = -*v);
        }
        for (j, v) in loading.into_iter().enumerate() {
            components.set(j, c, v);
        }
    }
    let explained_variances = variances[..num_components].to_vec();
    let explained_variance_ratios = explained_variances.iter().map(|v| v / total).collect();
    Ok(PcaModel { components, explained_variances, explained_variance_ratios, means, scales, scaling, fitted_on })
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn dim(&self) -> usize {
        self.components.nrows()
    }

    /// Scales rows with the fitted parameters, then multiplies by the
    /// component matrix.
    pub fn project(&self, features: &Matrix) -> Result<Matrix> {
        let (p, c) = (self.dim(), self.num_components());
        if features.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: features.ncols() });
        }
        let mut out = Matrix::zeros(features.nrows(), c);
        let mut scaled = vec![0.0; p];
        for (i, row) in features.rows_iter().enumerate() {
            for j in 0..p {
                scaled[j] = (row[j] - self.means[j]) / self.scales[j];
            }
            for k in 0..c {
                out.set(i, k, (0..p).map(|j| scaled[j] * self.components.get(j, k)).sum());
            }
        }
        Ok(out)
    }

    /// Maps scores back to the original input space; exact when every
    /// component is kept.
    pub fn reconstruct(&self, scores: &Matrix) -> Result<Matrix> {
        let (p, c) = (self.dim(), self.num_components());
        if scores.ncols() != c {
            return Err(Error::DimensionMismatch { expected: c, actual: scores.ncols() });
        }
        let mut out = Matrix::zeros(scores.nrows(), p);
        for i in 0..scores.nrows() {
            for j in 0..p {
                let scaled: f64 = (0..c).map(|k| scores.get(i, k) * self.components.get(j, k)).sum();
                out.set(i, j, scaled * self.scales[j] + self.means[j]);
            }
        }
        Ok(out)
    }
}

pub fn project(model: &PcaModel, features: &Matrix) -> Result<Matrix> {
    model.project(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn correlated(n: usize, seed: u64) -> Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let c: f64 = StandardNormal.sample(&mut rng);
                [a, 0.8 * a + 0.3 * b, 2.0 * c + 0.1 * a]
            })
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn collinear_points() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, i as f64]).collect();
        let m = fit_pca(&Matrix::from_rows(&rows).unwrap(), 2, PcaScaling::Center, FittedOn::Test).unwrap();
        assert_abs_diff_eq!(m.explained_variance_ratios[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.explained_variance_ratios[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mean_row_projects_to_zero() {
        let x = correlated(200, 1);
        let m = fit_pca(&x, 3, PcaScaling::Standardize, FittedOn::Train).unwrap();
        let s = m.project(&Matrix::from_rows(std::slice::from_ref(&m.means)).unwrap()).unwrap();
        assert!(s.row(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn score_variances_follow_eigenvalues() {
        let x = correlated(500, 2);
        let m = fit_pca(&x, 3, PcaScaling::Center, FittedOn::Train).unwrap();
        let s = m.project(&x).unwrap();
        let var: Vec<f64> = (0..3)
            .map(|k| {
                let col = s.column(k);
                let mean = col.iter().sum::<f64>() / 500.0;
                assert!(mean.abs() < 1e-10);
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 499.0
            })
            .collect();
        for (v, e) in var.iter().zip(&m.explained_variances) {
            assert_abs_diff_eq!(*v, *e, epsilon = 1e-9);
        }
        assert!(var[0] >= var[1] && var[1] >= var[2]);
    }

    #[test]
    fn sign_flip_mirrors_scores() {
        let x = correlated(100, 3);
        let m = fit_pca(&x, 2, PcaScaling::Standardize, FittedOn::Test).unwrap();
        let mut flipped = m.clone();
        for j in 0..flipped.dim() {
            let v = flipped.components.get(j, 0);
            flipped.components.set(j, 0, -v);
        }
        let (a, b) = (m.project(&x).unwrap(), flipped.project(&x).unwrap());
        for i in 0..x.nrows() {
            assert_abs_diff_eq!(a.get(i, 0), -b.get(i, 0), epsilon = 1e-12);
            assert_eq!(a.get(i, 1), b.get(i, 1));
        }
    }

    #[test]
    fn largest_loading_is_positive() {
        let x = correlated(300, 4);
        let m = fit_pca(&x, 3, PcaScaling::Center, FittedOn::Test).unwrap();
        for k in 0..3 {
            let col = m.components.column(k);
            let max = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(max > 0.0);
        }
    }

    #[test]
    fn bad_arguments() {
        let x = correlated(10, 5);
        assert!(fit_pca(&x, 0, PcaScaling::Center, FittedOn::Test).is_err());
        assert!(fit_pca(&x, 4, PcaScaling::Center, FittedOn::Test).is_err());
        let flat = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert!(fit_pca(&flat, 1, PcaScaling::Center, FittedOn::Test).is_err());
        assert!(fit_pca(&flat, 1, PcaScaling::Standardize, FittedOn::Test).is_err());
        let m = fit_pca(&x, 2, PcaScaling::Center, FittedOn::Test).unwrap();
        assert!(m.project(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn ratios_ignore_row_order() {
        let x = correlated(120, 6);
        let rev: Vec<usize> = (0..120).rev().collect();
        let a = fit_pca(&x, 3, PcaScaling::Standardize, FittedOn::Test).unwrap();
        let b = fit_pca(&x.select_rows(&rev), 3, PcaScaling::Standardize, FittedOn::Test).unwrap();
        for (u, v) in a.explained_variance_ratios.iter().zip(&b.explained_variance_ratios) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }
}
