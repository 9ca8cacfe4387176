//! Principal component analysis on the population covariance, via the
//! in-crate Jacobi eigensolver. All components are retained in the fitted
//! model; the variance-target cut happens at transform time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{jacobi_eigh, Matrix};

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("variance target must lie in (0, 1], got {0}")]
    BadTarget(f64),
    #[error("asked for {requested} components but the model has {available}")]
    ComponentCount { requested: usize, available: usize },
    #[error("dimension mismatch: model has {expected} features, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model was fitted without feature names")]
    NoFeatureNames,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub schema_version: String,
    pub mean: Vec<f64>,
    /// d x d orthonormal basis, columns ordered by descending eigenvalue.
    /// Sign convention: each column's largest-magnitude entry is positive.
    pub components: Matrix,
    /// Non-negative, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// eigenvalue / trace(covariance); sums to 1 over all d.
    pub explained_variance_ratio: Vec<f64>,
    pub d_original: usize,
    /// Empty when fitted on an anonymous matrix.
    pub feature_names: Vec<String>,
}

pub const PCA_MODEL_VERSION: &str = "pca-model-v1";

/// Population covariance accumulated in fixed-size row chunks; the chunk
/// partials are reduced in order, so the result is scheduling-independent.
fn covariance(x: &Matrix, mean: &[f64]) -> Matrix {
    let d = x.cols();
    let n = x.rows();
    let chunk_rows = 4096;
    let partials: Vec<Vec<f64>> = x
        .data()
        .par_chunks(chunk_rows * d)
        .map(|chunk| {
            let mut local = vec![0.0f64; d * d];
            for row in chunk.chunks_exact(d) {
                for i in 0..d {
                    let ci = row[i] - mean[i];
                    if ci == 0.0 {
                        continue;
                    }
                    let base = i * d;
                    for j in i..d {
                        local[base + j] += ci * (row[j] - mean[j]);
                    }
                }
            }
            local
        })
        .collect();
    let mut cov = Matrix::zeros(d, d);
    for local in partials {
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += local[i * d + j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn apply_sign_convention(components: &mut Matrix) {
    let d = components.rows();
    for j in 0..components.cols() {
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for i in 0..d {
            let mag = components[(i, j)].abs();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if components[(best, j)] < 0.0 {
            for i in 0..d {
                components[(i, j)] = -components[(i, j)];
            }
        }
    }
}

pub fn pca_fit(x: &Matrix) -> Result<PcaModel, PcaError> {
    pca_fit_named(x, &[])
}

pub fn pca_fit_named(x: &Matrix, names: &[String]) -> Result<PcaModel, PcaError> {
    if x.rows() < 2 {
        return Err(PcaError::TooFewSamples(x.rows()));
    }
    if !x.is_finite() {
        return Err(PcaError::NonFinite);
    }
    let mean = x.column_means();
    let cov = covariance(x, &mean);
    let trace: f64 = (0..cov.rows()).map(|i| cov[(i, i)]).sum();

    let (raw_vals, mut components) = jacobi_eigh(&cov);
    let eigenvalues: Vec<f64> = raw_vals.iter().map(|&v| v.max(0.0)).collect();
    apply_sign_convention(&mut components);

    let explained_variance_ratio = if trace > 0.0 {
        eigenvalues.iter().map(|&v| v / trace).collect()
    } else {
        vec![0.0; eigenvalues.len()]
    };

    Ok(PcaModel {
        schema_version: PCA_MODEL_VERSION.to_string(),
        mean,
        components,
        eigenvalues,
        explained_variance_ratio,
        d_original: x.cols(),
        feature_names: names.to_vec(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreeRow {
    /// 1-based component rank.
    pub component: usize,
    pub eigenvalue: f64,
    pub ratio: f64,
    pub cumulative: f64,
}

impl PcaModel {
    /// Smallest k whose cumulative explained variance reaches the target.
    pub fn select_components(&self, variance_target: f64) -> Result<usize, PcaError> {
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(PcaError::BadTarget(variance_target));
        }
        let mut cumulative = 0.0;
        for (i, ratio) in self.explained_variance_ratio.iter().enumerate() {
            cumulative += ratio;
            if cumulative >= variance_target - 1e-12 {
                return Ok(i + 1);
            }
        }
        Ok(self.d_original)
    }

    /// Project onto the first k components: (x - mean) W_k.
    pub fn transform(&self, x: &Matrix, k: usize) -> Result<Matrix, PcaError> {
        if x.cols() != self.d_original {
            return Err(PcaError::DimensionMismatch {
                expected: self.d_original,
                got: x.cols(),
            });
        }
        if k > self.d_original {
            return Err(PcaError::ComponentCount {
                requested: k,
                available: self.d_original,
            });
        }
        let mut out = Matrix::zeros(x.rows(), k);
        let compute = |(i, out_row): (usize, &mut [f64])| {
            let row = x.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (f, &value) in row.iter().enumerate() {
                    acc += (value - self.mean[f]) * self.components[(f, j)];
                }
                *o = acc;
            }
        };
        if x.rows() >= 256 {
            out.data_mut()
                .par_chunks_mut(k.max(1))
                .enumerate()
                .for_each(compute);
        } else {
            for i in 0..x.rows() {
                compute((i, out.row_mut(i)));
            }
        }
        Ok(out)
    }

    /// Map scores back into the original space: S W_kᵀ + mean.
    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix, PcaError> {
        let k = scores.cols();
        if k > self.d_original {
            return Err(PcaError::ComponentCount {
                requested: k,
                available: self.d_original,
            });
        }
        let d = self.d_original;
        let mut out = Matrix::zeros(scores.rows(), d);
        for i in 0..scores.rows() {
            let s = scores.row(i);
            let out_row = out.row_mut(i);
            for (f, out_v) in out_row.iter_mut().enumerate() {
                let mut acc = self.mean[f];
                for (j, &score) in s.iter().enumerate().take(k) {
                    acc += score * self.components[(f, j)];
                }
                *out_v = acc;
            }
        }
        Ok(out)
    }

    pub fn scree_rows(&self) -> Vec<ScreeRow> {
        let mut cumulative = 0.0;
        self.eigenvalues
            .iter()
            .zip(&self.explained_variance_ratio)
            .enumerate()
            .map(|(i, (&eigenvalue, &ratio))| {
                cumulative += ratio;
                ScreeRow {
                    component: i + 1,
                    eigenvalue,
                    ratio,
                    cumulative,
                }
            })
            .collect()
    }

    /// For each of the first `top_m` components, every feature with its
    /// signed loading, sorted by magnitude.
    pub fn loadings(&self, top_m: usize) -> Result<Vec<Vec<(String, f64)>>, PcaError> {
        if self.feature_names.len() != self.d_original {
            return Err(PcaError::NoFeatureNames);
        }
        if top_m > self.d_original {
            return Err(PcaError::ComponentCount {
                requested: top_m,
                available: self.d_original,
            });
        }
        Ok((0..top_m)
            .map(|j| {
                let mut entries: Vec<(String, f64)> = self
                    .feature_names
                    .iter()
                    .enumerate()
                    .map(|(f, name)| (name.clone(), self.components[(f, j)]))
                    .collect();
                entries.sort_by(|a, b| {
                    b.1.abs()
                        .partial_cmp(&a.1.abs())
                        .unwrap()
                        .then_with(|| a.0.cmp(&b.0))
                });
                entries
            })
            .collect())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<PcaModel> {
        serde_json::from_str(text)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn fit(rows: &[Vec<f64>]) -> PcaModel {
        pca_fit(&Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn rank_one_data_concentrates_variance() {
        let model = fit(&[vec![2.0, 0.0], vec![-2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!((model.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!(model.explained_variance_ratio[1].abs() < 1e-12);
        assert!((model.components[(0, 0)] - 1.0).abs() < 1e-9);
        assert!(model.components[(1, 0)].abs() < 1e-9);
    }

    #[test]
    fn isotropic_square_has_equal_eigenvalues() {
        // covariance of the four unit points is I/2
        let model = fit(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        assert!((model.eigenvalues[0] - 0.5).abs() < 1e-12);
        assert!((model.eigenvalues[1] - 0.5).abs() < 1e-12);
        assert!((model.explained_variance_ratio[0] - 0.5).abs() < 1e-12);
        let scree = model.scree_rows();
        assert!((scree[0].cumulative - 0.5).abs() < 1e-12);
        assert!((scree[1].cumulative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratios_sum_to_one() {
        let mut rng = Rng::from_seed(2);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..7).map(|_| rng.uniform(-3.0, 3.0)).collect())
            .collect();
        let model = fit(&rows);
        let sum: f64 = model.explained_variance_ratio.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let cum = model.scree_rows();
        assert!(cum.windows(2).all(|w| w[0].cumulative <= w[1].cumulative + 1e-15));
        assert!((cum.last().unwrap().cumulative - 1.0).abs() < 1e-9);
    }

    #[test]
    fn select_components_thresholds() {
        let mut model = fit(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        model.explained_variance_ratio = vec![0.6, 0.3, 0.1];
        model.d_original = 3;
        assert_eq!(model.select_components(0.8).unwrap(), 2);
        assert_eq!(model.select_components(0.6).unwrap(), 1);
        assert_eq!(model.select_components(1.0).unwrap(), 3);
        assert!(matches!(model.select_components(0.0), Err(PcaError::BadTarget(_))));
        assert!(matches!(model.select_components(1.5), Err(PcaError::BadTarget(_))));
    }

    #[test]
    fn full_variance_target_selects_covariance_rank() {
        // rank-1 data: cumulative hits 1.0 at k=1
        let model = fit(&[vec![2.0, 0.0], vec![-2.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(model.select_components(1.0).unwrap(), 1);
    }

    #[test]
    fn transform_of_the_mean_is_zero_and_rank_one_scores_are_coordinates() {
        let rows = vec![vec![2.0, 0.0], vec![-2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        let model = fit(&rows);
        let mean_row = Matrix::from_vec(model.mean.clone(), 1, 2);
        let scores = model.transform(&mean_row, 2).unwrap();
        assert!(scores.row(0).iter().all(|v| v.abs() < 1e-12));

        // symmetric x values with zero mean: scores equal the x coordinates
        let scores = model.transform(&Matrix::from_rows(&rows), 1).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert!((scores[(i, 0)] - row[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn full_rank_projection_reconstructs() {
        let mut rng = Rng::from_seed(5);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.uniform(-2.0, 2.0)).collect())
            .collect();
        let x = Matrix::from_rows(&rows);
        let model = pca_fit(&x).unwrap();
        let recon = model.inverse_transform(&model.transform(&x, 6).unwrap()).unwrap();
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                assert!((x[(i, j)] - recon[(i, j)]).abs() < 1e-8);
            }
        }
        // scores are uncorrelated
        let scores = model.transform(&x, 6).unwrap();
        let means = scores.column_means();
        let trace: f64 = model.eigenvalues.iter().sum();
        for a in 0..6 {
            for b in (a + 1)..6 {
                let mut cov = 0.0;
                for i in 0..scores.rows() {
                    cov += (scores[(i, a)] - means[a]) * (scores[(i, b)] - means[b]);
                }
                cov /= scores.rows() as f64;
                assert!(cov.abs() < 1e-8 * trace, "components {a},{b} correlate: {cov}");
            }
        }
    }

    #[test]
    fn duplicating_rows_keeps_ratios() {
        let mut rng = Rng::from_seed(9);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect();
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let a = fit(&rows);
        let b = fit(&doubled);
        for (ra, rb) in a.explained_variance_ratio.iter().zip(&b.explained_variance_ratio) {
            assert!((ra - rb).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_convention_is_canonical() {
        let mut rng = Rng::from_seed(4);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let t = rng.uniform(-2.0, 2.0);
                vec![t, -0.8 * t + 0.05 * rng.normal()]
            })
            .collect();
        // negating a column must still give largest-magnitude-positive
        // component entries
        let negated: Vec<Vec<f64>> = rows.iter().map(|r| vec![-r[0], r[1]]).collect();
        for data in [&rows, &negated] {
            let model = fit(data);
            for j in 0..2 {
                let col = model.components.column(j);
                let biggest = col.iter().cloned().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
                assert!(biggest > 0.0, "component {j} breaks the sign convention");
            }
        }
    }

    #[test]
    fn loadings_need_names_and_sort_by_magnitude() {
        let rows = vec![vec![2.0, 0.0], vec![-2.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        let anon = fit(&rows);
        assert!(matches!(anon.loadings(1), Err(PcaError::NoFeatureNames)));

        let names = vec!["feat_x".to_string(), "feat_y".to_string()];
        let model = pca_fit_named(&Matrix::from_rows(&rows), &names).unwrap();
        let loadings = model.loadings(1).unwrap();
        assert_eq!(loadings[0][0].0, "feat_x");
        assert!((loadings[0][0].1 - 1.0).abs() < 1e-9);
        assert!(loadings[0][1].1.abs() < 1e-9);
        assert!(matches!(model.loadings(3), Err(PcaError::ComponentCount { .. })));

        // every loading vector has unit norm
        for entries in model.loadings(2).unwrap() {
            let norm: f64 = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors_on_degenerate_inputs() {
        assert!(matches!(
            pca_fit(&Matrix::from_rows(&[vec![1.0, 2.0]])),
            Err(PcaError::TooFewSamples(1))
        ));
        let bad = Matrix::from_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]);
        assert!(matches!(pca_fit(&bad), Err(PcaError::NonFinite)));
        let model = fit(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            model.transform(&Matrix::from_rows(&[vec![1.0]]), 1),
            Err(PcaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let model = fit(&[vec![1.0, 2.0], vec![3.0, 1.0], vec![-1.0, 0.5]]);
        let json = model.to_json().unwrap();
        let back = PcaModel::from_json(&json).unwrap();
        assert_eq!(back.schema_version, PCA_MODEL_VERSION);
        assert_eq!(back.eigenvalues, model.eigenvalues);
        assert_eq!(back.components, model.components);
    }
}
