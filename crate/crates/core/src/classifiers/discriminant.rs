//! Gaussian discriminant classifiers. LDA pools one covariance across
//! classes and scores linearly; QDA keeps one covariance per class. Both
//! add a ridge of `ridge_scale * trace / d` before factorizing, so
//! zero-variance directions do not blow up the inverse.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::{cholesky, cholesky_log_det, cholesky_solve, dot, Matrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaParams {
    pub ridge_scale: f64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams { ridge_scale: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QdaParams {
    pub ridge_scale: f64,
}

impl Default for QdaParams {
    fn default() -> Self {
        QdaParams { ridge_scale: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Scorer {
    /// delta_k(x) = w_k . x + b_k
    Linear { weights: Matrix, biases: Vec<f64> },
    /// delta_k(x) = -0.5 log|S_k| - 0.5 (x-mu)' S_k^-1 (x-mu) + ln pi_k
    Quadratic {
        means: Matrix,
        chol: Vec<Matrix>,
        constants: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscriminantModel {
    /// Class labels actually present in training, ascending.
    classes: Vec<u32>,
    scorer: Scorer,
}

struct ClassSummary {
    label: u32,
    rows: Vec<usize>,
    mean: Vec<f64>,
}

fn summarize(x: &Matrix, y: &[u32], n_classes: usize) -> Vec<ClassSummary> {
    let d = x.cols();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in y.iter().enumerate() {
        by_class[label as usize].push(i);
    }
    by_class
        .into_iter()
        .enumerate()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(label, rows)| {
            let mut mean = vec![0.0; d];
            for &r in &rows {
                for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= rows.len() as f64;
            }
            ClassSummary {
                label: label as u32,
                rows,
                mean,
            }
        })
        .collect()
}

fn scatter_into(x: &Matrix, rows: &[usize], mean: &[f64], acc: &mut Matrix) {
    let d = mean.len();
    for &r in rows {
        let row = x.row(r);
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                acc[(i, j)] += ci * (row[j] - mean[j]);
            }
        }
    }
}

fn ridge_and_factor(
    mut cov: Matrix,
    ridge_scale: f64,
    scope: &str,
) -> Result<Matrix, ModelError> {
    let d = cov.rows();
    // mirror the accumulated upper triangle
    for i in 0..d {
        for j in (i + 1)..d {
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
    let ridge = ridge_scale * trace / d as f64;
    for i in 0..d {
        cov[(i, i)] += ridge;
    }
    cholesky(&cov).ok_or_else(|| ModelError::SingularCovariance {
        scope: scope.to_string(),
    })
}

impl DiscriminantModel {
    pub fn fit_lda(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &LdaParams,
    ) -> Result<DiscriminantModel, ModelError> {
        let d = x.cols();
        let n = x.rows() as f64;
        let summaries = summarize(x, y, n_classes);
        let mut pooled = Matrix::zeros(d, d);
        for s in &summaries {
            scatter_into(x, &s.rows, &s.mean, &mut pooled);
        }
        for i in 0..d {
            for j in i..d {
                pooled[(i, j)] /= n;
            }
        }
        let l = ridge_and_factor(pooled, params.ridge_scale, "pooled")?;

        let mut weights = Matrix::zeros(summaries.len(), d);
        let mut biases = Vec::with_capacity(summaries.len());
        for (k, s) in summaries.iter().enumerate() {
            let w = cholesky_solve(&l, &s.mean);
            let prior = s.rows.len() as f64 / n;
            biases.push(-0.5 * dot(&s.mean, &w) + prior.ln());
            weights.row_mut(k).copy_from_slice(&w);
        }
        Ok(DiscriminantModel {
            classes: summaries.iter().map(|s| s.label).collect(),
            scorer: Scorer::Linear { weights, biases },
        })
    }

    pub fn fit_qda(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &QdaParams,
    ) -> Result<DiscriminantModel, ModelError> {
        let d = x.cols();
        let n = x.rows() as f64;
        let summaries = summarize(x, y, n_classes);
        let mut means = Matrix::zeros(summaries.len(), d);
        let mut chol = Vec::with_capacity(summaries.len());
        let mut constants = Vec::with_capacity(summaries.len());
        for (k, s) in summaries.iter().enumerate() {
            let mut cov = Matrix::zeros(d, d);
            scatter_into(x, &s.rows, &s.mean, &mut cov);
            let nk = s.rows.len() as f64;
            for i in 0..d {
                for j in i..d {
                    cov[(i, j)] /= nk;
                }
            }
            let l = ridge_and_factor(cov, params.ridge_scale, &format!("class {}", s.label))?;
            let prior = nk / n;
            constants.push(-0.5 * cholesky_log_det(&l) + prior.ln());
            means.row_mut(k).copy_from_slice(&s.mean);
            chol.push(l);
        }
        Ok(DiscriminantModel {
            classes: summaries.iter().map(|s| s.label).collect(),
            scorer: Scorer::Quadratic {
                means,
                chol,
                constants,
            },
        })
    }

    /// Discriminant scores per present class, one row per input row.
    pub fn decision_scores(&self, x: &Matrix) -> Matrix {
        let c = self.classes.len();
        let mut out = Matrix::zeros(x.rows(), c);
        for i in 0..x.rows() {
            let row = x.row(i);
            for k in 0..c {
                out[(i, k)] = self.score_one(row, k);
            }
        }
        out
    }

    fn score_one(&self, row: &[f64], k: usize) -> f64 {
        match &self.scorer {
            Scorer::Linear { weights, biases } => dot(weights.row(k), row) + biases[k],
            Scorer::Quadratic {
                means,
                chol,
                constants,
            } => {
                let mean = means.row(k);
                let centered: Vec<f64> = row.iter().zip(mean).map(|(a, b)| a - b).collect();
                // (x-mu)' S^-1 (x-mu) = ||L^-1 (x-mu)||^2, forward solve only
                let l = &chol[k];
                let d = centered.len();
                let mut z = vec![0.0; d];
                let mut quad = 0.0;
                for i in 0..d {
                    let mut sum = centered[i];
                    for j in 0..i {
                        sum -= l[(i, j)] * z[j];
                    }
                    z[i] = sum / l[(i, i)];
                    quad += z[i] * z[i];
                }
                constants[k] - 0.5 * quad
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                let mut best = 0usize;
                let mut best_score = self.score_one(row, 0);
                for k in 1..self.classes.len() {
                    let s = self.score_one(row, k);
                    if s > best_score {
                        best_score = s;
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect()
    }

    pub fn present_classes(&self) -> &[u32] {
        &self.classes
    }
}
