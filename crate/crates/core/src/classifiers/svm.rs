//! Linear one-vs-rest SVM trained by averaged projected subgradient descent
//! on the hinge loss (Pegasos-style steps with a burn-in offset that keeps
//! the first step sizes bounded). The bias rides along as an extra
//! always-one feature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::{dot, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmParams {
    pub epochs: usize,
    /// Hinge-loss regularization; defaults to 1/N at fit time.
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            epochs: 20,
            lambda: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSvm {
    /// One averaged weight vector (d + 1, bias last) per present class.
    weights: Matrix,
    classes: Vec<u32>,
    /// Sum over classes of the binary hinge objective after each epoch.
    pub epoch_objectives: Vec<f64>,
}

fn hinge_objective(x: &Matrix, targets: &[f64], w: &[f64], lambda: f64) -> f64 {
    let d = x.cols();
    let mut loss = 0.0;
    for (i, &z) in targets.iter().enumerate() {
        let margin = z * (dot(x.row(i), &w[..d]) + w[d]);
        loss += (1.0 - margin).max(0.0);
    }
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    0.5 * lambda * norm_sq + loss / x.rows() as f64
}

fn train_binary(
    x: &Matrix,
    targets: &[f64],
    lambda: f64,
    epochs: usize,
    rng: &mut Rng,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let mut w = vec![0.0f64; d + 1];
    let mut avg = vec![0.0f64; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut objectives = Vec::with_capacity(epochs);
    let burn_in = n as f64;
    let mut t = 0.0f64;
    let mut averaged = 0u64;
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1.0;
            let eta = 1.0 / (lambda * (burn_in + t));
            let row = x.row(i);
            let z = targets[i];
            let margin = z * (dot(row, &w[..d]) + w[d]);
            let scale = 1.0 - eta * lambda;
            for v in w.iter_mut() {
                *v *= scale;
            }
            if margin < 1.0 {
                for (wv, &xv) in w.iter_mut().zip(row) {
                    *wv += eta * z * xv;
                }
                w[d] += eta * z;
            }
            for (a, &v) in avg.iter_mut().zip(&w) {
                *a += v;
            }
            averaged += 1;
        }
        let snapshot: Vec<f64> = avg.iter().map(|a| a / averaged as f64).collect();
        objectives.push(hinge_objective(x, targets, &snapshot, lambda));
    }
    let final_w: Vec<f64> = avg.iter().map(|a| a / averaged as f64).collect();
    (final_w, objectives)
}

impl LinearSvm {
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &SvmParams,
    ) -> Result<LinearSvm, ModelError> {
        if params.epochs == 0 {
            return Err(ModelError::InvalidParam("epochs must be positive".into()));
        }
        let lambda = params.lambda.unwrap_or(1.0 / x.rows() as f64);
        if lambda <= 0.0 {
            return Err(ModelError::InvalidParam("lambda must be positive".into()));
        }
        let classes: Vec<u32> = (0..n_classes as u32)
            .filter(|c| y.contains(c))
            .collect();

        let trained: Vec<(Vec<f64>, Vec<f64>)> = classes
            .par_iter()
            .map(|&c| {
                let targets: Vec<f64> = y
                    .iter()
                    .map(|&l| if l == c { 1.0 } else { -1.0 })
                    .collect();
                let mut rng = Rng::from_seed_stream(params.seed, c as u64);
                train_binary(x, &targets, lambda, params.epochs, &mut rng)
            })
            .collect();

        let mut weights = Matrix::zeros(classes.len(), x.cols() + 1);
        let mut epoch_objectives = vec![0.0; params.epochs];
        for (k, (w, obj)) in trained.into_iter().enumerate() {
            weights.row_mut(k).copy_from_slice(&w);
            for (acc, o) in epoch_objectives.iter_mut().zip(obj) {
                *acc += o;
            }
        }
        Ok(LinearSvm {
            weights,
            classes,
            epoch_objectives,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        let d = x.cols();
        (0..x.rows())
            .map(|i| {
                let row = x.row(i);
                let mut best = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for k in 0..self.classes.len() {
                    let w = self.weights.row(k);
                    let score = dot(&w[..d], row) + w[d];
                    if score > best_score {
                        best_score = score;
                        best = k;
                    }
                }
                self.classes[best]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Linearly separable with functional margin 1 around x = 0.
    fn margin_fixture() -> (Matrix, Vec<u32>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut rng = Rng::from_seed(9);
        for i in 0..60 {
            let side = if i % 2 == 0 { -1.0 } else { 1.0 };
            rows.push(vec![side * (1.0 + rng.next_f64() * 2.0), rng.normal()]);
            y.push(if side < 0.0 { 0u32 } else { 1 });
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn separable_data_reaches_full_training_accuracy() {
        let (x, y) = margin_fixture();
        let model = LinearSvm::fit(&x, &y, 2, &SvmParams::default()).unwrap();
        assert_eq!(model.predict(&x), y);
    }

    #[test]
    fn averaged_objective_is_non_increasing() {
        let (x, y) = margin_fixture();
        let model = LinearSvm::fit(&x, &y, 2, &SvmParams::default()).unwrap();
        let obj = &model.epoch_objectives;
        assert!(obj.len() == 20);
        for pair in obj.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "objective rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn multiclass_one_vs_rest() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut rng = Rng::from_seed(4);
        for class in 0..3u32 {
            let (cx, cy) = [(0.0, 0.0), (8.0, 0.0), (0.0, 8.0)][class as usize];
            for _ in 0..30 {
                rows.push(vec![cx + rng.normal() * 0.5, cy + rng.normal() * 0.5]);
                y.push(class);
            }
        }
        let x = Matrix::from_rows(&rows);
        let model = LinearSvm::fit(&x, &y, 3, &SvmParams::default()).unwrap();
        let preds = model.predict(&x);
        let correct = preds.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(correct as f64 / y.len() as f64 >= 0.98);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = margin_fixture();
        let a = LinearSvm::fit(&x, &y, 2, &SvmParams::default()).unwrap();
        let b = LinearSvm::fit(&x, &y, 2, &SvmParams::default()).unwrap();
        assert_eq!(a.weights.data(), b.weights.data());
    }
}
