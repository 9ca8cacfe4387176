//! Random forest: bootstrap-aggregated CART trees with per-node feature
//! sampling and majority vote. Every tree draws from its own seeded stream,
//! so fits are reproducible and tree builds can run in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, DtParams};
use super::ModelError;
use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: FeatureSubset,
    pub tree: DtParams,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    /// floor(sqrt(d)) features per split.
    Sqrt,
    All,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 100,
            bootstrap: true,
            max_features: FeatureSubset::Sqrt,
            tree: DtParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
}

impl RandomForest {
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &RfParams,
    ) -> Result<RandomForest, ModelError> {
        if params.n_trees == 0 {
            return Err(ModelError::InvalidParam("n_trees must be positive".into()));
        }
        let n = x.rows();
        let d = x.cols();
        let feature_sample = match params.max_features {
            FeatureSubset::All => None,
            FeatureSubset::Sqrt => Some(((d as f64).sqrt().floor() as usize).max(1)),
        };
        // trees build in bounded batches: each build presorts its own
        // per-feature index lists, so unbounded parallelism would multiply
        // that working set by the core count
        let mut trees = Vec::with_capacity(params.n_trees);
        for batch_start in (0..params.n_trees).step_by(8) {
            let batch_end = (batch_start + 8).min(params.n_trees);
            let batch: Result<Vec<DecisionTree>, ModelError> = (batch_start..batch_end)
                .into_par_iter()
                .map(|t| {
                    let mut rng = Rng::from_seed_stream(params.seed, t as u64);
                    let rows: Vec<u32> = if params.bootstrap {
                        (0..n).map(|_| rng.index(n) as u32).collect()
                    } else {
                        (0..n as u32).collect()
                    };
                    DecisionTree::fit_on_rows(
                        x,
                        y,
                        n_classes,
                        &params.tree,
                        &rows,
                        feature_sample,
                        feature_sample.map(|_| &mut rng),
                    )
                })
                .collect();
            trees.extend(batch?);
        }
        Ok(RandomForest { trees, n_classes })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        let vote_rows: Vec<u32> = (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mut votes = vec![0u32; self.n_classes];
                for tree in &self.trees {
                    votes[tree.predict_row(row) as usize] += 1;
                }
                // ties go to the lowest label
                let mut best = 0usize;
                for (c, &v) in votes.iter().enumerate() {
                    if v > votes[best] {
                        best = c;
                    }
                }
                best as u32
            })
            .collect();
        vote_rows
    }

    /// Mean of the trees' normalized importances.
    pub fn importances(&self) -> Vec<f64> {
        let d = self
            .trees
            .first()
            .map(|t| t.importances().len())
            .unwrap_or(0);
        let mut acc = vec![0.0; d];
        for tree in &self.trees {
            let imp = tree.importances();
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                for (a, v) in acc.iter_mut().zip(imp) {
                    *a += v / total;
                }
            }
        }
        for a in &mut acc {
            *a /= self.trees.len() as f64;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blob_data() -> (Matrix, Vec<u32>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut rng = Rng::from_seed(5);
        for class in 0..2u32 {
            for _ in 0..40 {
                let cx = class as f64 * 6.0;
                rows.push(vec![cx + rng.normal(), rng.normal()]);
                y.push(class);
            }
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn forest_learns_separable_blobs() {
        let (x, y) = two_blob_data();
        let params = RfParams {
            n_trees: 15,
            ..RfParams::default()
        };
        let rf = RandomForest::fit(&x, &y, 2, &params).unwrap();
        assert_eq!(rf.predict(&x), y);
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = two_blob_data();
        let params = RfParams {
            n_trees: 7,
            seed: 42,
            ..RfParams::default()
        };
        let a = RandomForest::fit(&x, &y, 2, &params).unwrap();
        let b = RandomForest::fit(&x, &y, 2, &params).unwrap();
        let probe = {
            let mut rng = Rng::from_seed(1);
            Matrix::from_rows(
                &(0..50)
                    .map(|_| vec![rng.uniform(-3.0, 9.0), rng.normal()])
                    .collect::<Vec<_>>(),
            )
        };
        assert_eq!(a.predict(&probe), b.predict(&probe));
        let ia = a.importances();
        let ib = b.importances();
        assert_eq!(ia, ib);
    }

    #[test]
    fn importances_sum_to_one_and_favor_informative_axis() {
        let (x, y) = two_blob_data();
        let rf = RandomForest::fit(&x, &y, 2, &RfParams::default()).unwrap();
        let imp = rf.importances();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp[0] > imp[1]);
    }
}
