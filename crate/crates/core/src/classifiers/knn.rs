//! k-nearest-neighbor classifier. Fitting just stores the reference set;
//! inference bears the cost. Neighbors are ordered by (squared distance,
//! row index), vote ties break to the nearest neighbor among the tied
//! classes, and the kd-tree accelerator is prediction-identical to the
//! brute-force scan by construction.

use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::{squared_distance, Matrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub algorithm: KnnAlgorithm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnAlgorithm {
    Brute,
    KdTree,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            algorithm: KnnAlgorithm::KdTree,
        }
    }
}

/// Non-negative squared distance ordered by (value, index); the IEEE bit
/// pattern of a non-negative f64 sorts like the number itself.
type Neighbor = (u64, u32);

fn neighbor(dist_sq: f64, idx: u32) -> Neighbor {
    (dist_sq.to_bits(), idx)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KdNode {
    point: u32,
    dim: u16,
    left: i32,
    right: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KdTree {
    nodes: Vec<KdNode>,
    root: i32,
}

impl KdTree {
    fn build(x: &Matrix) -> KdTree {
        let mut indices: Vec<u32> = (0..x.rows() as u32).collect();
        let mut nodes = Vec::with_capacity(x.rows());
        let root = Self::build_rec(x, &mut indices[..], 0, &mut nodes);
        KdTree { nodes, root }
    }

    fn build_rec(x: &Matrix, idx: &mut [u32], depth: usize, nodes: &mut Vec<KdNode>) -> i32 {
        if idx.is_empty() {
            return -1;
        }
        let dim = depth % x.cols();
        idx.sort_by(|&a, &b| {
            let va = x[(a as usize, dim)];
            let vb = x[(b as usize, dim)];
            va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
        });
        let mid = idx.len() / 2;
        let point = idx[mid];
        let slot = nodes.len();
        nodes.push(KdNode {
            point,
            dim: dim as u16,
            left: -1,
            right: -1,
        });
        let (lo, rest) = idx.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = Self::build_rec(x, lo, depth + 1, nodes);
        let right = Self::build_rec(x, hi, depth + 1, nodes);
        nodes[slot].left = left;
        nodes[slot].right = right;
        slot as i32
    }

    fn knn(&self, x: &Matrix, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        heap.clear();
        self.search(self.root, x, query, k, heap);
    }

    fn search(&self, at: i32, x: &Matrix, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        if at < 0 {
            return;
        }
        let node = &self.nodes[at as usize];
        let point = node.point;
        let cand = neighbor(squared_distance(query, x.row(point as usize)), point);
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }

        let dim = node.dim as usize;
        let delta = query[dim] - x[(point as usize, dim)];
        let (near, far) = if delta <= 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, x, query, k, heap);
        // the far side may hold an equal-distance, lower-index neighbor, so
        // prune only when the axis distance strictly exceeds the worst kept
        let axis_sq = delta * delta;
        if heap.len() < k || axis_sq.to_bits() <= heap.peek().unwrap().0 {
            self.search(far, x, query, k, heap);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    x: Matrix,
    y: Vec<u32>,
    n_classes: usize,
    k: usize,
    algorithm: KnnAlgorithm,
    tree: Option<KdTree>,
}

impl KnnModel {
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &KnnParams,
    ) -> Result<KnnModel, ModelError> {
        if params.k == 0 {
            return Err(ModelError::InvalidParam("k must be positive".into()));
        }
        let tree = match params.algorithm {
            KnnAlgorithm::Brute => None,
            KnnAlgorithm::KdTree => Some(KdTree::build(x)),
        };
        Ok(KnnModel {
            x: x.clone(),
            y: y.to_vec(),
            n_classes,
            k: params.k,
            algorithm: params.algorithm,
            tree,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }

    pub fn predict_row(&self, query: &[f64]) -> u32 {
        let k = self.k.min(self.x.rows());
        let mut heap = BinaryHeap::with_capacity(k + 1);
        match (&self.tree, self.algorithm) {
            (Some(tree), KnnAlgorithm::KdTree) => tree.knn(&self.x, query, k, &mut heap),
            _ => {
                for idx in 0..self.x.rows() as u32 {
                    let cand = neighbor(squared_distance(query, self.x.row(idx as usize)), idx);
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
        }
        let mut neighbors = heap.into_sorted_vec();
        neighbors.truncate(k);
        self.vote(&neighbors)
    }

    fn vote(&self, neighbors: &[Neighbor]) -> u32 {
        let mut votes = vec![0u32; self.n_classes];
        for &(_, idx) in neighbors {
            votes[self.y[idx as usize] as usize] += 1;
        }
        let top = *votes.iter().max().unwrap();
        // first (nearest) neighbor whose class is among the tied winners
        for &(_, idx) in neighbors {
            let class = self.y[idx as usize];
            if votes[class as usize] == top {
                return class;
            }
        }
        unreachable!("at least one neighbor exists")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn fit_with(x: &Matrix, y: &[u32], k: usize, algorithm: KnnAlgorithm) -> KnnModel {
        let n_classes = *y.iter().max().unwrap() as usize + 1;
        KnnModel::fit(x, y, n_classes, &KnnParams { k, algorithm }).unwrap()
    }

    #[test]
    fn one_nn_memorizes_training_rows() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]]);
        let y = vec![0, 1, 2];
        for algorithm in [KnnAlgorithm::Brute, KnnAlgorithm::KdTree] {
            let model = fit_with(&x, &y, 1, algorithm);
            assert_eq!(model.predict(&x), y);
        }
    }

    #[test]
    fn vote_tie_breaks_to_nearest() {
        // query at origin: class 1 neighbor nearest, one vote each at k=2
        let x = Matrix::from_rows(&[vec![1.0], vec![-2.0]]);
        let y = vec![0, 1];
        let model = fit_with(&x, &y, 2, KnnAlgorithm::Brute);
        let q = Matrix::from_rows(&[vec![0.0]]);
        assert_eq!(model.predict(&q), vec![0]);
    }

    #[test]
    fn equal_distance_breaks_to_lower_index() {
        let x = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![3.0]]);
        let y = vec![1, 0, 1];
        // query 0: rows 0 and 1 both at distance 1; k=1 keeps row 0
        let model = fit_with(&x, &y, 1, KnnAlgorithm::Brute);
        let kd = fit_with(&x, &y, 1, KnnAlgorithm::KdTree);
        let q = Matrix::from_rows(&[vec![0.0]]);
        assert_eq!(model.predict(&q), vec![1]);
        assert_eq!(kd.predict(&q), vec![1]);
    }

    #[test]
    fn kd_tree_matches_brute_on_random_data() {
        let mut rng = Rng::from_seed(17);
        for (n, d, k) in [(50usize, 2usize, 3usize), (120, 3, 5), (200, 4, 7)] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| (rng.below(12) as f64) - 6.0).collect())
                .collect();
            let x = Matrix::from_rows(&rows);
            let y: Vec<u32> = (0..n).map(|_| rng.below(3) as u32).collect();
            let queries: Vec<Vec<f64>> = (0..60)
                .map(|_| (0..d).map(|_| rng.uniform(-7.0, 7.0)).collect())
                .collect();
            let q = Matrix::from_rows(&queries);
            let brute = fit_with(&x, &y, k, KnnAlgorithm::Brute);
            let kd = fit_with(&x, &y, k, KnnAlgorithm::KdTree);
            assert_eq!(brute.predict(&q), kd.predict(&q), "n={n} d={d} k={k}");
            // integer grid coordinates force plenty of exact distance ties
            assert_eq!(brute.predict(&x), kd.predict(&x));
        }
    }
}
