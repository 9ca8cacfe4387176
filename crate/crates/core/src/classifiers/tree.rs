//! CART decision tree with Gini impurity. Split candidates are midpoints of
//! consecutive distinct sorted values; candidate scores are compared with
//! exact integer rationals so split selection never depends on float
//! summation order, and ties break to the lowest feature index then lowest
//! threshold.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams {
            max_depth: 30,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf {
        label: u32,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    /// Unnormalized per-feature impurity decrease.
    importance: Vec<f64>,
}

/// Exact score of a candidate split: maximizing
/// sum(c_L^2)/n_L + sum(c_R^2)/n_R minimizes weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: i128,
    den: i128,
}

impl SplitScore {
    fn new(a_left: i128, n_left: i128, a_right: i128, n_right: i128) -> SplitScore {
        SplitScore {
            num: a_left * n_right + a_right * n_left,
            den: n_left * n_right,
        }
    }

    fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }

    /// At least as good as leaving the node unsplit. Zero-decrease splits
    /// are kept: parity problems like XOR need them, and children are
    /// strictly smaller so recursion still terminates.
    fn no_worse_than_parent(&self, a_parent: i128, n_parent: i128) -> bool {
        self.num * n_parent >= a_parent * self.den
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    left_len: usize,
    score: SplitScore,
    left_counts: Vec<u64>,
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [u32],
    n_classes: usize,
    params: &'a DtParams,
    /// Features considered per node (random forest mode); None means all.
    feature_sample: Option<usize>,
    rng: Option<&'a mut Rng>,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    in_left: Vec<bool>,
    n_root: f64,
}

impl DecisionTree {
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &DtParams,
    ) -> Result<DecisionTree, ModelError> {
        let rows: Vec<u32> = (0..x.rows() as u32).collect();
        DecisionTree::fit_on_rows(x, y, n_classes, params, &rows, None, None)
    }

    /// Shared entry for plain trees and forest members (bootstrapped rows
    /// and per-node feature sampling).
    pub(crate) fn fit_on_rows(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        params: &DtParams,
        rows: &[u32],
        feature_sample: Option<usize>,
        rng: Option<&mut Rng>,
    ) -> Result<DecisionTree, ModelError> {
        if params.max_depth == 0 || params.min_samples_split < 2 {
            return Err(ModelError::InvalidParam(
                "max_depth >= 1 and min_samples_split >= 2 required".into(),
            ));
        }
        let d = x.cols();
        // presort every feature once; splits partition these lists stably
        let cols: Vec<Vec<u32>> = (0..d)
            .map(|f| {
                let mut idx = rows.to_vec();
                idx.sort_by(|&a, &b| {
                    let va = x[(a as usize, f)];
                    let vb = x[(b as usize, f)];
                    va.partial_cmp(&vb).unwrap().then(a.cmp(&b))
                });
                idx
            })
            .collect();
        let mut builder = TreeBuilder {
            x,
            y,
            n_classes,
            params,
            feature_sample,
            rng,
            nodes: Vec::new(),
            importance: vec![0.0; d],
            in_left: vec![false; x.rows()],
            n_root: rows.len() as f64,
        };
        builder.build(cols, 0);
        Ok(DecisionTree {
            nodes: builder.nodes,
            n_features: d,
            importance: builder.importance,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn importances(&self) -> Vec<f64> {
        self.importance.clone()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

fn majority(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best as u32
}

fn gini(counts: &[u64], n: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / n;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn sum_squares(counts: &[u64]) -> i128 {
    counts.iter().map(|&c| (c as i128) * (c as i128)).sum()
}

impl TreeBuilder<'_> {
    fn class_counts(&self, rows: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &r in rows {
            counts[self.y[r as usize] as usize] += 1;
        }
        counts
    }

    fn build(&mut self, cols: Vec<Vec<u32>>, depth: usize) -> u32 {
        let rows = &cols[0];
        let n = rows.len();
        let counts = self.class_counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

        let stop =
            pure || depth >= self.params.max_depth || n < self.params.min_samples_split;
        let best = if stop { None } else { self.best_split(&cols, &counts) };

        match best {
            None => {
                let idx = self.nodes.len() as u32;
                self.nodes.push(Node::Leaf {
                    label: majority(&counts),
                });
                idx
            }
            Some(split) => {
                self.record_importance(&split, &counts, n);

                // mark the left rows through the chosen feature's prefix
                let chosen = &cols[split.feature];
                for &r in &chosen[..split.left_len] {
                    self.in_left[r as usize] = true;
                }
                let mut left_cols = Vec::with_capacity(cols.len());
                let mut right_cols = Vec::with_capacity(cols.len());
                for col in &cols {
                    let mut left = Vec::with_capacity(split.left_len);
                    let mut right = Vec::with_capacity(n - split.left_len);
                    for &r in col {
                        if self.in_left[r as usize] {
                            left.push(r);
                        } else {
                            right.push(r);
                        }
                    }
                    left_cols.push(left);
                    right_cols.push(right);
                }
                for &r in &cols[split.feature][..split.left_len] {
                    self.in_left[r as usize] = false;
                }
                drop(cols);

                let idx = self.nodes.len() as u32;
                self.nodes.push(Node::Leaf { label: 0 }); // placeholder
                let left = self.build(left_cols, depth + 1);
                let right = self.build(right_cols, depth + 1);
                self.nodes[idx as usize] = Node::Split {
                    feature: split.feature as u32,
                    threshold: split.threshold,
                    left,
                    right,
                };
                idx
            }
        }
    }

    fn record_importance(&mut self, split: &BestSplit, counts: &[u64], n: usize) {
        let n_f = n as f64;
        let n_left: u64 = split.left_counts.iter().sum();
        let right_counts: Vec<u64> = counts
            .iter()
            .zip(&split.left_counts)
            .map(|(&t, &l)| t - l)
            .collect();
        let n_right = n as u64 - n_left;
        let child =
            (n_left as f64 / n_f) * gini(&split.left_counts, n_left as f64)
                + (n_right as f64 / n_f) * gini(&right_counts, n_right as f64);
        let decrease = gini(counts, n_f) - child;
        self.importance[split.feature] += (n_f / self.n_root) * decrease;
    }

    fn candidate_features(&mut self, d: usize) -> Vec<usize> {
        match self.feature_sample {
            None => (0..d).collect(),
            Some(m) => {
                let rng = self.rng.as_mut().expect("forest mode needs an rng");
                let mut sample = rng.sample_indices(d, m.min(d));
                sample.sort_unstable();
                sample
            }
        }
    }

    fn best_split(&mut self, cols: &[Vec<u32>], counts: &[u64]) -> Option<BestSplit> {
        let n = cols[0].len();
        let a_parent = sum_squares(counts);
        let features = self.candidate_features(cols.len());
        let mut best: Option<BestSplit> = None;

        for f in features {
            let order = &cols[f];
            // group boundaries of equal feature values
            let mut cum = vec![0u64; self.n_classes];
            let mut a_left: i128 = 0;
            let mut pos = 0usize;
            while pos < n {
                let value = self.x[(order[pos] as usize, f)];
                let mut end = pos + 1;
                while end < n && self.x[(order[end] as usize, f)] == value {
                    end += 1;
                }
                if end == n {
                    break; // last group: no boundary after it
                }
                // group joins the left side
                for &r in &order[pos..end] {
                    let label = self.y[r as usize] as usize;
                    a_left += 2 * cum[label] as i128 + 1;
                    cum[label] += 1;
                }
                let next_value = self.x[(order[end] as usize, f)];
                let threshold = 0.5 * (value + next_value);

                // rounding can land the midpoint on the next value; then the
                // next group is <= threshold and belongs to the left side
                let (cand_len, cand_counts, cand_a) = if threshold >= next_value {
                    let mut next_end = end + 1;
                    while next_end < n && self.x[(order[next_end] as usize, f)] == next_value {
                        next_end += 1;
                    }
                    if next_end == n {
                        pos = end;
                        continue; // right side would be empty
                    }
                    let mut tmp = cum.clone();
                    let mut a_tmp = a_left;
                    for &r in &order[end..next_end] {
                        let label = self.y[r as usize] as usize;
                        a_tmp += 2 * tmp[label] as i128 + 1;
                        tmp[label] += 1;
                    }
                    (next_end, tmp, a_tmp)
                } else {
                    (end, cum.clone(), a_left)
                };

                let n_l = cand_len as i128;
                let n_r = (n - cand_len) as i128;
                let a_r: i128 = counts
                    .iter()
                    .zip(&cand_counts)
                    .map(|(&t, &l)| {
                        let r = (t - l) as i128;
                        r * r
                    })
                    .sum();
                let score = SplitScore::new(cand_a, n_l, a_r, n_r);
                if score.no_worse_than_parent(a_parent, n as i128)
                    && best.as_ref().is_none_or(|b| score.beats(&b.score))
                {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        left_len: cand_len,
                        score,
                        left_counts: cand_counts,
                    });
                }
                pos = end;
            }
        }
        best
    }
}
