//! Brute-force reference implementations used to cross-check the fast
//! paths: an exhaustive-split CART, a full-sort k-NN scan, closed-form
//! two-dimensional Gaussian discriminants, characteristic-polynomial
//! eigenvalues for d <= 4, and leave-one-out 1-NN accuracy. These stay
//! deliberately naive and share no search code with the implementations
//! they check.

use rayon::prelude::*;

use crate::linalg::{squared_distance, Matrix};

// ---------------------------------------------------------------- CART ---

#[derive(Debug)]
enum OracleNode {
    Leaf(u32),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

pub struct OracleTree {
    root: OracleNode,
}

impl OracleTree {
    /// Exhaustive candidate enumeration: every midpoint of consecutive
    /// distinct sorted values of every feature, each partition evaluated
    /// from scratch by literally splitting on `x <= t`.
    pub fn fit(
        x: &Matrix,
        y: &[u32],
        n_classes: usize,
        max_depth: usize,
        min_samples_split: usize,
    ) -> OracleTree {
        let rows: Vec<usize> = (0..x.rows()).collect();
        OracleTree {
            root: build(x, y, n_classes, &rows, 0, max_depth, min_samples_split),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u32> {
        (0..x.rows())
            .map(|i| {
                let mut node = &self.root;
                loop {
                    match node {
                        OracleNode::Leaf(label) => return *label,
                        OracleNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            node = if x[(i, *feature)] <= *threshold {
                                left
                            } else {
                                right
                            };
                        }
                    }
                }
            })
            .collect()
    }
}

fn counts_of(y: &[u32], rows: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &r in rows {
        counts[y[r] as usize] += 1;
    }
    counts
}

fn majority(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best as u32
}

fn sum_sq(counts: &[u64]) -> i128 {
    counts.iter().map(|&c| (c as i128) * (c as i128)).sum()
}

#[allow(clippy::too_many_arguments)]
fn build(
    x: &Matrix,
    y: &[u32],
    n_classes: usize,
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    min_samples_split: usize,
) -> OracleNode {
    let counts = counts_of(y, rows, n_classes);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= max_depth || rows.len() < min_samples_split {
        return OracleNode::Leaf(majority(&counts));
    }

    let n = rows.len() as i128;
    let a_parent = sum_sq(&counts);
    // best = (num, den, feature, threshold, left rows, right rows)
    type Candidate = (i128, i128, usize, f64, Vec<usize>, Vec<usize>);
    let mut best: Option<Candidate> = None;
    for f in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[(r, f)]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for pair in values.windows(2) {
            let t = 0.5 * (pair[0] + pair[1]);
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x[(r, f)] <= t).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x[(r, f)] > t).collect();
            if left.is_empty() || right.is_empty() {
                continue;
            }
            let (n_l, n_r) = (left.len() as i128, right.len() as i128);
            let a_l = sum_sq(&counts_of(y, &left, n_classes));
            let a_r = sum_sq(&counts_of(y, &right, n_classes));
            let num = a_l * n_r + a_r * n_l;
            let den = n_l * n_r;
            if num * n < a_parent * den {
                continue; // would increase weighted impurity
            }
            let better = match &best {
                None => true,
                Some((bnum, bden, ..)) => num * bden > bnum * den,
            };
            if better {
                best = Some((num, den, f, t, left, right));
            }
        }
    }
    match best {
        None => OracleNode::Leaf(majority(&counts)),
        Some((_, _, feature, threshold, left, right)) => OracleNode::Split {
            feature,
            threshold,
            left: Box::new(build(x, y, n_classes, &left, depth + 1, max_depth, min_samples_split)),
            right: Box::new(build(
                x,
                y,
                n_classes,
                &right,
                depth + 1,
                max_depth,
                min_samples_split,
            )),
        },
    }
}

// ----------------------------------------------------------------- k-NN ---

/// Full-sort brute-force k-NN with the same ordering contract as the
/// classifier: neighbors by (squared distance, index), vote ties to the
/// nearest member of a tied class.
pub fn knn_bruteforce_predict(
    train_x: &Matrix,
    train_y: &[u32],
    n_classes: usize,
    k: usize,
    queries: &Matrix,
) -> Vec<u32> {
    let k = k.min(train_x.rows());
    (0..queries.rows())
        .map(|q| {
            let query = queries.row(q);
            let mut all: Vec<(u64, u32)> = (0..train_x.rows())
                .map(|i| {
                    (
                        squared_distance(query, train_x.row(i)).to_bits(),
                        i as u32,
                    )
                })
                .collect();
            all.sort_unstable();
            let neighbors = &all[..k];
            let mut votes = vec![0u32; n_classes];
            for &(_, idx) in neighbors {
                votes[train_y[idx as usize] as usize] += 1;
            }
            let top = *votes.iter().max().unwrap();
            neighbors
                .iter()
                .map(|&(_, idx)| train_y[idx as usize])
                .find(|&c| votes[c as usize] == top)
                .unwrap()
        })
        .collect()
}

/// Leave-one-out 1-NN accuracy, the sanity bound used before trusting
/// synthetic-data thresholds.
pub fn loo_1nn_accuracy(x: &Matrix, y: &[u32]) -> f64 {
    let n = x.rows();
    let hits: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut best = (u64::MAX, u32::MAX);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let cand = (squared_distance(row, x.row(j)).to_bits(), j as u32);
                if cand < best {
                    best = cand;
                }
            }
            usize::from(y[best.1 as usize] == y[i])
        })
        .sum();
    hits as f64 / n as f64
}

// -------------------------------------------- Gaussian discriminants ------

/// Closed-form LDA discriminant scores for 2-D data: explicit class means,
/// pooled population covariance with the same ridge rule as the model, and
/// an analytic 2x2 inverse.
pub fn lda_scores_2d(
    x: &Matrix,
    y: &[u32],
    ridge_scale: f64,
    queries: &Matrix,
) -> (Vec<u32>, Matrix) {
    assert_eq!(x.cols(), 2);
    let (classes, means, priors) = class_means_2d(x, y);
    let n = x.rows() as f64;
    let mut cov = [0.0f64; 3]; // a b c packed for [[a,b],[b,c]]
    for (i, &label) in y.iter().enumerate() {
        let k = classes.iter().position(|&c| c == label).unwrap();
        let dx = x[(i, 0)] - means[k].0;
        let dy = x[(i, 1)] - means[k].1;
        cov[0] += dx * dx;
        cov[1] += dx * dy;
        cov[2] += dy * dy;
    }
    for c in &mut cov {
        *c /= n;
    }
    let ridge = ridge_scale * (cov[0] + cov[2]) / 2.0;
    let (a, b, c) = (cov[0] + ridge, cov[1], cov[2] + ridge);
    let det = a * c - b * b;
    let inv = (c / det, -b / det, a / det);

    let mut scores = Matrix::zeros(queries.rows(), classes.len());
    for i in 0..queries.rows() {
        let (px, py) = (queries[(i, 0)], queries[(i, 1)]);
        for (k, &(mx, my)) in means.iter().enumerate() {
            let wx = inv.0 * mx + inv.1 * my;
            let wy = inv.1 * mx + inv.2 * my;
            scores[(i, k)] =
                px * wx + py * wy - 0.5 * (mx * wx + my * wy) + priors[k].ln();
        }
    }
    (classes, scores)
}

/// Closed-form QDA scores for 2-D data, per-class covariance and ridge.
pub fn qda_scores_2d(
    x: &Matrix,
    y: &[u32],
    ridge_scale: f64,
    queries: &Matrix,
) -> (Vec<u32>, Matrix) {
    assert_eq!(x.cols(), 2);
    let (classes, means, priors) = class_means_2d(x, y);
    let mut covs = Vec::with_capacity(classes.len());
    for (k, &class) in classes.iter().enumerate() {
        let rows: Vec<usize> = y.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).collect();
        let mut cov = [0.0f64; 3];
        for &i in &rows {
            let dx = x[(i, 0)] - means[k].0;
            let dy = x[(i, 1)] - means[k].1;
            cov[0] += dx * dx;
            cov[1] += dx * dy;
            cov[2] += dy * dy;
        }
        for c in &mut cov {
            *c /= rows.len() as f64;
        }
        let ridge = ridge_scale * (cov[0] + cov[2]) / 2.0;
        covs.push((cov[0] + ridge, cov[1], cov[2] + ridge));
    }

    let mut scores = Matrix::zeros(queries.rows(), classes.len());
    for i in 0..queries.rows() {
        let (px, py) = (queries[(i, 0)], queries[(i, 1)]);
        for (k, &(mx, my)) in means.iter().enumerate() {
            let (a, b, c) = covs[k];
            let det = a * c - b * b;
            let (dx, dy) = (px - mx, py - my);
            let quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
            scores[(i, k)] = -0.5 * det.ln() - 0.5 * quad + priors[k].ln();
        }
    }
    (classes, scores)
}

#[allow(clippy::type_complexity)]
fn class_means_2d(x: &Matrix, y: &[u32]) -> (Vec<u32>, Vec<(f64, f64)>, Vec<f64>) {
    let mut classes: Vec<u32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut means = Vec::with_capacity(classes.len());
    let mut priors = Vec::with_capacity(classes.len());
    for &class in &classes {
        let rows: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let mx = rows.iter().map(|&i| x[(i, 0)]).sum::<f64>() / rows.len() as f64;
        let my = rows.iter().map(|&i| x[(i, 1)]).sum::<f64>() / rows.len() as f64;
        means.push((mx, my));
        priors.push(rows.len() as f64 / y.len() as f64);
    }
    (classes, means, priors)
}

// ------------------------------------------------ eigenvalues, d <= 4 -----

/// Eigenvalues of a small symmetric matrix through its characteristic
/// polynomial (Faddeev-LeVerrier coefficients, then real-root isolation by
/// recursive bisection between critical points). Descending order.
pub fn charpoly_eigenvalues(m: &Matrix) -> Vec<f64> {
    let d = m.rows();
    assert!((1..=4).contains(&d) && m.cols() == d, "supported for 1 <= d <= 4");
    if d == 1 {
        return vec![m[(0, 0)]];
    }
    let coeffs = charpoly_coefficients(m);
    let mut roots = real_roots(&coeffs);
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots
}

/// Monic characteristic polynomial coefficients [1, c1, ..., cn].
fn charpoly_coefficients(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = a.clone();
    for k in 1..=n {
        let c = -trace(&m) / k as f64;
        coeffs.push(c);
        if k == n {
            break;
        }
        // M_{k+1} = A (M_k + c_k I)
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += c;
        }
        m = a.matmul(&shifted);
    }
    coeffs
}

fn trace(m: &Matrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)]).sum()
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    let mut out: Vec<f64> = coeffs[..n]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (n - i) as f64)
        .collect();
    let lead = out[0];
    for c in &mut out {
        *c /= lead;
    }
    out
}

/// All real roots of a monic polynomial whose roots are known to be real
/// (symmetric-matrix characteristic polynomials qualify).
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let degree = coeffs.len() - 1;
    if degree == 1 {
        return vec![-coeffs[1]];
    }
    if degree == 2 {
        let (b, c) = (coeffs[1], coeffs[2]);
        let disc = (b * b - 4.0 * c).max(0.0);
        let s = disc.sqrt();
        return vec![(-b + s) / 2.0, (-b - s) / 2.0];
    }
    let crits = real_roots(&derivative(coeffs));
    let bound = 1.0 + coeffs[1..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut points: Vec<f64> = Vec::with_capacity(crits.len() + 2);
    points.push(-bound);
    points.extend(crits.iter().copied());
    points.push(bound);
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();

    let mut roots = Vec::with_capacity(degree);
    for pair in points.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (flo, fhi) = (eval_poly(coeffs, lo), eval_poly(coeffs, hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fmid = eval_poly(coeffs, mid);
            if fmid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fmid.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if eval_poly(coeffs, points[points.len() - 1]) == 0.0 {
        roots.push(points[points.len() - 1]);
    }

    // repeated roots touch zero at a critical point without a sign change
    while roots.len() < degree {
        let filler = crits
            .iter()
            .copied()
            .min_by(|&a, &b| {
                eval_poly(coeffs, a)
                    .abs()
                    .partial_cmp(&eval_poly(coeffs, b).abs())
                    .unwrap()
            })
            .expect("critical point exists for degree >= 2");
        roots.push(filler);
    }
    roots.truncate(degree);
    roots
}
