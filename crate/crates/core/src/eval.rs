//! Evaluation: confusion-matrix metrics with support-weighted averages and
//! benign FPR, the PCA variance sweep under stratified cross-validation,
//! and the with/without-PCA model comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{self, Family, ModelError, ModelSpec, TrainedModel};
use crate::dataset::{stratified_kfold, DataError, Dataset, Scaler};
use crate::linalg::Matrix;
use crate::pca::{pca_fit, pca_fit_named, PcaError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty test set")]
    EmptyTestSet,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Pca(#[from] PcaError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// True when any denominator was zero and the convention value 0 was
    /// reported.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Rows are truth, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub weighted_precision: f64,
    /// Support-weighted recall collapses to sum(TP)/N, so this equals
    /// `accuracy` exactly, not just approximately.
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// Benign rows predicted non-benign over benign rows; None when the
    /// test set has no benign (class 0) rows.
    pub fpr_benign: Option<f64>,
    pub train_time_s: f64,
    pub infer_time_s: f64,
}

impl EvalReport {
    pub fn from_confusion(
        confusion: Vec<Vec<u64>>,
        class_names: Vec<String>,
    ) -> Result<EvalReport, EvalError> {
        let c = confusion.len();
        assert!(confusion.iter().all(|row| row.len() == c), "square matrix");
        assert_eq!(class_names.len(), c);
        let n: u64 = confusion.iter().flatten().sum();
        if n == 0 {
            return Err(EvalError::EmptyTestSet);
        }

        let mut per_class = Vec::with_capacity(c);
        let mut tp_total = 0u64;
        let mut weighted_precision = 0.0;
        let mut weighted_f1 = 0.0;
        for k in 0..c {
            let support: u64 = confusion[k].iter().sum();
            let tp = confusion[k][k];
            let predicted: u64 = (0..c).map(|i| confusion[i][k]).sum();
            tp_total += tp;

            let mut zero_division = false;
            let precision = if predicted == 0 {
                zero_division = true;
                0.0
            } else {
                tp as f64 / predicted as f64
            };
            let recall = if support == 0 {
                zero_division = true;
                0.0
            } else {
                tp as f64 / support as f64
            };
            let f1 = if precision + recall == 0.0 {
                zero_division = true;
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            weighted_precision += support as f64 * precision;
            weighted_f1 += support as f64 * f1;
            per_class.push(ClassMetrics {
                class: class_names[k].clone(),
                precision,
                recall,
                f1,
                support,
                zero_division,
            });
        }

        let accuracy = tp_total as f64 / n as f64;
        let benign_support = per_class[0].support;
        let fpr_benign = if benign_support == 0 {
            None
        } else {
            Some((benign_support - confusion[0][0]) as f64 / benign_support as f64)
        };
        Ok(EvalReport {
            confusion,
            class_names,
            per_class,
            accuracy,
            weighted_precision: weighted_precision / n as f64,
            // sum_k support_k * (TP_k / support_k) / N telescopes to
            // sum(TP)/N; computing it that way keeps the identity exact
            weighted_recall: accuracy,
            weighted_f1: weighted_f1 / n as f64,
            fpr_benign,
            train_time_s: 0.0,
            infer_time_s: 0.0,
        })
    }

    pub fn n_rows(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

pub fn confusion_matrix(truth: &[u32], predicted: &[u32], n_classes: usize) -> Vec<Vec<u64>> {
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t as usize][p as usize] += 1;
    }
    confusion
}

/// Predict on a test matrix and score against the truth labels.
pub fn evaluate(
    model: &TrainedModel,
    x: &Matrix,
    y: &[u32],
    class_names: &[String],
) -> Result<EvalReport, EvalError> {
    if x.rows() == 0 {
        return Err(EvalError::EmptyTestSet);
    }
    let (predicted, infer_time_s) = classifiers::predict(model, x)?;
    let n_classes = class_names.len().max(model.n_classes);
    let names: Vec<String> = (0..n_classes)
        .map(|i| {
            class_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("class_{i}"))
        })
        .collect();
    let mut report = EvalReport::from_confusion(confusion_matrix(y, &predicted, n_classes), names)?;
    report.train_time_s = model.train_time_s;
    report.infer_time_s = infer_time_s;
    Ok(report)
}

pub fn evaluate_dataset(model: &TrainedModel, ds: &Dataset) -> Result<EvalReport, EvalError> {
    evaluate(model, &ds.x, &ds.y, &ds.class_names)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub variance_target: f64,
    /// Components chosen on the full training split at this target.
    pub n_components: usize,
    /// Fold times are summed; metrics are averaged over folds.
    pub train_time_s: f64,
    pub infer_time_s: f64,
    pub time_s: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: Option<f64>,
}

pub const DEFAULT_SWEEP_TARGETS: [f64; 7] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99];

/// Per target: Scaler -> PCA (fit on the fold-train) -> component cut ->
/// classifier, scored on the fold-validate split.
pub fn variance_sweep(
    train: &Dataset,
    targets: &[f64],
    folds: usize,
    seed: u64,
    spec: &ModelSpec,
) -> Result<Vec<SweepRow>, EvalError> {
    let fold_indices = stratified_kfold(train, folds, seed)?;

    // reference component counts from the full training split
    let full_scaler = Scaler::fit(&train.x);
    let full_pca = pca_fit(&full_scaler.transform(&train.x)?)?;

    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let n_components = full_pca.select_components(target)?;
        let mut train_time_s = 0.0;
        let mut infer_time_s = 0.0;
        let mut accuracy = 0.0;
        let mut precision = 0.0;
        let mut recall = 0.0;
        let mut f1 = 0.0;
        let mut fpr_sum = 0.0;
        let mut fpr_folds = 0usize;
        for (train_idx, val_idx) in &fold_indices {
            let fold_train = train.subset(train_idx, "fold-train");
            let fold_val = train.subset(val_idx, "fold-validate");

            let scaler = Scaler::fit(&fold_train.x);
            let pca = pca_fit(&scaler.transform(&fold_train.x)?)?;
            let k = pca.select_components(target)?;
            let train_x = pca.transform(&scaler.transform(&fold_train.x)?, k)?;
            let val_x = pca.transform(&scaler.transform(&fold_val.x)?, k)?;

            let model = classifiers::fit(spec, &train_x, &fold_train.y)?;
            let report = evaluate(&model, &val_x, &fold_val.y, &train.class_names)?;
            train_time_s += report.train_time_s;
            infer_time_s += report.infer_time_s;
            accuracy += report.accuracy;
            precision += report.weighted_precision;
            recall += report.weighted_recall;
            f1 += report.weighted_f1;
            if let Some(fpr) = report.fpr_benign {
                fpr_sum += fpr;
                fpr_folds += 1;
            }
        }
        let nf = fold_indices.len() as f64;
        rows.push(SweepRow {
            variance_target: target,
            n_components,
            train_time_s,
            infer_time_s,
            time_s: train_time_s + infer_time_s,
            accuracy: accuracy / nf,
            precision: precision / nf,
            recall: recall / nf,
            f1: f1 / nf,
            fpr: (fpr_folds > 0).then(|| fpr_sum / fpr_folds as f64),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefitReport {
    pub selected_features: Vec<String>,
    pub eval: EvalReport,
}

/// Keep only the `n_top` most important columns, refit a decision tree on
/// them and score it on the test split.
pub fn refit_on_top_features(
    train: &Dataset,
    test: &Dataset,
    importance: &crate::classifiers::ImportanceReport,
    n_top: usize,
    params: &crate::classifiers::DtParams,
) -> Result<(TrainedModel, RefitReport), EvalError> {
    let n_top = n_top.min(train.n_features());
    // columns keep their original order so n_top = d is the identity and
    // feature-index tie-breaks match the plain fit
    let mut keep: Vec<usize> = importance
        .entries
        .iter()
        .take(n_top)
        .map(|(name, _)| {
            train
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| ModelError::InvalidParam(format!("unknown feature `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    keep.sort_unstable();
    let selected: Vec<String> = keep
        .iter()
        .map(|&i| train.feature_names[i].clone())
        .collect();
    let train_x = train.x.select_columns(&keep);
    let test_x = test.x.select_columns(&keep);
    let model = classifiers::fit(&ModelSpec::DecisionTree(params.clone()), &train_x, &train.y)?;
    let eval = evaluate(&model, &test_x, &test.y, &train.class_names)?;
    Ok((
        model,
        RefitReport {
            selected_features: selected,
            eval,
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub family: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: Option<f64>,
    pub train_time_s: f64,
    pub infer_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub with_pca: bool,
    pub variance_target: Option<f64>,
    pub n_components: Option<usize>,
    pub rows: Vec<CompareRow>,
    /// Full per-family evaluation reports, confusion matrices included.
    pub reports: Vec<EvalReport>,
    /// Per-attack breakdown of the chosen model on the test split.
    pub breakdown_family: String,
    pub per_attack: Vec<ClassMetrics>,
}

/// One arm of the with/without-PCA comparison. The Z-score scaler is always
/// fitted on the training split; the PCA arm additionally projects both
/// splits onto the variance-target cut.
pub fn compare_models(
    train: &Dataset,
    test: &Dataset,
    with_pca: bool,
    variance_target: f64,
    specs: &[ModelSpec],
    breakdown_family: Family,
) -> Result<CompareReport, EvalError> {
    let scaler = Scaler::fit(&train.x);
    let train_scaled = scaler.transform(&train.x)?;
    let test_scaled = scaler.transform(&test.x)?;
    let (train_x, test_x, n_components) = if with_pca {
        let pca = pca_fit_named(&train_scaled, &train.feature_names)?;
        let k = pca.select_components(variance_target)?;
        (
            pca.transform(&train_scaled, k)?,
            pca.transform(&test_scaled, k)?,
            Some(k),
        )
    } else {
        (train_scaled, test_scaled, None)
    };

    let mut rows = Vec::with_capacity(specs.len());
    let mut reports = Vec::with_capacity(specs.len());
    let mut per_attack = Vec::new();
    for spec in specs {
        let model = classifiers::fit(spec, &train_x, &train.y)?;
        let report = evaluate(&model, &test_x, &test.y, &train.class_names)?;
        if spec.family() == breakdown_family {
            per_attack = report.per_class.clone();
        }
        rows.push(CompareRow {
            family: spec.family().as_str().to_string(),
            accuracy: report.accuracy,
            precision: report.weighted_precision,
            recall: report.weighted_recall,
            f1: report.weighted_f1,
            fpr: report.fpr_benign,
            train_time_s: report.train_time_s,
            infer_time_s: report.infer_time_s,
        });
        reports.push(report);
    }
    Ok(CompareReport {
        with_pca,
        variance_target: with_pca.then_some(variance_target),
        n_components,
        rows,
        reports,
        breakdown_family: breakdown_family.as_str().to_string(),
        per_attack,
    })
}
