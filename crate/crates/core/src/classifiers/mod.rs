//! The six classifier families behind one fit/predict contract: decision
//! tree, random forest, k-NN, LDA, QDA and a linear one-vs-rest SVM, plus
//! Gini feature importance for the tree models.

mod discriminant;
mod forest;
mod knn;
mod svm;
mod tree;

pub use discriminant::{DiscriminantModel, LdaParams, QdaParams};
pub use forest::{FeatureSubset, RandomForest, RfParams};
pub use knn::{KnnAlgorithm, KnnModel, KnnParams};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, DtParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("labels and rows disagree: {rows} rows, {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance is singular even after ridge regularization ({scope})")]
    SingularCovariance { scope: String },
    #[error("feature importance requires a tree model")]
    NotATree,
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Dt,
    Rf,
    Knn,
    Lda,
    Qda,
    SvmLinear,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Dt => "DT",
            Family::Rf => "RF",
            Family::Knn => "k-NN",
            Family::Lda => "LDA",
            Family::Qda => "QDA",
            Family::SvmLinear => "SVM",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Some(Family::Dt),
            "rf" => Some(Family::Rf),
            "knn" | "k-nn" => Some(Family::Knn),
            "lda" => Some(Family::Lda),
            "qda" => Some(Family::Qda),
            "svm" | "svm-linear" => Some(Family::SvmLinear),
        _ => None,
        }
    }
}

/// A model family with its hyperparameters; every randomized family carries
/// an explicit seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelSpec {
    DecisionTree(DtParams),
    RandomForest(RfParams),
    Knn(KnnParams),
    Lda(LdaParams),
    Qda(QdaParams),
    LinearSvm(SvmParams),
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::DecisionTree(_) => Family::Dt,
            ModelSpec::RandomForest(_) => Family::Rf,
            ModelSpec::Knn(_) => Family::Knn,
            ModelSpec::Lda(_) => Family::Lda,
            ModelSpec::Qda(_) => Family::Qda,
            ModelSpec::LinearSvm(_) => Family::SvmLinear,
        }
    }

    pub fn default_for(family: Family) -> ModelSpec {
        match family {
            Family::Dt => ModelSpec::DecisionTree(DtParams::default()),
            Family::Rf => ModelSpec::RandomForest(RfParams::default()),
            Family::Knn => ModelSpec::Knn(KnnParams::default()),
            Family::Lda => ModelSpec::Lda(LdaParams::default()),
            Family::Qda => ModelSpec::Qda(QdaParams::default()),
            Family::SvmLinear => ModelSpec::LinearSvm(SvmParams::default()),
        }
    }

    /// Comparison-table order: LDA, QDA, SVM, k-NN, DT, RF.
    pub fn all_defaults() -> Vec<ModelSpec> {
        [
            Family::Lda,
            Family::Qda,
            Family::SvmLinear,
            Family::Knn,
            Family::Dt,
            Family::Rf,
        ]
        .into_iter()
        .map(ModelSpec::default_for)
        .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelKind {
    Dt(DecisionTree),
    Rf(RandomForest),
    Knn(KnnModel),
    Lda(DiscriminantModel),
    Qda(DiscriminantModel),
    Svm(LinearSvm),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: String,
    pub family: Family,
    pub kind: ModelKind,
    pub n_classes: usize,
    pub n_features: usize,
    /// Wall-clock fit time, excluding I/O.
    pub train_time_s: f64,
}

pub const MODEL_VERSION: &str = "model-v1";

fn validate_training(x: &Matrix, y: &[u32]) -> Result<usize, ModelError> {
    if x.rows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.rows() != y.len() {
        return Err(ModelError::LabelCount {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if !x.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok(*y.iter().max().unwrap() as usize + 1)
}

pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[u32]) -> Result<TrainedModel, ModelError> {
    let n_classes = validate_training(x, y)?;
    let started = std::time::Instant::now();
    let kind = match spec {
        ModelSpec::DecisionTree(p) => ModelKind::Dt(DecisionTree::fit(x, y, n_classes, p)?),
        ModelSpec::RandomForest(p) => ModelKind::Rf(RandomForest::fit(x, y, n_classes, p)?),
        ModelSpec::Knn(p) => ModelKind::Knn(KnnModel::fit(x, y, n_classes, p)?),
        ModelSpec::Lda(p) => ModelKind::Lda(DiscriminantModel::fit_lda(x, y, n_classes, p)?),
        ModelSpec::Qda(p) => ModelKind::Qda(DiscriminantModel::fit_qda(x, y, n_classes, p)?),
        ModelSpec::LinearSvm(p) => ModelKind::Svm(LinearSvm::fit(x, y, n_classes, p)?),
    };
    Ok(TrainedModel {
        schema_version: MODEL_VERSION.to_string(),
        family: spec.family(),
        kind,
        n_classes,
        n_features: x.cols(),
        train_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Predict labels for every row; also reports the wall-clock inference time.
pub fn predict(model: &TrainedModel, x: &Matrix) -> Result<(Vec<u32>, f64), ModelError> {
    if x.cols() != model.n_features {
        return Err(ModelError::DimensionMismatch {
            expected: model.n_features,
            got: x.cols(),
        });
    }
    let started = std::time::Instant::now();
    let labels = match &model.kind {
        ModelKind::Dt(m) => m.predict(x),
        ModelKind::Rf(m) => m.predict(x),
        ModelKind::Knn(m) => m.predict(x),
        ModelKind::Lda(m) | ModelKind::Qda(m) => m.predict(x),
        ModelKind::Svm(m) => m.predict(x),
    };
    Ok((labels, started.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// (feature name, importance), non-negative, summing to 1 unless the
    /// model never split, sorted descending.
    pub entries: Vec<(String, f64)>,
}

/// Gini importance of a fitted DT, or the across-tree mean for an RF.
pub fn gini_importance(
    model: &TrainedModel,
    feature_names: &[String],
) -> Result<ImportanceReport, ModelError> {
    let raw = match &model.kind {
        ModelKind::Dt(m) => m.importances(),
        ModelKind::Rf(m) => m.importances(),
        _ => return Err(ModelError::NotATree),
    };
    let names: Vec<String> = if feature_names.is_empty() {
        (0..model.n_features).map(|i| format!("f{i}")).collect()
    } else {
        feature_names.to_vec()
    };
    if names.len() != raw.len() {
        return Err(ModelError::DimensionMismatch {
            expected: raw.len(),
            got: names.len(),
        });
    }
    let total: f64 = raw.iter().sum();
    let mut entries: Vec<(String, f64)> = names
        .into_iter()
        .zip(raw.iter().map(|&v| if total > 0.0 { v / total } else { 0.0 }))
        .collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(ImportanceReport { entries })
}

impl TrainedModel {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<TrainedModel> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn blob_data(seed: u64) -> (Matrix, Vec<u32>) {
        let mut rng = Rng::from_seed(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for class in 0..3u32 {
            let (cx, cy) = [(0.0, 0.0), (9.0, 0.0), (0.0, 9.0)][class as usize];
            for _ in 0..25 {
                rows.push(vec![cx + rng.normal(), cy + rng.normal()]);
                y.push(class);
            }
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn every_family_handles_constant_labels() {
        // the points carry variance in both dimensions so the Gaussian
        // covariances stay invertible
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 0.0]]);
        let y = vec![2u32, 2, 2];
        for family in [
            Family::Dt,
            Family::Rf,
            Family::Knn,
            Family::Lda,
            Family::Qda,
            Family::SvmLinear,
        ] {
            let spec = ModelSpec::default_for(family);
            let model = fit(&spec, &x, &y).unwrap();
            let probe = Matrix::from_rows(&[vec![0.0, 0.0], vec![100.0, -3.0]]);
            let (preds, _) = predict(&model, &probe).unwrap();
            assert_eq!(preds, vec![2, 2], "{family:?}");
        }
    }

    #[test]
    fn knn_stores_the_reference_set_and_pays_at_inference() {
        // fitting does no optimization, so fit is fast even when inference
        // carries the scan cost; this just pins the lazy-learning contract
        let (x, y) = blob_data(3);
        let model = fit(&ModelSpec::default_for(Family::Knn), &x, &y).unwrap();
        let (preds, infer_time) = predict(&model, &x).unwrap();
        assert_eq!(preds, y);
        assert!(infer_time >= 0.0);
        assert!(model.train_time_s >= 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (x, y) = blob_data(4);
        let model = fit(&ModelSpec::default_for(Family::Dt), &x, &y).unwrap();
        let bad = Matrix::from_rows(&[vec![1.0]]);
        assert!(matches!(
            predict(&model, &bad),
            Err(ModelError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            fit(&ModelSpec::default_for(Family::Dt), &x, &y[..10]),
            Err(ModelError::LabelCount { .. })
        ));
    }

    #[test]
    fn importance_normalizes_and_ignores_label_names() {
        let (x, y) = blob_data(5);
        let model = fit(&ModelSpec::default_for(Family::Dt), &x, &y).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let report = gini_importance(&model, &names).unwrap();
        let total: f64 = report.entries.iter().map(|(_, v)| v).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(report.entries.iter().all(|(_, v)| *v >= 0.0));
        assert!(report.entries.windows(2).all(|w| w[0].1 >= w[1].1));

        // relabeling classes leaves the importances untouched
        let permuted: Vec<u32> = y.iter().map(|&l| (l + 1) % 3).collect();
        let model_p = fit(&ModelSpec::default_for(Family::Dt), &x, &permuted).unwrap();
        let report_p = gini_importance(&model_p, &names).unwrap();
        for ((na, va), (nb, vb)) in report.entries.iter().zip(&report_p.entries) {
            assert_eq!(na, nb);
            assert!((va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn importance_requires_a_tree_model() {
        let (x, y) = blob_data(6);
        let model = fit(&ModelSpec::default_for(Family::Knn), &x, &y).unwrap();
        assert!(matches!(
            gini_importance(&model, &[]),
            Err(ModelError::NotATree)
        ));
    }

    #[test]
    fn trained_model_json_round_trip() {
        let (x, y) = blob_data(7);
        for family in [Family::Dt, Family::Lda, Family::SvmLinear] {
            let model = fit(&ModelSpec::default_for(family), &x, &y).unwrap();
            let json = model.to_json().unwrap();
            let back = TrainedModel::from_json(&json).unwrap();
            assert_eq!(back.schema_version, MODEL_VERSION);
            let (a, _) = predict(&model, &x).unwrap();
            let (b, _) = predict(&back, &x).unwrap();
            assert_eq!(a, b, "{family:?}");
        }
    }
}
