//! Dataset loading and preparation: CSV ingest with schema mapping, row
//! sanitation, excluded-column removal, stratified splitting/folding and
//! Z-score normalization.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{self, ColumnKind};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// The three URG-related columns plus the identification columns removed
/// before learning.
pub const EXCLUDED_URG_COLUMNS: [&str; 3] = ["fwd_urg_cnt", "bwd_urg_cnt", "flag_urg"];
pub const IDENTIFICATION_COLUMNS: [&str; 7] = [
    "flow_id", "src_ip", "src_port", "dst_ip", "dst_port", "protocol", "timestamp",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{0}: file has no header row")]
    MissingHeader(String),
    #[error("{0}: no usable data rows")]
    Empty(String),
    #[error("unknown column `{0}` (no schema mapping declared for it)")]
    Schema(String),
    #[error("no label column found")]
    MissingLabel,
    #[error("row {row}: column `{column}` is not numeric")]
    BadNumber { row: usize, column: String },
    #[error("split fractions must be non-negative and sum to 1")]
    BadFractions,
    #[error("classes smaller than the fold count: {0:?}")]
    Stratification(Vec<(String, usize)>),
    #[error("class `{0}` has no rows")]
    EmptyClass(String),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("datasets disagree on columns or classes: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a CSV header maps onto dataset columns.
#[derive(Debug, Clone, Default)]
pub enum CsvSchema {
    /// Columns must belong to the flow feature dictionary (after applying
    /// `mapping`); identification columns are skipped, `label` is the class.
    /// Map a file column to `-` to ignore it.
    #[default]
    Flow,
    FlowMapped(HashMap<String, String>),
    /// Every column is a numeric feature except one named `label`.
    Generic,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Matrix,
    /// Class index per row; `class_names[0]` is benign when present.
    pub y: Vec<u32>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Source files and transforms applied, in order.
    pub provenance: Vec<String>,
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn per_class_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.class_names.len()];
        for &label in &self.y {
            counts[label as usize] += 1;
        }
        self.class_names
            .iter()
            .cloned()
            .zip(counts)
            .collect()
    }

    /// Rows restricted to `indices`, same columns and class registry.
    pub fn subset(&self, indices: &[usize], note: &str) -> Dataset {
        let mut provenance = self.provenance.clone();
        provenance.push(note.to_string());
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            provenance,
            dropped_rows: 0,
        }
    }

    /// Concatenate datasets with identical columns, merging class
    /// registries (benign stays class 0).
    pub fn concat(parts: Vec<Dataset>) -> Result<Dataset, DataError> {
        let mut parts = parts.into_iter();
        let first = parts.next().ok_or_else(|| DataError::Empty("concat".into()))?;
        let mut names = first.class_names.clone();
        let mut rows: Vec<Vec<f64>> = first.x.row_iter().map(|r| r.to_vec()).collect();
        let mut y = first.y.clone();
        let mut provenance = first.provenance.clone();
        let mut dropped = first.dropped_rows;
        for part in parts {
            if part.feature_names != first.feature_names {
                return Err(DataError::Incompatible("feature names differ".into()));
            }
            let remap: Vec<u32> = part
                .class_names
                .iter()
                .map(|c| intern(&mut names, c))
                .collect();
            rows.extend(part.x.row_iter().map(|r| r.to_vec()));
            y.extend(part.y.iter().map(|&l| remap[l as usize]));
            provenance.extend(part.provenance);
            dropped += part.dropped_rows;
        }
        let mut ds = Dataset {
            x: Matrix::from_rows(&rows),
            y,
            feature_names: first.feature_names,
            class_names: names,
            provenance,
            dropped_rows: dropped,
        };
        force_benign_first(&mut ds);
        Ok(ds)
    }
}

fn intern(names: &mut Vec<String>, name: &str) -> u32 {
    match names.iter().position(|n| n == name) {
        Some(i) => i as u32,
        None => {
            names.push(name.to_string());
            (names.len() - 1) as u32
        }
    }
}

fn force_benign_first(ds: &mut Dataset) {
    let benign = ds
        .class_names
        .iter()
        .position(|n| n.eq_ignore_ascii_case("benign"));
    if let Some(idx) = benign {
        if idx != 0 {
            ds.class_names.swap(0, idx);
            for label in &mut ds.y {
                if *label == idx as u32 {
                    *label = 0;
                } else if *label == 0 {
                    *label = idx as u32;
                }
            }
        }
    }
}

pub fn load_csv<P: AsRef<Path>>(path: P, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let display = path.as_ref().display().to_string();
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, schema, &display)
}

pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    schema: &CsvSchema,
    source: &str,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|_| DataError::MissingHeader(source.to_string()))?
        .clone();
    if header.is_empty() {
        return Err(DataError::MissingHeader(source.to_string()));
    }

    // map every file column to a role and order features
    let mut label_col: Option<usize> = None;
    let mut feature_cols: Vec<(String, usize)> = Vec::new(); // (name, file idx)
    for (idx, raw_name) in header.iter().enumerate() {
        let name = raw_name.trim();
        let mapped: &str = match schema {
            CsvSchema::Flow => name,
            CsvSchema::FlowMapped(mapping) => {
                mapping.get(name).map(|s| s.as_str()).unwrap_or(name)
            }
            CsvSchema::Generic => {
                if name.eq_ignore_ascii_case("label") {
                    label_col = Some(idx);
                } else {
                    feature_cols.push((name.to_string(), idx));
                }
                continue;
            }
        };
        if mapped == "-" || mapped.eq_ignore_ascii_case("ignore") {
            continue;
        }
        match features::lookup(mapped).map(|f| f.kind) {
            Some(ColumnKind::Label) => label_col = Some(idx),
            Some(ColumnKind::Metadata) => {}
            Some(ColumnKind::Learnable) => feature_cols.push((mapped.to_string(), idx)),
            None => return Err(DataError::Schema(name.to_string())),
        }
    }
    if matches!(schema, CsvSchema::Flow | CsvSchema::FlowMapped(_)) {
        // dictionary order, not file order
        feature_cols.sort_by_key(|(name, _)| features::learnable_index(name).unwrap_or(usize::MAX));
    }
    let label_col = label_col.ok_or(DataError::MissingLabel)?;

    let mut class_names: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<u32> = Vec::new();
    let mut dropped = 0usize;
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_cols.len());
        let mut finite = true;
        for (name, col) in &feature_cols {
            let cell = record.get(*col).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| DataError::BadNumber {
                row: row_idx + 2,
                column: name.clone(),
            })?;
            if !value.is_finite() {
                finite = false;
            }
            row.push(value);
        }
        if !finite {
            dropped += 1;
            continue;
        }
        let label = record.get(label_col).unwrap_or("").trim();
        y.push(intern(&mut class_names, label));
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty(source.to_string()));
    }

    let mut ds = Dataset {
        x: Matrix::from_rows(&rows),
        y,
        feature_names: feature_cols.into_iter().map(|(n, _)| n).collect(),
        class_names,
        provenance: vec![format!("load {source} (rows {}, dropped {dropped})", rows.len())],
        dropped_rows: dropped,
    };
    force_benign_first(&mut ds);
    Ok(ds)
}

/// Remove the URG-related and identification columns when present; absent
/// columns are no-ops. The removal is logged in the provenance.
pub fn drop_excluded(ds: &Dataset) -> Dataset {
    let excluded: Vec<&str> = EXCLUDED_URG_COLUMNS
        .iter()
        .chain(IDENTIFICATION_COLUMNS.iter())
        .copied()
        .collect();
    remove_columns(ds, &excluded)
}

pub fn remove_columns(ds: &Dataset, names: &[&str]) -> Dataset {
    let keep: Vec<usize> = ds
        .feature_names
        .iter()
        .enumerate()
        .filter(|(_, n)| !names.contains(&n.as_str()))
        .map(|(i, _)| i)
        .collect();
    let removed: Vec<&str> = ds
        .feature_names
        .iter()
        .filter(|n| names.contains(&n.as_str()))
        .map(|n| n.as_str())
        .collect();
    let mut provenance = ds.provenance.clone();
    provenance.push(format!("drop_excluded (removed {removed:?})"));
    Dataset {
        x: ds.x.select_columns(&keep),
        y: ds.y.clone(),
        feature_names: keep.iter().map(|&i| ds.feature_names[i].clone()).collect(),
        class_names: ds.class_names.clone(),
        provenance,
        dropped_rows: ds.dropped_rows,
    }
}

/// Largest-remainder apportionment of `n` rows over the fractions; ties go
/// to the earlier split, so the train split never loses one.
fn apportion(n: usize, fractions: (f64, f64, f64)) -> [usize; 3] {
    let fracs = [fractions.0, fractions.1, fractions.2];
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    [counts[0], counts[1], counts[2]]
}

/// Per class: seeded shuffle then contiguous cut into train/validate/test.
pub fn stratified_split(
    ds: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    let sum = fractions.0 + fractions.1 + fractions.2;
    if fractions.0 < 0.0 || fractions.1 < 0.0 || fractions.2 < 0.0 || (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::BadFractions);
    }
    let by_class = class_indices(ds)?;

    let mut split_indices: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (class_idx, mut indices) in by_class.into_iter().enumerate() {
        Rng::from_seed_stream(seed, class_idx as u64).shuffle(&mut indices);
        let counts = apportion(indices.len(), fractions);
        let mut cursor = 0usize;
        for (slot, &count) in counts.iter().enumerate() {
            split_indices[slot].extend_from_slice(&indices[cursor..cursor + count]);
            cursor += count;
        }
    }
    for indices in &mut split_indices {
        indices.sort_unstable();
    }
    let note = |name: &str| {
        format!(
            "stratified_split {name} (seed {seed}, fractions {:.2}/{:.2}/{:.2})",
            fractions.0, fractions.1, fractions.2
        )
    };
    Ok((
        ds.subset(&split_indices[0], &note("train")),
        ds.subset(&split_indices[1], &note("validate")),
        ds.subset(&split_indices[2], &note("test")),
    ))
}

fn class_indices(ds: &Dataset) -> Result<Vec<Vec<usize>>, DataError> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_names.len()];
    for (i, &label) in ds.y.iter().enumerate() {
        by_class[label as usize].push(i);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.is_empty() {
            return Err(DataError::EmptyClass(ds.class_names[class].clone()));
        }
    }
    Ok(by_class)
}

/// Stratified k-fold: per class, a seeded shuffle dealt round-robin, so
/// per-class fold counts differ by at most one. Returns (train, validate)
/// index pairs.
/// (train indices, validate indices) per fold.
pub type FoldIndices = Vec<(Vec<usize>, Vec<usize>)>;

pub fn stratified_kfold(ds: &Dataset, k: usize, seed: u64) -> Result<FoldIndices, DataError> {
    assert!(k >= 2, "k-fold needs k >= 2");
    let by_class = class_indices(ds)?;
    let offenders: Vec<(String, usize)> = by_class
        .iter()
        .enumerate()
        .filter(|(_, rows)| rows.len() < k)
        .map(|(c, rows)| (ds.class_names[c].clone(), rows.len()))
        .collect();
    if !offenders.is_empty() {
        return Err(DataError::Stratification(offenders));
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class_idx, mut indices) in by_class.into_iter().enumerate() {
        Rng::from_seed_stream(seed, class_idx as u64).shuffle(&mut indices);
        for (pos, idx) in indices.into_iter().enumerate() {
            folds[pos % k].push(idx);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok((0..k)
        .map(|j| {
            let validate = folds[j].clone();
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            train.sort_unstable();
            (train, validate)
        })
        .collect())
}

/// Column-wise Z-score parameters, fitted on the training split only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population std; zero-variance columns carry the marker value 1.
    pub std: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Scaler {
        assert!(x.rows() > 0, "cannot fit a scaler on an empty matrix");
        let mean = x.column_means();
        let n = x.rows() as f64;
        let mut var = vec![0.0; x.cols()];
        for row in x.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let mut std = Vec::with_capacity(x.cols());
        let mut zero_variance = Vec::with_capacity(x.cols());
        for v in var {
            let s = (v / n).sqrt();
            if s == 0.0 {
                std.push(1.0);
                zero_variance.push(true);
            } else {
                std.push(s);
                zero_variance.push(false);
            }
        }
        Scaler {
            mean,
            std,
            zero_variance,
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, DataError> {
        if x.cols() != self.mean.len() {
            return Err(DataError::DimensionMismatch {
                expected: self.mean.len(),
                got: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let row = x.row(i);
            let out_row = out.row_mut(i);
            for j in 0..row.len() {
                out_row[j] = if self.zero_variance[j] {
                    0.0
                } else {
                    (row[j] - self.mean[j]) / self.std[j]
                };
            }
        }
        Ok(out)
    }
}

pub fn zscore_fit(train: &Dataset) -> Scaler {
    Scaler::fit(&train.x)
}

pub fn zscore_apply(scaler: &Scaler, ds: &Dataset) -> Result<Dataset, DataError> {
    let x = scaler.transform(&ds.x)?;
    let mut provenance = ds.provenance.clone();
    provenance.push("zscore".to_string());
    Ok(Dataset {
        x,
        y: ds.y.clone(),
        feature_names: ds.feature_names.clone(),
        class_names: ds.class_names.clone(),
        provenance,
        dropped_rows: ds.dropped_rows,
    })
}

/// Audit record written next to split outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: (f64, f64, f64),
    pub classes: Vec<SplitClassCounts>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitClassCounts {
    pub class: String,
    pub total: usize,
    pub train: usize,
    pub validate: usize,
    pub test: usize,
}

pub fn split_manifest(
    seed: u64,
    fractions: (f64, f64, f64),
    train: &Dataset,
    validate: &Dataset,
    test: &Dataset,
) -> SplitManifest {
    let count = |ds: &Dataset, class: usize| ds.y.iter().filter(|&&l| l == class as u32).count();
    let classes = train
        .class_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (tr, va, te) = (count(train, i), count(validate, i), count(test, i));
            SplitClassCounts {
                class: name.clone(),
                total: tr + va + te,
                train: tr,
                validate: va,
                test: te,
            }
        })
        .collect();
    SplitManifest {
        seed,
        fractions,
        classes,
    }
}

/// Write a dataset back out as CSV (feature columns then label).
pub fn write_dataset_csv<W: std::io::Write>(out: W, ds: &Dataset) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ds.feature_names.iter().map(|s| s.as_str()).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &label) in ds.x.row_iter().zip(&ds.y) {
        let mut record: Vec<String> = row.iter().map(|&v| crate::numfmt::format_value(v)).collect();
        record.push(ds.class_names[label as usize].clone());
        w.write_record(&record)?;
    }
    w.flush().map_err(DataError::Io)?;
    Ok(())
}
