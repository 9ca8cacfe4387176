//! Run configuration: defaults, overridden by a flat key=value file, then
//! `FLOWML_*` environment variables, then command-line flags. Every command
//! echoes its resolved configuration beside its outputs so reruns are
//! reproducible from the echo alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flowml_core::classifiers::Family;
use flowml_core::FlowConfig;

use crate::CliError;

pub const ENV_PREFIX: &str = "FLOWML_";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub flow: FlowConfig,
    pub seed: u64,
    pub fractions: (f64, f64, f64),
    pub targets: Vec<f64>,
    pub folds: usize,
    pub variance_target: f64,
    pub families: Vec<Family>,
    pub breakdown_family: Family,
    pub n_top: usize,
    pub top_m: usize,
    pub label: String,
    pub schema: SchemaKind,
    pub columns_map: Option<PathBuf>,
    pub knn_k: usize,
    pub rf_trees: usize,
    pub dt_max_depth: usize,
    pub svm_epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaKind {
    Flow,
    Generic,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            flow: FlowConfig::default(),
            seed: 7,
            fractions: (0.5, 0.25, 0.25),
            targets: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            folds: 5,
            variance_target: 0.8,
            families: vec![
                Family::Lda,
                Family::Qda,
                Family::SvmLinear,
                Family::Knn,
                Family::Dt,
                Family::Rf,
            ],
            breakdown_family: Family::Knn,
            n_top: 6,
            top_m: 3,
            label: "benign".to_string(),
            schema: SchemaKind::Flow,
            columns_map: None,
            knn_k: 5,
            rf_trees: 100,
            dt_max_depth: 30,
            svm_epochs: 20,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_fractions(value: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("fractions `{value}` are not numbers")))?;
    if parts.len() != 3 {
        return Err(usage("fractions need exactly three comma-separated values"));
    }
    Ok((parts[0], parts[1], parts[2]))
}

pub fn parse_targets(value: &str) -> Result<Vec<f64>, CliError> {
    let targets: Vec<f64> = value
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("targets `{value}` are not numbers")))?;
    if targets.is_empty() {
        return Err(usage("at least one variance target required"));
    }
    Ok(targets)
}

pub fn parse_families(value: &str) -> Result<Vec<Family>, CliError> {
    value
        .split(',')
        .map(|p| {
            Family::parse(p.trim()).ok_or_else(|| {
                usage(format!("unknown model family `{}` (DT, RF, k-NN, LDA, QDA, SVM)", p.trim()))
            })
        })
        .collect()
}

impl RunConfig {
    /// Defaults, then the optional file, then FLOWML_* environment keys.
    pub fn load(config_file: Option<&Path>) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                usage(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!("{}:{}: expected key=value", path.display(), lineno + 1))
                })?;
                config.apply_kv(key.trim(), value.trim())?;
            }
        }
        for (key, value) in std::env::vars() {
            if let Some(stripped) = key.strip_prefix(ENV_PREFIX) {
                let kv_key = stripped.to_ascii_lowercase();
                if config.is_known_key(&kv_key) {
                    config.apply_kv(&kv_key, &value)?;
                }
            }
        }
        Ok(config)
    }

    fn is_known_key(&self, key: &str) -> bool {
        const KEYS: [&str; 20] = [
            "udp_timeout_us",
            "tcp_timeout_us",
            "terminated_retention_us",
            "activity_threshold_us",
            "ooo_tolerance_us",
            "subflow_gap_us",
            "bulk_min_packets",
            "bulk_gap_us",
            "seed",
            "fractions",
            "targets",
            "folds",
            "variance_target",
            "families",
            "breakdown_family",
            "n_top",
            "top_m",
            "label",
            "schema",
            "knn_k",
        ];
        KEYS.contains(&key)
            || matches!(key, "rf_trees" | "dt_max_depth" | "svm_epochs" | "columns_map")
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let int = |v: &str| {
            v.parse::<i64>()
                .map_err(|_| usage(format!("`{key}` expects an integer, got `{v}`")))
        };
        let uint = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| usage(format!("`{key}` expects a non-negative integer, got `{v}`")))
        };
        let float = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| usage(format!("`{key}` expects a number, got `{v}`")))
        };
        match key {
            "udp_timeout_us" => self.flow.udp_timeout_us = int(value)?,
            "tcp_timeout_us" => self.flow.tcp_timeout_us = int(value)?,
            "terminated_retention_us" => self.flow.terminated_retention_us = int(value)?,
            "activity_threshold_us" => self.flow.activity_threshold_us = int(value)?,
            "ooo_tolerance_us" => self.flow.ooo_tolerance_us = int(value)?,
            "subflow_gap_us" => self.flow.subflow_gap_us = int(value)?,
            "bulk_min_packets" => self.flow.bulk_min_packets = uint(value)?,
            "bulk_gap_us" => self.flow.bulk_gap_us = int(value)?,
            "seed" => self.seed = uint(value)?,
            "fractions" => self.fractions = parse_fractions(value)?,
            "targets" => self.targets = parse_targets(value)?,
            "folds" => self.folds = uint(value)? as usize,
            "variance_target" => self.variance_target = float(value)?,
            "families" => self.families = parse_families(value)?,
            "breakdown_family" => {
                self.breakdown_family = Family::parse(value)
                    .ok_or_else(|| usage(format!("unknown family `{value}`")))?
            }
            "n_top" => self.n_top = uint(value)? as usize,
            "top_m" => self.top_m = uint(value)? as usize,
            "label" => self.label = value.to_string(),
            "schema" => {
                self.schema = match value.to_ascii_lowercase().as_str() {
                    "flow" => SchemaKind::Flow,
                    "generic" => SchemaKind::Generic,
                    other => return Err(usage(format!("schema must be flow or generic, got `{other}`"))),
                }
            }
            "columns_map" => self.columns_map = Some(PathBuf::from(value)),
            "knn_k" => self.knn_k = uint(value)? as usize,
            "rf_trees" => self.rf_trees = uint(value)? as usize,
            "dt_max_depth" => self.dt_max_depth = uint(value)? as usize,
            "svm_epochs" => self.svm_epochs = uint(value)? as usize,
            other => return Err(usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// The flat key=value rendering written beside every command's outputs.
    pub fn to_kv(&self, command_line: &str) -> String {
        let mut kv = BTreeMap::new();
        kv.insert("udp_timeout_us", self.flow.udp_timeout_us.to_string());
        kv.insert("tcp_timeout_us", self.flow.tcp_timeout_us.to_string());
        kv.insert(
            "terminated_retention_us",
            self.flow.terminated_retention_us.to_string(),
        );
        kv.insert(
            "activity_threshold_us",
            self.flow.activity_threshold_us.to_string(),
        );
        kv.insert("ooo_tolerance_us", self.flow.ooo_tolerance_us.to_string());
        kv.insert("subflow_gap_us", self.flow.subflow_gap_us.to_string());
        kv.insert("bulk_min_packets", self.flow.bulk_min_packets.to_string());
        kv.insert("bulk_gap_us", self.flow.bulk_gap_us.to_string());
        kv.insert("seed", self.seed.to_string());
        kv.insert(
            "fractions",
            format!("{},{},{}", self.fractions.0, self.fractions.1, self.fractions.2),
        );
        kv.insert(
            "targets",
            self.targets
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("folds", self.folds.to_string());
        kv.insert("variance_target", self.variance_target.to_string());
        kv.insert(
            "families",
            self.families
                .iter()
                .map(|f| f.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("breakdown_family", self.breakdown_family.as_str().to_string());
        kv.insert("n_top", self.n_top.to_string());
        kv.insert("top_m", self.top_m.to_string());
        kv.insert("label", self.label.clone());
        kv.insert(
            "schema",
            match self.schema {
                SchemaKind::Flow => "flow".to_string(),
                SchemaKind::Generic => "generic".to_string(),
            },
        );
        if let Some(map) = &self.columns_map {
            kv.insert("columns_map", map.display().to_string());
        }
        kv.insert("knn_k", self.knn_k.to_string());
        kv.insert("rf_trees", self.rf_trees.to_string());
        kv.insert("dt_max_depth", self.dt_max_depth.to_string());
        kv.insert("svm_epochs", self.svm_epochs.to_string());

        let mut out = format!("# command: {command_line}\n");
        for (k, v) in kv {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn csv_schema(&self) -> Result<flowml_core::dataset::CsvSchema, CliError> {
        use flowml_core::dataset::CsvSchema;
        Ok(match (&self.schema, &self.columns_map) {
            (SchemaKind::Generic, _) => CsvSchema::Generic,
            (SchemaKind::Flow, None) => CsvSchema::Flow,
            (SchemaKind::Flow, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    usage(format!("cannot read columns map {}: {e}", path.display()))
                })?;
                let mut mapping = std::collections::HashMap::new();
                for raw in text.lines() {
                    let line = raw.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    if let Some((from, to)) = line.split_once('=') {
                        mapping.insert(from.trim().to_string(), to.trim().to_string());
                    }
                }
                CsvSchema::FlowMapped(mapping)
            }
        })
    }

    /// Model specs for the configured families, all seeded from the run
    /// seed.
    pub fn model_specs(&self) -> Vec<flowml_core::ModelSpec> {
        use flowml_core::classifiers::*;
        self.families
            .iter()
            .map(|family| match family {
                Family::Dt => ModelSpec::DecisionTree(self.dt_params()),
                Family::Rf => ModelSpec::RandomForest(RfParams {
                    n_trees: self.rf_trees,
                    seed: self.seed,
                    tree: self.dt_params(),
                    ..Default::default()
                }),
                Family::Knn => ModelSpec::Knn(KnnParams {
                    k: self.knn_k,
                    algorithm: KnnAlgorithm::KdTree,
                }),
                Family::Lda => ModelSpec::Lda(LdaParams::default()),
                Family::Qda => ModelSpec::Qda(QdaParams::default()),
                Family::SvmLinear => ModelSpec::LinearSvm(SvmParams {
                    epochs: self.svm_epochs,
                    seed: self.seed,
                    ..Default::default()
                }),
            })
            .collect()
    }

    pub fn dt_params(&self) -> flowml_core::classifiers::DtParams {
        flowml_core::classifiers::DtParams {
            max_depth: self.dt_max_depth,
            min_samples_split: 2,
        }
    }
}
