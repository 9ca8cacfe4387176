//! Seeded synthetic data: Gaussian class blobs for desk-scale pipeline
//! checks, and a catalog of packet fixtures with known expected flows for
//! exercising the termination semantics end to end.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid blob spec: {0}")]
    InvalidSpec(String),
    #[error("unknown scenario `{name}` (known: {})", SCENARIO_NAMES.join(", "))]
    UnknownScenario { name: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub d: usize,
    /// Leading dimensions that carry class signal; the rest are pure noise.
    pub n_informative: usize,
    /// Minimum distance between class means.
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

/// Class means over the informative dimensions: even-parity binary codes
/// scaled so the minimum pairwise distance equals `separation`; when the
/// code book is too small the means fall back to collinear spacing.
fn class_means(spec: &BlobSpec) -> Result<Vec<Vec<f64>>, SynthError> {
    let m = spec.n_informative;
    let scale = spec.separation / 2.0_f64.sqrt();
    let mut codes: Vec<u32> = (0..(1u32 << m.min(24)))
        .filter(|v| v.count_ones() % 2 == 0)
        .take(spec.n_classes)
        .collect();
    if codes.len() < spec.n_classes {
        // collinear fallback: c * separation along the first informative axis
        return Ok((0..spec.n_classes)
            .map(|c| {
                let mut mean = vec![0.0; m];
                mean[0] = c as f64 * spec.separation;
                mean
            })
            .collect());
    }
    codes.truncate(spec.n_classes);
    Ok(codes
        .into_iter()
        .map(|code| {
            (0..m)
                .map(|bit| if code >> bit & 1 == 1 { scale } else { 0.0 })
                .collect()
        })
        .collect())
}

pub fn gen_blobs(spec: &BlobSpec) -> Result<Dataset, SynthError> {
    if spec.n_per_class == 0 || spec.n_classes == 0 || spec.d == 0 {
        return Err(SynthError::InvalidSpec("all sizes must be positive".into()));
    }
    if !(1..=spec.d).contains(&spec.n_informative) {
        return Err(SynthError::InvalidSpec(format!(
            "n_informative must lie in 1..=d, got {} of {}",
            spec.n_informative, spec.d
        )));
    }
    if spec.separation < 0.0 || spec.noise < 0.0 {
        return Err(SynthError::InvalidSpec(
            "separation and noise must be non-negative".into(),
        ));
    }
    let means = class_means(spec)?;
    let mut rng = Rng::from_seed(spec.seed);
    let n = spec.n_per_class * spec.n_classes;
    let mut x = Matrix::zeros(n, spec.d);
    let mut y = Vec::with_capacity(n);
    let mut row = 0usize;
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..spec.n_per_class {
            let out = x.row_mut(row);
            for (j, out_v) in out.iter_mut().enumerate() {
                let center = if j < spec.n_informative { mean[j] } else { 0.0 };
                *out_v = center + spec.noise * rng.normal();
            }
            y.push(class as u32);
            row += 1;
        }
    }
    Ok(Dataset {
        x,
        y,
        feature_names: (0..spec.d).map(|j| format!("feat_{j:02}")).collect(),
        class_names: (0..spec.n_classes).map(|c| format!("class_{c}")).collect(),
        provenance: vec![format!(
            "gen_blobs(n_per_class={}, classes={}, d={}, informative={}, separation={}, noise={}, seed={})",
            spec.n_per_class, spec.n_classes, spec.d, spec.n_informative,
            spec.separation, spec.noise, spec.seed
        )],
        dropped_rows: 0,
    })
}

pub const SCENARIO_NAMES: [&str; 5] = [
    "tcp_clean_close",
    "rst_suppression",
    "udp_timeout_split",
    "syn_flood",
    "slow_request",
];

/// A property the finalized feature vectors must satisfy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureCheck {
    /// Column equals the value on every flow.
    EveryFlowEquals { column: String, value: f64 },
    /// Column `left` strictly exceeds column `right` on every flow.
    ColumnExceeds { left: String, right: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpectedFlow {
    pub packets: u64,
    pub close_reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub name: String,
    pub seed: u64,
    pub expected_drops: u64,
    /// In emission order.
    pub flows: Vec<ExpectedFlow>,
    pub feature_checks: Vec<FeatureCheck>,
    /// Timestamp handed to the final flush.
    pub flush_at_us: i64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub fixture: String,
    pub manifest: ScenarioManifest,
}

fn tcp_line(ts_us: i64, src: &str, sport: u16, dst: &str, dport: u16, flags: &str, payload: u32) -> String {
    format!("{ts_us},{src},{sport},{dst},{dport},6,{flags},40,{payload},8192")
}

fn udp_line(ts_us: i64, src: &str, sport: u16, dst: &str, dport: u16, payload: u32) -> String {
    format!("{ts_us},{src},{sport},{dst},{dport},17,,28,{payload},0")
}

fn flows(entries: &[(u64, &str)]) -> Vec<ExpectedFlow> {
    entries
        .iter()
        .map(|&(packets, reason)| ExpectedFlow {
            packets,
            close_reason: reason.to_string(),
        })
        .collect()
}

/// Deterministic fixture plus the manifest its flows must match exactly.
pub fn gen_flow_scenario(name: &str, seed: u64) -> Result<Scenario, SynthError> {
    let (a, b) = ("10.0.0.1", "10.0.0.2");
    let mut lines: Vec<String> = vec![format!("# scenario: {name}")];
    let manifest = match name {
        "tcp_clean_close" => {
            lines.push(tcp_line(0, a, 40_001, b, 80, "S", 0));
            lines.push(tcp_line(1_000, b, 80, a, 40_001, "SA", 0));
            lines.push(tcp_line(2_000, a, 40_001, b, 80, "A", 0));
            lines.push(tcp_line(3_000, a, 40_001, b, 80, "PA", 120));
            lines.push(tcp_line(4_000, a, 40_001, b, 80, "FA", 0));
            ScenarioManifest {
                name: name.into(),
                seed,
                expected_drops: 0,
                flows: flows(&[(5, "fin")]),
                feature_checks: vec![FeatureCheck::EveryFlowEquals {
                    column: "flag_fin".into(),
                    value: 1.0,
                }],
                flush_at_us: 4_000,
            }
        }
        "rst_suppression" => {
            lines.push(tcp_line(0, a, 40_002, b, 80, "S", 0));
            lines.push(tcp_line(1_000_000, b, 80, a, 40_002, "SA", 0));
            lines.push(tcp_line(2_000_000, a, 40_002, b, 80, "A", 0));
            lines.push(tcp_line(5_000_000, a, 40_002, b, 80, "R", 0));
            // stray ACK on the terminated key: dropped
            lines.push(tcp_line(6_000_000, a, 40_002, b, 80, "A", 0));
            // fresh SYN reopens the conversation
            lines.push(tcp_line(7_000_000, a, 40_002, b, 80, "S", 0));
            ScenarioManifest {
                name: name.into(),
                seed,
                expected_drops: 1,
                flows: flows(&[(4, "rst"), (1, "end_of_capture")]),
                feature_checks: vec![],
                flush_at_us: 7_000_000,
            }
        }
        "udp_timeout_split" => {
            lines.push(udp_line(0, a, 5_353, b, 53, 32));
            lines.push(udp_line(121_000_000, a, 5_353, b, 53, 32));
            ScenarioManifest {
                name: name.into(),
                seed,
                expected_drops: 0,
                flows: flows(&[(1, "timeout"), (1, "end_of_capture")]),
                feature_checks: vec![],
                flush_at_us: 121_000_000,
            }
        }
        "syn_flood" => {
            let mut ports: Vec<u16> = (10_000..11_000).collect();
            Rng::from_seed(seed).shuffle(&mut ports);
            for (i, port) in ports.iter().enumerate() {
                lines.push(tcp_line(i as i64 * 1_000, a, *port, b, 80, "S", 0));
            }
            ScenarioManifest {
                name: name.into(),
                seed,
                expected_drops: 0,
                flows: flows(&vec![(1, "end_of_capture"); 1_000]),
                feature_checks: vec![FeatureCheck::EveryFlowEquals {
                    column: "flag_syn".into(),
                    value: 1.0,
                }],
                flush_at_us: 999 * 1_000,
            }
        }
        "slow_request" => {
            lines.push(tcp_line(0, a, 40_003, b, 80, "S", 0));
            lines.push(tcp_line(10_000, b, 80, a, 40_003, "SA", 0));
            lines.push(tcp_line(20_000, a, 40_003, b, 80, "A", 0));
            lines.push(tcp_line(30_000, a, 40_003, b, 80, "PA", 64));
            // two ~20s silences around sparse request trickle
            lines.push(tcp_line(20_030_000, a, 40_003, b, 80, "PA", 64));
            lines.push(tcp_line(20_040_000, b, 80, a, 40_003, "PA", 512));
            lines.push(tcp_line(40_040_000, a, 40_003, b, 80, "PA", 64));
            lines.push(tcp_line(40_050_000, a, 40_003, b, 80, "FA", 0));
            ScenarioManifest {
                name: name.into(),
                seed,
                expected_drops: 0,
                flows: flows(&[(8, "fin")]),
                feature_checks: vec![FeatureCheck::ColumnExceeds {
                    left: "idle_mean".into(),
                    right: "active_mean".into(),
                }],
                flush_at_us: 40_050_000,
            }
        }
        other => return Err(SynthError::UnknownScenario { name: other.to_string() }),
    };
    lines.push(String::new());
    Ok(Scenario {
        fixture: lines.join("\n"),
        manifest,
    })
}


#[cfg(test)]
mod chance_level {
    use super::*;
    use crate::classifiers::{self, DtParams, ModelSpec};
    use crate::dataset::stratified_split;
    use crate::eval::evaluate;

    #[test]
    fn zero_separation_scores_at_chance() {
        let ds = gen_blobs(&BlobSpec {
            n_per_class: 300,
            n_classes: 2,
            d: 6,
            n_informative: 3,
            separation: 0.0,
            noise: 1.0,
            seed: 17,
        })
        .unwrap();
        let (train, _, test) = stratified_split(&ds, (0.5, 0.25, 0.25), 17).unwrap();
        let spec = ModelSpec::DecisionTree(DtParams::default());
        let model = classifiers::fit(&spec, &train.x, &train.y).unwrap();
        let report = evaluate(&model, &test.x, &test.y, &train.class_names).unwrap();
        assert!(
            (report.accuracy - 0.5).abs() <= 0.1,
            "class-blind data should score near chance, got {}",
            report.accuracy
        );
    }
}
