//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line (visible with `--nocapture`). The LYCOS criterion needs the
//! external dataset and is skipped unless FLOWML_LYCOS_DIR points at its
//! CSV directory.

use std::path::PathBuf;

use flowml_core::verify::{self, CriterionResult, CriterionStatus, LycosCheckConfig};

const SEED: u64 = 7;

fn assert_criterion(result: CriterionResult) {
    println!("{}", result.summary_line());
    for detail in &result.details {
        println!("    {detail}");
    }
    assert!(
        result.status != CriterionStatus::Failed,
        "criterion {} failed:\n{}",
        result.id,
        result.details.join("\n")
    );
}

#[test]
fn criterion_1_flow_semantics_scenarios() {
    assert_criterion(verify::flow_semantics(SEED));
}

#[test]
fn criterion_2_pca_algebra() {
    assert_criterion(verify::pca_algebra(SEED));
}

#[test]
fn criterion_3_classifier_oracles() {
    assert_criterion(verify::classifier_oracles(SEED));
}

#[test]
fn criterion_4_metric_identities() {
    assert_criterion(verify::metric_identities(SEED));
}

#[test]
fn criterion_5_synthetic_end_to_end() {
    assert_criterion(verify::synthetic_end_to_end());
}

#[test]
fn criterion_6_lycos_reproduction_when_dataset_present() {
    let dir = std::env::var("FLOWML_LYCOS_DIR").ok().map(PathBuf::from);
    let mapping = std::env::var("FLOWML_LYCOS_COLUMNS_MAP").ok().map(PathBuf::from);
    let config = dir.as_ref().map(|dir| LycosCheckConfig {
        dir,
        mapping: mapping.as_deref(),
        seed: SEED,
    });
    assert_criterion(verify::lycos_reproduction(config));
}

#[test]
fn criterion_7_command_reruns_are_byte_identical() {
    // library-level determinism of every table output
    assert_criterion(verify::determinism(SEED));

    // command-level: rerunning the binary with identical seed and config
    // must produce byte-identical CSVs
    let bin = env!("CARGO_BIN_EXE_flowml");
    let base = tempfile::tempdir().unwrap();
    let run = |out: &str, args: &[&str]| {
        let out_dir = base.path().join(out);
        let status = std::process::Command::new(bin)
            .args(args)
            .arg("--out-dir")
            .arg(&out_dir)
            .status()
            .expect("spawn flowml");
        assert!(status.success(), "command failed: {args:?}");
        out_dir
    };

    let blob_args = [
        "synth-blobs",
        "--n-per-class",
        "40",
        "--classes",
        "3",
        "--dims",
        "6",
        "--informative",
        "4",
        "--seed",
        "11",
    ];
    let a = run("blobs-a", &blob_args);
    let b = run("blobs-b", &blob_args);
    let read = |dir: &std::path::Path, name: &str| std::fs::read(dir.join(name)).unwrap();
    assert_eq!(
        read(&a, "blobs.csv"),
        read(&b, "blobs.csv"),
        "synth-blobs reruns differ"
    );

    let fix = run("fix", &["synth-flows", "--scenario", "slow_request", "--seed", "3"]);
    let fixture = fix.join("slow_request.fixture");
    let fixture_str = fixture.to_str().unwrap();
    let ex1 = run("extract-a", &["extract", "--input", fixture_str]);
    let ex2 = run("extract-b", &["extract", "--input", fixture_str]);
    assert_eq!(
        read(&ex1, "flows.csv"),
        read(&ex2, "flows.csv"),
        "extract reruns differ"
    );

    let blobs_csv = a.join("blobs.csv");
    let sweep_args = [
        "sweep",
        "--train",
        blobs_csv.to_str().unwrap(),
        "--schema",
        "generic",
        "--targets",
        "0.6,0.9",
        "--seed",
        "11",
    ];
    let s1 = run("sweep-a", &sweep_args);
    let s2 = run("sweep-b", &sweep_args);
    assert_eq!(
        read(&s1, "sweep.csv"),
        read(&s2, "sweep.csv"),
        "sweep reruns differ"
    );

    println!("criterion 7 [PASS] command reruns byte-identical");
}
