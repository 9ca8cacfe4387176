//! End-to-end checks of the flowml binary: command examples, exit codes,
//! config precedence and the pcap input path.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flowml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowml"))
        .args(args)
        .env_remove("FLOWML_SEED")
        .output()
        .expect("spawn flowml")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const SESSION_FIXTURE: &str = "\
0,10.0.0.1,1234,10.0.0.2,80,6,S,40,0,65535
1000,10.0.0.2,80,10.0.0.1,1234,6,SA,40,0,512
2000,10.0.0.1,1234,10.0.0.2,80,6,A,40,0,512
3000,10.0.0.1,1234,10.0.0.2,80,6,PA,40,100,512
4000,10.0.0.1,1234,10.0.0.2,80,6,FA,40,0,512
";

#[test]
fn extract_five_packet_session_yields_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("session.txt");
    write(&fixture, SESSION_FIXTURE);
    let out_dir = dir.path().join("out");
    let out = flowml(&[
        "extract",
        "--input",
        fixture.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("flows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one flow row");
    assert!(stdout(&out).contains("flows out: 1"));
    assert!(out_dir.join("run_config.txt").exists());
}

#[test]
fn extract_reports_terminated_list_drops() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("rst.txt");
    write(
        &fixture,
        "0,10.0.0.1,9,10.0.0.2,80,6,S,40,0,64\n\
         5000000,10.0.0.1,9,10.0.0.2,80,6,R,40,0,64\n\
         6000000,10.0.0.1,9,10.0.0.2,80,6,A,40,0,64\n",
    );
    let out_dir = dir.path().join("out");
    let out = flowml(&[
        "extract",
        "--input",
        fixture.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(
        stdout(&out).contains("dropped by terminated list: 1"),
        "summary was: {}",
        stdout(&out)
    );
}

#[test]
fn extract_empty_fixture_writes_empty_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("empty.txt");
    write(&fixture, "# nothing here\n");
    let out_dir = dir.path().join("out");
    let out = flowml(&[
        "extract",
        "--input",
        fixture.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("flows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1, "header only");
}

#[test]
fn extract_parses_pcap_files() {
    // minimal capture: global header + one UDP packet, assembled by hand
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0xA1B2_C3D4_u32.to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&4u16.to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    bytes.extend_from_slice(&65535u32.to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    let mut ip = vec![0x45u8, 0, 0, 32, 0, 0, 0, 0, 64, 17, 0, 0, 10, 0, 0, 1, 10, 0, 0, 2];
    ip.extend_from_slice(&5353u16.to_be_bytes());
    ip.extend_from_slice(&53u16.to_be_bytes());
    ip.extend_from_slice(&12u16.to_be_bytes());
    ip.extend_from_slice(&0u16.to_be_bytes());
    ip.extend_from_slice(b"abcd");
    let mut frame = vec![0u8; 12];
    frame.extend_from_slice(&0x0800u16.to_be_bytes());
    frame.extend_from_slice(&ip);
    bytes.extend_from_slice(&1u32.to_le_bytes()); // ts_sec
    bytes.extend_from_slice(&0u32.to_le_bytes()); // ts_usec
    bytes.extend_from_slice(&(frame.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(frame.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&frame);

    let dir = tempfile::tempdir().unwrap();
    let pcap = dir.path().join("one.pcap");
    std::fs::write(&pcap, &bytes).unwrap();
    let out_dir = dir.path().join("out");
    let out = flowml(&[
        "extract",
        "--input",
        pcap.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("flows.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains("10.0.0.1"));
    assert!(row.contains(",17,"), "protocol column: {row}");
}

#[test]
fn bad_input_exits_with_data_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pcap");
    std::fs::write(&bad, 0xDEAD_BEEF_u32.to_le_bytes()).unwrap();
    let out = flowml(&[
        "extract",
        "--input",
        bad.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0xDEADBEEF"));
}

#[test]
fn usage_errors_exit_one() {
    let out = flowml(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let out = flowml(&[
        "synth-flows",
        "--scenario",
        "definitely-not-a-scenario",
        "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pipeline_produces_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let blobs_dir = dir.path().join("blobs");
    let out = flowml(&[
        "synth-blobs",
        "--n-per-class",
        "50",
        "--classes",
        "3",
        "--dims",
        "8",
        "--informative",
        "4",
        "--separation",
        "10",
        "--seed",
        "5",
        "--out-dir",
        blobs_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let blobs_csv = blobs_dir.join("blobs.csv");

    let split_dir = dir.path().join("split");
    let out = flowml(&[
        "split",
        "--input",
        blobs_csv.to_str().unwrap(),
        "--schema",
        "generic",
        "--seed",
        "5",
        "--out-dir",
        split_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for f in ["train.csv", "validate.csv", "test.csv", "split_manifest.json"] {
        assert!(split_dir.join(f).exists(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(split_dir.join("split_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["classes"].as_array().unwrap().len(), 3);

    let sweep_dir = dir.path().join("sweep");
    let out = flowml(&[
        "sweep",
        "--train",
        split_dir.join("train.csv").to_str().unwrap(),
        "--schema",
        "generic",
        "--targets",
        "0.5,0.9",
        "--seed",
        "5",
        "--out-dir",
        sweep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let sweep_csv = std::fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep_csv.lines().count(), 3);
    let components: Vec<usize> = sweep_csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(components[0] <= components[1], "components must not decrease");

    let cmp_dir = dir.path().join("cmp");
    let out = flowml(&[
        "compare",
        "--train",
        split_dir.join("train.csv").to_str().unwrap(),
        "--test",
        split_dir.join("test.csv").to_str().unwrap(),
        "--schema",
        "generic",
        "--families",
        "DT,k-NN",
        "--seed",
        "5",
        "--out-dir",
        cmp_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "compare_with_pca.csv",
        "compare_without_pca.csv",
        "per_attack.csv",
        "compare.json",
    ] {
        assert!(cmp_dir.join(f).exists(), "{f} missing");
    }
}

#[test]
fn config_file_env_and_flags_layer_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("flowml.conf");
    write(&config, "# test config\nseed=100\nlabel=from_file\n");
    let fixture = dir.path().join("one.txt");
    write(&fixture, "0,10.0.0.1,1,10.0.0.2,2,17,,28,4,0\n");

    // file value applies
    let out_a = dir.path().join("a");
    let out = flowml(&[
        "--config",
        config.to_str().unwrap(),
        "extract",
        "--input",
        fixture.to_str().unwrap(),
        "--out-dir",
        out_a.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let echo = std::fs::read_to_string(out_a.join("run_config.txt")).unwrap();
    assert!(echo.contains("seed=100"));
    assert!(echo.contains("label=from_file"));
    let csv = std::fs::read_to_string(out_a.join("flows.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with("from_file"));

    // environment beats the file
    let out_b = dir.path().join("b");
    let out = Command::new(env!("CARGO_BIN_EXE_flowml"))
        .env("FLOWML_LABEL", "from_env")
        .args([
            "--config",
            config.to_str().unwrap(),
            "extract",
            "--input",
            fixture.to_str().unwrap(),
            "--out-dir",
            out_b.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let echo = std::fs::read_to_string(out_b.join("run_config.txt")).unwrap();
    assert!(echo.contains("label=from_env"));

    // a flag beats both
    let out_c = dir.path().join("c");
    let out = Command::new(env!("CARGO_BIN_EXE_flowml"))
        .env("FLOWML_LABEL", "from_env")
        .args([
            "--config",
            config.to_str().unwrap(),
            "extract",
            "--input",
            fixture.to_str().unwrap(),
            "--label",
            "from_flag",
            "--out-dir",
            out_c.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let echo = std::fs::read_to_string(out_c.join("run_config.txt")).unwrap();
    assert!(echo.contains("label=from_flag"));
}

#[test]
fn synth_flows_manifest_matches_extracted_flows() {
    let dir = tempfile::tempdir().unwrap();
    let syn_dir = dir.path().join("syn");
    let out = flowml(&[
        "synth-flows",
        "--scenario",
        "all",
        "--seed",
        "7",
        "--out-dir",
        syn_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    for name in [
        "tcp_clean_close",
        "rst_suppression",
        "udp_timeout_split",
        "syn_flood",
        "slow_request",
    ] {
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(syn_dir.join(format!("{name}.manifest.json"))).unwrap(),
        )
        .unwrap();
        let expected_flows = manifest["flows"].as_array().unwrap().len();
        let out_dir = dir.path().join(format!("ex-{name}"));
        let fixture: PathBuf = syn_dir.join(format!("{name}.fixture"));
        let out = flowml(&[
            "extract",
            "--input",
            fixture.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let csv = std::fs::read_to_string(out_dir.join("flows.csv")).unwrap();
        assert_eq!(
            csv.lines().count() - 1,
            expected_flows,
            "{name}: flow count mismatch"
        );
    }
}
