//! Subcommand implementations. Every command resolves a [`RunConfig`],
//! writes its outputs atomically under --out-dir and echoes the resolved
//! configuration next to them.

use std::path::{Path, PathBuf};

use flowml_core::classifiers::{self, ModelSpec};
use flowml_core::dataset::{self, Dataset};
use flowml_core::eval;
use flowml_core::features::{self, FeatureVector};
use flowml_core::flow::FlowTable;
use flowml_core::packet::{parse_fixture_file, parse_pcap_file};
use flowml_core::pca;
use flowml_core::synth::{self, BlobSpec};
use flowml_core::verify::{self, CriterionStatus, LycosCheckConfig};

use crate::config::{parse_families, parse_targets, RunConfig};
use crate::output::{self, data_err, write_atomic};
use crate::{Cli, CliError, Command, CommonIo};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract {
            io,
            input,
            format,
            label,
            udp_timeout_us,
            tcp_timeout_us,
            terminated_retention_us,
            activity_threshold_us,
            ooo_tolerance_us,
        } => {
            apply_io(&mut config, &io);
            if let Some(label) = label {
                config.label = label;
            }
            let flow = &mut config.flow;
            for (slot, value) in [
                (&mut flow.udp_timeout_us, udp_timeout_us),
                (&mut flow.tcp_timeout_us, tcp_timeout_us),
                (&mut flow.terminated_retention_us, terminated_retention_us),
                (&mut flow.activity_threshold_us, activity_threshold_us),
                (&mut flow.ooo_tolerance_us, ooo_tolerance_us),
            ] {
                if let Some(v) = value {
                    *slot = v;
                }
            }
            let echo = config.to_kv(&format!("extract --input {}", input.display()));
            extract(&config, &io.out_dir, &input, &format, &echo)
        }
        Command::Split {
            io,
            input,
            fractions,
            schema,
            columns_map,
        } => {
            apply_io(&mut config, &io);
            if let Some(f) = fractions {
                config.apply_kv("fractions", &f)?;
            }
            apply_schema(&mut config, schema, columns_map)?;
            let echo = config.to_kv(&format!("split --input {}", input.display()));
            split(&config, &io.out_dir, &input, &echo)
        }
        Command::Sweep {
            io,
            train,
            targets,
            folds,
            schema,
            columns_map,
        } => {
            apply_io(&mut config, &io);
            if let Some(t) = targets {
                config.targets = parse_targets(&t)?;
            }
            if let Some(f) = folds {
                config.folds = f;
            }
            apply_schema(&mut config, schema, columns_map)?;
            let echo = config.to_kv(&format!("sweep --train {}", train.display()));
            sweep(&config, &io.out_dir, &train, &echo)
        }
        Command::Compare {
            io,
            train,
            test,
            variance_target,
            families,
            breakdown,
            schema,
            columns_map,
        } => {
            apply_io(&mut config, &io);
            if let Some(v) = variance_target {
                config.variance_target = v;
            }
            if let Some(f) = families {
                config.families = parse_families(&f)?;
            }
            if let Some(b) = breakdown {
                config.apply_kv("breakdown_family", &b)?;
            }
            apply_schema(&mut config, schema, columns_map)?;
            let echo = config.to_kv(&format!(
                "compare --train {} --test {}",
                train.display(),
                test.display()
            ));
            compare(&config, &io.out_dir, &train, &test, &echo)
        }
        Command::Importance {
            io,
            train,
            test,
            n_top,
            schema,
            columns_map,
        } => {
            apply_io(&mut config, &io);
            if let Some(n) = n_top {
                config.n_top = n;
            }
            apply_schema(&mut config, schema, columns_map)?;
            let echo = config.to_kv(&format!(
                "importance --train {} --test {}",
                train.display(),
                test.display()
            ));
            importance(&config, &io.out_dir, &train, &test, &echo)
        }
        Command::PcaReport {
            io,
            train,
            top_m,
            schema,
            columns_map,
        } => {
            apply_io(&mut config, &io);
            if let Some(m) = top_m {
                config.top_m = m;
            }
            apply_schema(&mut config, schema, columns_map)?;
            let echo = config.to_kv(&format!("pca-report --train {}", train.display()));
            pca_report(&config, &io.out_dir, &train, &echo)
        }
        Command::SynthBlobs {
            io,
            n_per_class,
            classes,
            dims,
            informative,
            separation,
            noise,
        } => {
            apply_io(&mut config, &io);
            let spec = BlobSpec {
                n_per_class,
                n_classes: classes,
                d: dims,
                n_informative: informative,
                separation,
                noise,
                seed: config.seed,
            };
            let echo = config.to_kv(&format!(
                "synth-blobs --n-per-class {n_per_class} --classes {classes} --dims {dims} \
                 --informative {informative} --separation {separation} --noise {noise}"
            ));
            synth_blobs(&io.out_dir, &spec, &echo)
        }
        Command::SynthFlows { io, scenario } => {
            apply_io(&mut config, &io);
            let echo = config.to_kv(&format!("synth-flows --scenario {scenario}"));
            synth_flows(&config, &io.out_dir, &scenario, &echo)
        }
        Command::Accept {
            io,
            lycos_dir,
            columns_map,
            only,
            verbose,
        } => {
            apply_io(&mut config, &io);
            if let Some(map) = columns_map {
                config.columns_map = Some(map);
            }
            let echo = config.to_kv("accept");
            accept(&config, &io.out_dir, lycos_dir, only, verbose, &echo)
        }
    }
}

fn apply_io(config: &mut RunConfig, io: &CommonIo) {
    if let Some(seed) = io.seed {
        config.seed = seed;
    }
}

fn apply_schema(
    config: &mut RunConfig,
    schema: Option<String>,
    columns_map: Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(s) = schema {
        config.apply_kv("schema", &s)?;
    }
    if let Some(map) = columns_map {
        config.columns_map = Some(map);
    }
    Ok(())
}

fn write_echo(out_dir: &Path, echo: &str) -> Result<(), CliError> {
    write_atomic(&out_dir.join("run_config.txt"), echo.as_bytes())
}

fn load_dataset(config: &RunConfig, path: &Path) -> Result<Dataset, CliError> {
    let schema = config.csv_schema()?;
    let ds = dataset::load_csv(path, &schema)
        .map_err(|e| data_err(&format!("loading {}", path.display()), e))?;
    Ok(dataset::drop_excluded(&ds))
}

fn extract(
    config: &RunConfig,
    out_dir: &Path,
    input: &Path,
    format: &str,
    echo: &str,
) -> Result<(), CliError> {
    let is_pcap = match format {
        "pcap" => true,
        "fixture" => false,
        _ => matches!(
            input.extension().and_then(|e| e.to_str()),
            Some("pcap") | Some("cap")
        ),
    };
    let (packets, skipped) = if is_pcap {
        let capture = parse_pcap_file(input)
            .map_err(|e| data_err(&format!("parsing {}", input.display()), e))?;
        (capture.records, capture.skipped.total())
    } else {
        let records = parse_fixture_file(input)
            .map_err(|e| data_err(&format!("parsing {}", input.display()), e))?;
        (records, 0)
    };

    let mut table = FlowTable::new(config.flow);
    let mut closed = Vec::new();
    for pkt in &packets {
        let mut flows = table
            .process_packet(pkt)
            .map_err(|e| data_err("assembling flows", e))?;
        closed.append(&mut flows);
    }
    let flush_at = packets.last().map(|p| p.ts_us).unwrap_or(0);
    closed.extend(table.flush(flush_at));

    let vectors: Vec<FeatureVector> = closed
        .iter()
        .map(|cf| features::finalize(&cf.flow, &config.label))
        .collect();
    let mut csv = Vec::new();
    features::write_flows_csv(&mut csv, &vectors).map_err(|e| data_err("writing CSV", e))?;
    write_atomic(&out_dir.join("flows.csv"), &csv)?;
    write_echo(out_dir, echo)?;

    println!(
        "packets in: {} (skipped {}), flows out: {}, dropped by terminated list: {}",
        packets.len(),
        skipped,
        vectors.len(),
        table.packets_dropped
    );
    Ok(())
}

fn split(config: &RunConfig, out_dir: &Path, input: &Path, echo: &str) -> Result<(), CliError> {
    let ds = load_dataset(config, input)?;
    let (train, validate, test) = dataset::stratified_split(&ds, config.fractions, config.seed)
        .map_err(|e| data_err("splitting", e))?;
    for (name, part) in [("train", &train), ("validate", &validate), ("test", &test)] {
        let mut buf = Vec::new();
        dataset::write_dataset_csv(&mut buf, part).map_err(|e| data_err("writing CSV", e))?;
        write_atomic(&out_dir.join(format!("{name}.csv")), &buf)?;
    }
    let manifest = dataset::split_manifest(config.seed, config.fractions, &train, &validate, &test);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| data_err("manifest", e))?;
    write_atomic(&out_dir.join("split_manifest.json"), json.as_bytes())?;
    write_echo(out_dir, echo)?;
    println!(
        "split {} rows into {}/{}/{} (seed {})",
        ds.n_rows(),
        train.n_rows(),
        validate.n_rows(),
        test.n_rows(),
        config.seed
    );
    Ok(())
}

fn sweep(config: &RunConfig, out_dir: &Path, train: &Path, echo: &str) -> Result<(), CliError> {
    let train_ds = load_dataset(config, train)?;
    let spec = ModelSpec::DecisionTree(config.dt_params());
    let rows = eval::variance_sweep(&train_ds, &config.targets, config.folds, config.seed, &spec)
        .map_err(|e| data_err("variance sweep", e))?;
    write_atomic(&out_dir.join("sweep.csv"), output::sweep_csv(&rows).as_bytes())?;
    write_atomic(
        &out_dir.join("sweep_timing.csv"),
        output::sweep_timing_csv(&rows).as_bytes(),
    )?;
    let json = serde_json::to_string_pretty(&rows).map_err(|e| data_err("sweep json", e))?;
    write_atomic(&out_dir.join("sweep.json"), json.as_bytes())?;
    write_echo(out_dir, echo)?;
    print!("{}", output::sweep_text(&rows));
    Ok(())
}

fn compare(
    config: &RunConfig,
    out_dir: &Path,
    train: &Path,
    test: &Path,
    echo: &str,
) -> Result<(), CliError> {
    let train_ds = load_dataset(config, train)?;
    let test_ds = load_dataset(config, test)?;
    let specs = config.model_specs();
    let mut bundle = Vec::new();
    for (with_pca, file) in [(true, "compare_with_pca"), (false, "compare_without_pca")] {
        let report = eval::compare_models(
            &train_ds,
            &test_ds,
            with_pca,
            config.variance_target,
            &specs,
            config.breakdown_family,
        )
        .map_err(|e| data_err("model comparison", e))?;
        write_atomic(
            &out_dir.join(format!("{file}.csv")),
            output::compare_csv(&report).as_bytes(),
        )?;
        write_atomic(
            &out_dir.join(format!("{file}_timing.csv")),
            output::compare_timing_csv(&report).as_bytes(),
        )?;
        println!(
            "== {} ==",
            if with_pca {
                format!(
                    "with PCA ({} components at {:.0}% variance)",
                    report.n_components.unwrap_or(0),
                    config.variance_target * 100.0
                )
            } else {
                "without PCA".to_string()
            }
        );
        print!("{}", output::compare_text(&report));
        if with_pca {
            write_atomic(
                &out_dir.join("per_attack.csv"),
                output::per_attack_csv(&report.per_attack).as_bytes(),
            )?;
            println!("-- per-attack breakdown ({}) --", report.breakdown_family);
            print!("{}", output::per_attack_text(&report.per_attack));
        }
        bundle.push(report);
    }
    let json = serde_json::to_string_pretty(&bundle).map_err(|e| data_err("compare json", e))?;
    write_atomic(&out_dir.join("compare.json"), json.as_bytes())?;
    write_echo(out_dir, echo)?;
    Ok(())
}

fn importance(
    config: &RunConfig,
    out_dir: &Path,
    train: &Path,
    test: &Path,
    echo: &str,
) -> Result<(), CliError> {
    let train_ds = load_dataset(config, train)?;
    let test_ds = load_dataset(config, test)?;
    let scaler = dataset::zscore_fit(&train_ds);
    let train_scaled = dataset::zscore_apply(&scaler, &train_ds).map_err(|e| data_err("scaling", e))?;
    let test_scaled = dataset::zscore_apply(&scaler, &test_ds).map_err(|e| data_err("scaling", e))?;

    let spec = ModelSpec::DecisionTree(config.dt_params());
    let model = classifiers::fit(&spec, &train_scaled.x, &train_scaled.y)
        .map_err(|e| data_err("fitting DT", e))?;
    let report = classifiers::gini_importance(&model, &train_scaled.feature_names)
        .map_err(|e| data_err("importance", e))?;
    write_atomic(
        &out_dir.join("importance.csv"),
        output::importance_csv(&report.entries).as_bytes(),
    )?;

    let (_, refit) = eval::refit_on_top_features(
        &train_scaled,
        &test_scaled,
        &report,
        config.n_top,
        &config.dt_params(),
    )
    .map_err(|e| data_err("refit", e))?;
    let json = serde_json::to_string_pretty(&refit).map_err(|e| data_err("refit json", e))?;
    write_atomic(&out_dir.join("refit_report.json"), json.as_bytes())?;
    let model_json = model.to_json().map_err(|e| data_err("model json", e))?;
    write_atomic(&out_dir.join("dt_model.json"), model_json.as_bytes())?;
    write_echo(out_dir, echo)?;

    println!("top features by Gini importance:");
    for (name, value) in report.entries.iter().take(config.n_top.max(6)) {
        println!("  {name}: {value:.4}");
    }
    println!(
        "refit on top {} features: accuracy {:.4}, FPR {}",
        refit.selected_features.len(),
        refit.eval.accuracy,
        refit
            .eval
            .fpr_benign
            .map(|f| format!("{:.4}%", f * 100.0))
            .unwrap_or_else(|| "-".into())
    );
    Ok(())
}

fn pca_report(config: &RunConfig, out_dir: &Path, train: &Path, echo: &str) -> Result<(), CliError> {
    let train_ds = load_dataset(config, train)?;
    let scaler = dataset::zscore_fit(&train_ds);
    let scaled = dataset::zscore_apply(&scaler, &train_ds).map_err(|e| data_err("scaling", e))?;
    let model = pca::pca_fit_named(&scaled.x, &scaled.feature_names)
        .map_err(|e| data_err("pca fit", e))?;

    write_atomic(&out_dir.join("scree.csv"), output::scree_csv(&model).as_bytes())?;
    write_atomic(
        &out_dir.join("loadings.csv"),
        output::loadings_csv(&model, config.top_m)?.as_bytes(),
    )?;
    let json = model.to_json().map_err(|e| data_err("model json", e))?;
    write_atomic(&out_dir.join("pca_model.json"), json.as_bytes())?;
    write_echo(out_dir, echo)?;

    let top: f64 = model
        .explained_variance_ratio
        .iter()
        .take(config.top_m)
        .sum();
    println!(
        "{} components; top {} explain {:.1}% of variance",
        model.d_original,
        config.top_m,
        top * 100.0
    );
    for target in [0.8, 0.9] {
        if let Ok(k) = model.select_components(target) {
            println!("{k} components reach {:.0}% variance", target * 100.0);
        }
    }
    Ok(())
}

fn synth_blobs(out_dir: &Path, spec: &BlobSpec, echo: &str) -> Result<(), CliError> {
    let ds = synth::gen_blobs(spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    dataset::write_dataset_csv(&mut buf, &ds).map_err(|e| data_err("writing CSV", e))?;
    write_atomic(&out_dir.join("blobs.csv"), &buf)?;
    write_echo(out_dir, echo)?;
    println!(
        "wrote {} rows x {} features, {} classes",
        ds.n_rows(),
        ds.n_features(),
        ds.n_classes()
    );
    Ok(())
}

fn synth_flows(
    config: &RunConfig,
    out_dir: &Path,
    scenario: &str,
    echo: &str,
) -> Result<(), CliError> {
    let names: Vec<&str> = if scenario == "all" {
        synth::SCENARIO_NAMES.to_vec()
    } else {
        vec![scenario]
    };
    for name in names {
        let generated = synth::gen_flow_scenario(name, config.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        write_atomic(
            &out_dir.join(format!("{name}.fixture")),
            generated.fixture.as_bytes(),
        )?;
        let json = serde_json::to_string_pretty(&generated.manifest)
            .map_err(|e| data_err("manifest", e))?;
        write_atomic(&out_dir.join(format!("{name}.manifest.json")), json.as_bytes())?;
        println!(
            "{name}: {} packets, {} expected flows",
            generated.fixture.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).count(),
            generated.manifest.flows.len()
        );
    }
    write_echo(out_dir, echo)?;
    Ok(())
}

fn accept(
    config: &RunConfig,
    out_dir: &Path,
    lycos_dir: Option<PathBuf>,
    only: Option<String>,
    verbose: bool,
    echo: &str,
) -> Result<(), CliError> {
    let lycos_dir = lycos_dir.or_else(|| std::env::var("FLOWML_LYCOS_DIR").ok().map(PathBuf::from));
    let selected: Option<Vec<usize>> = match only {
        None => None,
        Some(list) => Some(
            list.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("--only expects criterion ids, got `{p}`")))
                })
                .collect::<Result<_, _>>()?,
        ),
    };

    let lycos_config = lycos_dir.as_ref().map(|dir| LycosCheckConfig {
        dir,
        mapping: config.columns_map.as_deref(),
        seed: config.seed,
    });
    let wanted = |id: usize| selected.as_ref().is_none_or(|s| s.contains(&id));

    let mut results = Vec::new();
    if wanted(1) {
        results.push(verify::flow_semantics(config.seed));
    }
    if wanted(2) {
        results.push(verify::pca_algebra(config.seed));
    }
    if wanted(3) {
        results.push(verify::classifier_oracles(config.seed));
    }
    if wanted(4) {
        results.push(verify::metric_identities(config.seed));
    }
    if wanted(5) {
        results.push(verify::synthetic_end_to_end());
    }
    if wanted(6) {
        results.push(verify::lycos_reproduction(lycos_config));
    }
    if wanted(7) {
        results.push(verify::determinism(config.seed));
    }

    let mut report = String::new();
    let mut failed = false;
    for result in &results {
        let line = result.summary_line();
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
        for detail in &result.details {
            let show = verbose || detail.starts_with("FAILED");
            if show {
                println!("    {detail}");
            }
            report.push_str("    ");
            report.push_str(detail);
            report.push('\n');
        }
        if result.status == CriterionStatus::Failed {
            failed = true;
        }
    }
    write_atomic(&out_dir.join("acceptance.txt"), report.as_bytes())?;
    write_echo(out_dir, echo)?;
    if failed {
        Err(CliError::AcceptanceFailed)
    } else {
        Ok(())
    }
}
