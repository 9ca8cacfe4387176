//! Output plumbing: atomic file writes (temp + rename), aligned text tables
//! for stdout, and the CSV renderings of the report tables.

use std::io::Write;
use std::path::{Path, PathBuf};

use flowml_core::eval::{ClassMetrics, CompareReport, SweepRow};
use flowml_core::numfmt::format_value;
use flowml_core::pca::PcaModel;

use crate::CliError;

pub fn data_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{context}: {e}"))
}

/// Write via a temp file in the same directory so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| data_err("creating output directory", e))?;
    let mut tmp: PathBuf = path.to_path_buf();
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    tmp.set_file_name(format!(".{file_name}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| data_err("creating temp file", e))?;
        f.write_all(bytes).map_err(|e| data_err("writing", e))?;
        f.sync_all().ok();
    }
    std::fs::rename(&tmp, path).map_err(|e| data_err("renaming into place", e))?;
    Ok(())
}

pub fn render_aligned(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate().take(cols) {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let rendered: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:>width$}", width = widths[j]))
            .collect();
        out.push_str(&rendered.join("  "));
        out.push('\n');
    };
    line(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        line(row);
    }
    out
}

pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

pub fn seconds(v: f64) -> String {
    format!("{v:.2}")
}

// ------------------------------------------------------------- tables ----

/// Data columns only; wall-clock timings go to [`sweep_timing_csv`] so
/// reruns of the same seed produce byte-identical files.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("variance_target,n_components,accuracy,precision,recall,f1,fpr\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_value(r.variance_target),
            r.n_components,
            format_value(r.accuracy),
            format_value(r.precision),
            format_value(r.recall),
            format_value(r.f1),
            r.fpr.map(format_value).unwrap_or_default(),
        ));
    }
    out
}

pub fn sweep_timing_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("variance_target,train_time_s,infer_time_s,time_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_value(r.variance_target),
            format_value(r.train_time_s),
            format_value(r.infer_time_s),
            format_value(r.time_s),
        ));
    }
    out
}

pub fn sweep_text(rows: &[SweepRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                percent(r.variance_target),
                r.n_components.to_string(),
                seconds(r.time_s),
                percent(r.accuracy),
                percent(r.precision),
                percent(r.recall),
                percent(r.f1),
                r.fpr.map(percent).unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    render_aligned(
        &["VE%", "#C", "T&I(s)", "A%", "P%", "R%", "F1%", "FPR%"],
        &body,
    )
}

/// Data columns only, as with [`sweep_csv`].
pub fn compare_csv(report: &CompareReport) -> String {
    let mut out = String::from("family,accuracy,precision,recall,f1,fpr\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.family,
            format_value(r.accuracy),
            format_value(r.precision),
            format_value(r.recall),
            format_value(r.f1),
            r.fpr.map(format_value).unwrap_or_default(),
        ));
    }
    out
}

pub fn compare_timing_csv(report: &CompareReport) -> String {
    let mut out = String::from("family,train_time_s,infer_time_s\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.family,
            format_value(r.train_time_s),
            format_value(r.infer_time_s),
        ));
    }
    out
}

pub fn compare_text(report: &CompareReport) -> String {
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.family.clone(),
                percent(r.precision),
                percent(r.recall),
                percent(r.f1),
                r.fpr.map(percent).unwrap_or_else(|| "-".into()),
                seconds(r.train_time_s),
                seconds(r.infer_time_s),
            ]
        })
        .collect();
    render_aligned(&["Algorithm", "P%", "R%", "F1%", "FPR%", "TT(s)", "IT(s)"], &body)
}

pub fn per_attack_csv(per_class: &[ClassMetrics]) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for m in per_class {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.class,
            format_value(m.precision),
            format_value(m.recall),
            format_value(m.f1),
            m.support,
        ));
    }
    out
}

pub fn per_attack_text(per_class: &[ClassMetrics]) -> String {
    let body: Vec<Vec<String>> = per_class
        .iter()
        .map(|m| {
            vec![
                m.class.clone(),
                format!("{:.2}", m.precision),
                format!("{:.2}", m.recall),
                format!("{:.2}", m.f1),
                m.support.to_string(),
            ]
        })
        .collect();
    render_aligned(&["Attack", "Precision", "Recall", "F1", "Support"], &body)
}

pub fn scree_csv(model: &PcaModel) -> String {
    let mut out = String::from("component,eigenvalue,ratio,cumulative\n");
    for row in model.scree_rows() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.component,
            format_value(row.eigenvalue),
            format_value(row.ratio),
            format_value(row.cumulative),
        ));
    }
    out
}

pub fn loadings_csv(model: &PcaModel, top_m: usize) -> Result<String, CliError> {
    let loadings = model
        .loadings(top_m)
        .map_err(|e| data_err("loadings report", e))?;
    let mut out = String::from("component,feature,loading\n");
    for (idx, entries) in loadings.iter().enumerate() {
        for (feature, loading) in entries {
            out.push_str(&format!("{},{},{}\n", idx + 1, feature, format_value(*loading)));
        }
    }
    Ok(out)
}

pub fn importance_csv(entries: &[(String, f64)]) -> String {
    let mut out = String::from("feature,importance\n");
    for (feature, importance) in entries {
        out.push_str(&format!("{},{}\n", feature, format_value(*importance)));
    }
    out
}
