//! Trace, selection and benchmark report writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hpod_core::detectors::named_values;
use hpod_core::eval::{BenchmarkReport, Method};
use hpod_core::{HpSetting, HpSpace, OptTrace};
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

pub const TRACE_COLUMNS: [&str; 7] = ["iter", "hp_json", "pred_perf", "incumbent_pred", "meta_task", "transfer_w", "ms"];

/// `{name: value}` object of a setting.
pub fn setting_json(space: &HpSpace, s: &HpSetting) -> Value {
    let map: Map<String, Value> = named_values(space, s)
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::to_value(v).expect("HP values serialize")))
        .collect();
    Value::Object(map)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::data(path, e.to_string())
}

/// Writes the per-evaluation trace; `with_labels` appends the true AP of
/// each evaluated setting and the best true AP so far.
pub fn write_trace(path: &Path, space: &HpSpace, trace: &OptTrace, with_labels: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<&str> = TRACE_COLUMNS.to_vec();
    if with_labels {
        header.extend(["true_ap", "best_true_ap"]);
    }
    w.write_record(&header).map_err(csv_err(path))?;
    let mut best = f64::NEG_INFINITY;
    for r in &trace.records {
        let mut row = vec![
            r.iter.to_string(),
            setting_json(space, &r.setting).to_string(),
            r.pred_perf.to_string(),
            r.incumbent_pred.to_string(),
            r.meta_task.map_or_else(String::new, |t| t.to_string()),
            r.transfer_w.to_string(),
            format!("{:.3}", r.ms),
        ];
        if with_labels {
            let ap = r.true_ap.unwrap_or(f64::NAN);
            if ap > best {
                best = ap;
            }
            row.push(ap.to_string());
            row.push(best.to_string());
        }
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn selection_json(space: &HpSpace, trace: &OptTrace, method: &str, meta_tasks: &[String]) -> Value {
    json!({
        "algorithm": space.algorithm,
        "method": method,
        "hp": setting_json(space, &trace.selected),
        "values": trace.selected,
        "pred_perf": trace.selected_pred,
        "evaluations": trace.records.len(),
        "iterations": trace.iterations(),
        "nearest_meta_dataset": meta_tasks.get(trace.nearest_task),
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn settings_cell(space: &HpSpace, s: &[HpSetting]) -> String {
    s.iter().map(|x| setting_json(space, x).to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_report_csv(path: &Path, space: &HpSpace, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["dataset", "method", "selected", "true_ap", "normalized_rank", "top_q"]).map_err(csv_err(path))?;
    for r in &report.rows {
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            settings_cell(space, &r.selected),
            format!("{:.6}", r.true_ap),
            format!("{:.6}", r.normalized_rank),
            format!("{:.4}", r.top_q),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_wilcoxon_csv(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["method", "baseline", "n", "w_plus", "exact", "p_two_sided", "p_greater"]).map_err(csv_err(path))?;
    for p in &report.pairwise {
        let cells = match &p.test {
            Some(t) => vec![
                t.n.to_string(),
                t.w_plus.to_string(),
                t.exact.to_string(),
                format!("{:.6}", t.p_two_sided),
                format!("{:.6}", t.p_greater),
            ],
            None => vec!["0".into(), String::new(), String::new(), "NA".into(), "NA".into()],
        };
        let mut row = vec![p.method.to_string(), p.baseline.to_string()];
        row.extend(cells);
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Human-readable report: method summary, per-dataset normalized ranks and
/// the pairwise tests.
pub fn report_markdown(report: &BenchmarkReport, algorithm: &str) -> String {
    let methods: Vec<Method> = report.summaries.iter().map(|s| s.method).collect();
    let mut md = String::new();
    let _ = writeln!(md, "# Leave-one-out benchmark ({algorithm})\n");
    let _ = writeln!(md, "Trials per stochastic method: {}. Seed: {}.\n", report.trials, report.seed);
    let _ = writeln!(md, "## Summary\n");
    let _ = writeln!(md, "| method | mean norm. AP rank | std | mean AP | mean top-q | avg. position |");
    let _ = writeln!(md, "|---|---|---|---|---|---|");
    for s in &report.summaries {
        let _ = writeln!(
            md,
            "| {} | {:.4} | {:.4} | {:.4} | {:.3} | {:.2} |",
            s.method, s.mean_normalized_rank, s.std_normalized_rank, s.mean_ap, s.mean_top_q, s.mean_position
        );
    }
    let _ = writeln!(md, "\n## Normalized AP rank per dataset\n");
    let _ = write!(md, "| dataset |");
    for m in &methods {
        let _ = write!(md, " {m} |");
    }
    let _ = write!(md, "\n|---|");
    for _ in &methods {
        let _ = write!(md, "---|");
    }
    md.push('\n');
    let mut datasets: Vec<&str> = Vec::new();
    for r in &report.rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    for d in datasets {
        let _ = write!(md, "| {d} |");
        for m in &methods {
            match report.rows.iter().find(|r| r.dataset == d && r.method == *m) {
                Some(r) => {
                    let _ = write!(md, " {:.4} |", r.normalized_rank);
                }
                None => md.push_str(" |"),
            }
        }
        md.push('\n');
    }
    let _ = writeln!(md, "\n## Paired Wilcoxon signed-rank tests\n");
    let _ = writeln!(md, "| method | baseline | n | p (two-sided) | p (method better) |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for p in &report.pairwise {
        match &p.test {
            Some(t) => {
                let _ = writeln!(md, "| {} | {} | {} | {:.4} | {:.4} |", p.method, p.baseline, t.n, t.p_two_sided, t.p_greater);
            }
            None => {
                let _ = writeln!(md, "| {} | {} | – | NA | NA |", p.method, p.baseline);
            }
        }
    }
    let _ = writeln!(
        md,
        "\ntop-q is the smallest q in 1%..100% such that the selected AP reaches the ⌈q·m⌉-th best grid AP."
    );
    md
}

pub fn write_report(dir: &Path, space: &HpSpace, report: &BenchmarkReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_report_csv(&dir.join("report.csv"), space, report)?;
    write_wilcoxon_csv(&dir.join("wilcoxon.csv"), report)?;
    let md = dir.join("report.md");
    fs::write(&md, report_markdown(report, space.algorithm.name())).map_err(|e| CliError::io(&md, e))
}
