use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use interq_core::metrics::{comparative_factors, MetricsReport};
use interq_core::sim::SimOutcome;
use interq_core::{JobSpec, Schedule};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn round4(x: f64) -> f64 {
    (x * 1.0e4).round() / 1.0e4
}

/// Times in seconds at four decimals.
pub fn rounded(m: &MetricsReport) -> MetricsReport {
    MetricsReport {
        avg_queue_time: round4(m.avg_queue_time),
        avg_run_time: round4(m.avg_run_time),
        avg_total_time: round4(m.avg_total_time),
        makespan: round4(m.makespan),
        ..m.clone()
    }
}

/// `metric value` lines rendered from the serialized report.
pub fn summary_table(m: &MetricsReport) -> Result<String> {
    let value = serde_json::to_value(m)?;
    let mut out = String::new();
    if let Some(fields) = value.as_object() {
        for (k, v) in fields {
            if !v.is_null() {
                writeln!(out, "{k:<20} {v}")?;
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct GanttRow<'a> {
    fragment: &'a str,
    job: String,
    module: u32,
    start_ns: u64,
    end_ns: u64,
    stage: String,
}

/// Columns: fragment, job, module, start_ns, end_ns, stage.
pub fn write_gantt(path: &Path, s: &Schedule) -> Result<()> {
    let pool = s.pool();
    let mut rows = Vec::new();
    for e in &s.entries {
        for (id, end) in &e.fragment_ends {
            let f = &pool[id];
            rows.push(GanttRow {
                fragment: id.as_str(),
                job: f.job_id().to_string(),
                module: e.group.module.0,
                start_ns: e.start_ns,
                end_ns: *end,
                stage: serde_json::to_value(f.stage)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
            });
        }
    }
    rows.sort_by(|a, b| (a.start_ns, a.module, a.fragment).cmp(&(b.start_ns, b.module, b.fragment)));
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are metrics, columns are configurations.
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<(&'static str, Vec<f64>)>,
}

pub fn comparison(runs: &[(String, SimOutcome)], baseline: &str) -> Result<Comparison> {
    let base = &runs
        .iter()
        .find(|(id, _)| id == baseline)
        .expect("baseline checked by the caller")
        .1
        .metrics;
    let mut factors = Vec::new();
    for (id, r) in runs {
        factors.push(
            comparative_factors(&r.metrics, base)
                .with_context(|| format!("factors of {id} against {baseline}"))?,
        );
    }
    let col = |f: &dyn Fn(&MetricsReport) -> f64| runs.iter().map(|(_, r)| f(&r.metrics)).collect();
    let rows = vec![
        ("jobs_completed", col(&|m| m.jobs_completed as f64)),
        ("jobs_omitted", col(&|m| m.jobs_omitted as f64)),
        ("makespan", col(&|m| m.makespan)),
        ("avg_queue_length", col(&|m| m.avg_queue_length)),
        ("avg_queue_time", col(&|m| m.avg_queue_time)),
        ("avg_run_time", col(&|m| m.avg_run_time)),
        ("avg_total_time", col(&|m| m.avg_total_time)),
        ("workload_changes", col(&|m| m.workload_changes as f64)),
        ("avg_lpst", col(&|m| m.avg_lpst)),
        ("trf", factors.iter().map(|f| f.0).collect()),
        ("tirf", factors.iter().map(|f| f.1).collect()),
        ("tiif", factors.iter().map(|f| f.2).collect()),
    ];
    Ok(Comparison {
        columns: runs.iter().map(|(id, _)| id.clone()).collect(),
        rows,
    })
}

pub fn write_comparison(path: &Path, t: &Comparison) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["metric".to_string()];
    header.extend(t.columns.iter().cloned());
    w.write_record(&header)?;
    for (name, values) in &t.rows {
        let mut record = vec![name.to_string()];
        record.extend(values.iter().map(|v| format!("{v:.4}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn comparison_text(t: &Comparison) -> String {
    let width = t.columns.iter().map(String::len).max().unwrap_or(0).max(10);
    let mut out = format!("{:<18}", "metric");
    for c in &t.columns {
        let _ = write!(out, " {c:>width$}");
    }
    out.push('\n');
    for (name, values) in &t.rows {
        let _ = write!(out, "{name:<18}");
        for v in values {
            let _ = write!(out, " {v:>width$.4}");
        }
        out.push('\n');
    }
    out
}

/// One row of `characterize.csv`.
#[derive(Debug, Serialize)]
pub struct Characterization {
    pub job: String,
    pub qubits: u32,
    pub partitions: usize,
    pub remote_ops: u64,
    pub extra_qubits: u64,
    pub status: String,
}

impl Characterization {
    pub fn whole(j: &JobSpec) -> Self {
        Self {
            job: j.id.to_string(),
            qubits: j.qubits,
            partitions: 1,
            remote_ops: 0,
            extra_qubits: 0,
            status: "fits".into(),
        }
    }
}

pub fn write_characterization(path: &Path, rows: &[Characterization]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
