use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::Metric;
use crate::optim::{RunTrace, TraceRecord};

/// Serializes a trace: `# key: value` metadata lines, then the header
/// `iter,elapsed_s,objective,<rmse|norm_loss>` and one row per record.
/// Floats use the shortest round-trip representation.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::new();
    for (k, v) in &trace.metadata {
        writeln!(out, "# {k}: {v}").unwrap();
    }
    writeln!(out, "iter,elapsed_s,objective,{}", trace.metric.label()).unwrap();
    for r in &trace.records {
        writeln!(out, "{},{},{},{}", r.iter, r.elapsed_s, r.objective, r.metric).unwrap();
    }
    out
}

pub fn write_trace(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, trace_csv(trace))?;
    Ok(())
}

pub fn parse_trace(path: impl AsRef<Path>) -> Result<RunTrace> {
    let path = path.as_ref();
    parse_trace_str(&fs::read_to_string(path)?).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

pub fn parse_trace_str(text: &str) -> std::result::Result<RunTrace, (usize, String)> {
    let mut metadata = Vec::new();
    let mut metric = None;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = meta
                .split_once(": ")
                .ok_or_else(|| (lineno, format!("malformed metadata {line:?}")))?;
            metadata.push((k.to_string(), v.to_string()));
            continue;
        }
        if metric.is_none() {
            metric = Some(match line {
                "iter,elapsed_s,objective,rmse" => Metric::Rmse,
                "iter,elapsed_s,objective,norm_loss" => Metric::NormLoss,
                _ => return Err((lineno, format!("unexpected header {line:?}"))),
            });
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err((lineno, format!("expected 4 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| (lineno, format!("bad number {s:?}")));
        records.push(TraceRecord {
            iter: f[0].parse().map_err(|_| (lineno, format!("bad iteration {:?}", f[0])))?,
            elapsed_s: num(f[1])?,
            objective: num(f[2])?,
            metric: num(f[3])?,
        });
    }
    let metric = metric.ok_or((0, "missing header".to_string()))?;
    Ok(RunTrace {
        metric,
        metadata,
        records,
    })
}
