//! Trace CSV files. Schema is fixed:
//! `iter,time_s,objective,fp_residual,consensus_residual,active_set`,
//! NaN encoded as an empty field, activated ids comma-joined (the csv
//! writer quotes the field when needed).

use std::path::Path;

use anyhow::{bail, Context, Result};
use pdfp::{IterationTrace, TraceRecord};

pub const TRACE_HEADER: [&str; 6] = [
    "iter",
    "time_s",
    "objective",
    "fp_residual",
    "consensus_residual",
    "active_set",
];

fn field(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Write the trace, keeping every `log_every`-th record plus the final one.
pub fn write_trace(path: &Path, trace: &IterationTrace, log_every: usize) -> Result<()> {
    let every = log_every.max(1);
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create trace file {}", path.display()))?;
    writer.write_record(TRACE_HEADER)?;
    let last = trace.len();
    for (i, rec) in trace.records.iter().enumerate() {
        if (i + 1) % every != 0 && i + 1 != last {
            continue;
        }
        let ids: Vec<String> = rec.active_set.iter().map(|n| n.to_string()).collect();
        writer.write_record([
            rec.iter.to_string(),
            format!("{}", rec.time_s),
            field(rec.objective),
            field(rec.fp_residual),
            field(rec.consensus_residual),
            ids.join(","),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Parsed trace file (the `active_set` column comes back as raw text).
pub struct TraceFile {
    pub records: Vec<TraceRecord>,
}

impl TraceFile {
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open trace file {}", path.display()))?;
    {
        let headers = reader.headers()?;
        let expected: Vec<&str> = TRACE_HEADER.to_vec();
        if headers.iter().collect::<Vec<_>>() != expected {
            bail!(
                "corrupt trace header in {}: expected `{}`, got `{}`",
                path.display(),
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            );
        }
    }
    let parse_opt = |s: &str| -> Result<f64> {
        if s.is_empty() {
            Ok(f64::NAN)
        } else {
            s.parse::<f64>().context("invalid numeric field")
        }
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != 6 {
            bail!("corrupt trace row in {}: {} fields", path.display(), row.len());
        }
        let active_set = if row[5].is_empty() {
            Vec::new()
        } else {
            row[5]
                .split(',')
                .map(|t| t.parse::<usize>().context("invalid active-set id"))
                .collect::<Result<Vec<usize>>>()?
        };
        records.push(TraceRecord {
            iter: row[0].parse().context("invalid iter")?,
            time_s: parse_opt(&row[1])?,
            objective: parse_opt(&row[2])?,
            fp_residual: parse_opt(&row[3])?,
            consensus_residual: parse_opt(&row[4])?,
            active_set,
        });
    }
    Ok(TraceFile { records })
}
