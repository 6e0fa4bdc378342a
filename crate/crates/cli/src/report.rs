//! Machine-readable reports.
//!
//! CSV schema (exact header):
//!
//! ```text
//! scenario,variant,cores,rep,batch_index,part_index,part_latency,makespan,throughput,checksum
//! ```
//!
//! Each record emits one row per part followed by an aggregate row with
//! `part_index = -1` whose checksum is the batch-level fold. A trailing
//! comment block (`#`-prefixed, skipped by the parser) carries the
//! per-group summary and baseline speedups. The JSON report is an
//! object with a `records` array and a `summary` object keyed by
//! `scenario/variant/cores`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use prun_core::model::{RunRecord, Variant};

use crate::stats::{summarize, StatsSummary};

pub const CSV_HEADER: &str =
    "scenario,variant,cores,rep,batch_index,part_index,part_latency,makespan,throughput,checksum";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("report JSON: {0}")]
    Json(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scenario: String,
    variant: Variant,
    cores: usize,
    rep: usize,
    batch_index: usize,
    part_index: i64,
    part_latency: Option<f64>,
    makespan: f64,
    throughput: f64,
    checksum: Option<u64>,
}

/// Writes records plus the summary comment block.
pub fn write_csv<W: Write>(mut out: W, records: &[RunRecord]) -> io::Result<()> {
    let mut writer = csv::Writer::from_writer(&mut out);
    for rec in records {
        for (i, &latency) in rec.part_latencies.iter().enumerate() {
            writer
                .serialize(CsvRow {
                    scenario: rec.scenario.clone(),
                    variant: rec.variant,
                    cores: rec.cores,
                    rep: rec.rep,
                    batch_index: rec.batch_index,
                    part_index: i as i64,
                    part_latency: Some(latency),
                    makespan: rec.makespan,
                    throughput: rec.throughput,
                    checksum: rec.part_checksums.as_ref().map(|sums| sums[i]),
                })
                .map_err(into_io)?;
        }
        writer
            .serialize(CsvRow {
                scenario: rec.scenario.clone(),
                variant: rec.variant,
                cores: rec.cores,
                rep: rec.rep,
                batch_index: rec.batch_index,
                part_index: -1,
                part_latency: None,
                makespan: rec.makespan,
                throughput: rec.throughput,
                checksum: rec.batch_checksum(),
            })
            .map_err(into_io)?;
    }
    writer.flush()?;
    drop(writer);
    write_summary_comments(&mut out, records)
}

fn into_io(err: csv::Error) -> io::Error {
    io::Error::other(err)
}

fn write_summary_comments<W: Write>(out: &mut W, records: &[RunRecord]) -> io::Result<()> {
    let summary = summarize(records);
    for (key, s) in &summary {
        let stddev = s.stddev.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "# summary {key} n={} mean={} stddev={stddev} min={} max={}",
            s.n, s.mean, s.min, s.max
        )?;
    }
    // Baseline speedups: first variant seen per scenario/cores group is
    // the baseline; report mean-makespan ratios against it.
    let mut baselines: Vec<(String, String, f64)> = Vec::new();
    for (key, s) in &summary {
        let (scenario_cores, variant) = split_group_key(key);
        match baselines.iter().find(|(sc, _, _)| *sc == scenario_cores) {
            None => baselines.push((scenario_cores, variant, s.mean)),
            Some((_, base_variant, base_mean)) => {
                writeln!(
                    out,
                    "# speedup {scenario_cores} {base_variant}/{variant} = {}",
                    base_mean / s.mean
                )?;
            }
        }
    }
    Ok(())
}

/// Splits `scenario/variant/cores` into (`scenario cores`, variant).
fn split_group_key(key: &str) -> (String, String) {
    let mut parts = key.rsplitn(3, '/');
    let cores = parts.next().unwrap_or_default();
    let variant = parts.next().unwrap_or_default();
    let scenario = parts.next().unwrap_or_default();
    (format!("{scenario}@{cores}c"), variant.to_string())
}

/// Parses a CSV report back into records; comment lines are skipped and
/// the redundant aggregate checksum is ignored (it is derived).
pub fn parse_csv(text: &str) -> Result<Vec<RunRecord>, ReportError> {
    let mut reader =
        csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut pending: Option<RunRecord> = None;

    for row in reader.deserialize::<CsvRow>() {
        let row = row?;
        if row.part_index >= 0 {
            let rec = pending.get_or_insert_with(|| RunRecord {
                scenario: row.scenario.clone(),
                variant: row.variant,
                cores: row.cores,
                rep: row.rep,
                batch_index: row.batch_index,
                part_latencies: Vec::new(),
                part_checksums: None,
                makespan: row.makespan,
                throughput: row.throughput,
            });
            if rec.scenario != row.scenario
                || rec.variant != row.variant
                || rec.cores != row.cores
                || rec.rep != row.rep
                || rec.batch_index != row.batch_index
            {
                return Err(ReportError::Malformed(
                    "part rows of different records interleaved".into(),
                ));
            }
            if row.part_index as usize != rec.part_latencies.len() {
                return Err(ReportError::Malformed(format!(
                    "part_index {} out of order",
                    row.part_index
                )));
            }
            let latency = row.part_latency.ok_or_else(|| {
                ReportError::Malformed("part row without part_latency".into())
            })?;
            rec.part_latencies.push(latency);
            match (row.checksum, &mut rec.part_checksums) {
                (Some(sum), Some(sums)) => sums.push(sum),
                (Some(sum), none) if rec.part_latencies.len() == 1 => *none = Some(vec![sum]),
                (None, None) => {}
                _ => {
                    return Err(ReportError::Malformed(
                        "checksums must be present on all part rows or none".into(),
                    ))
                }
            }
        } else {
            let mut rec = pending.take().ok_or_else(|| {
                ReportError::Malformed("aggregate row without part rows".into())
            })?;
            rec.makespan = row.makespan;
            rec.throughput = row.throughput;
            records.push(rec);
        }
    }
    if pending.is_some() {
        return Err(ReportError::Malformed("record missing its aggregate row".into()));
    }
    Ok(records)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonReport {
    records: Vec<RunRecord>,
    summary: std::collections::BTreeMap<String, StatsSummary>,
}

pub fn write_json<W: Write>(out: W, records: &[RunRecord]) -> io::Result<()> {
    let report = JsonReport {
        records: records.to_vec(),
        summary: summarize(records).into_iter().collect(),
    };
    serde_json::to_writer_pretty(out, &report).map_err(io::Error::other)
}

pub fn parse_json(text: &str) -> Result<Vec<RunRecord>, ReportError> {
    let report: JsonReport =
        serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    Ok(report.records)
}
