//! Per-group summary statistics over run records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use prun_core::model::RunRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("cannot summarize an empty group")]
    EmptyGroup,
}

/// Sample statistics of one group's makespans. `stddev` uses the n-1
/// denominator and is absent for singleton groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub mean: f64,
    pub stddev: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl StatsSummary {
    pub fn from_values(values: &[f64]) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptyGroup);
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stddev = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { n, mean, stddev, min, max })
    }
}

/// Group key: `scenario/variant/cores`.
pub type GroupKey = String;

pub fn group_key(record: &RunRecord) -> GroupKey {
    format!("{}/{}/{}", record.scenario, record.variant, record.cores)
}

/// Summarizes makespans per `(scenario, variant, cores)` group,
/// preserving first-appearance order of the groups.
pub fn summarize(records: &[RunRecord]) -> Vec<(GroupKey, StatsSummary)> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for rec in records {
        let key = group_key(rec);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(rec.makespan);
    }
    order
        .into_iter()
        .map(|key| {
            let summary = StatsSummary::from_values(&groups[&key]).expect("group is non-empty");
            (key, summary)
        })
        .collect()
}
