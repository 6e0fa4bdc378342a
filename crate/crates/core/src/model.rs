//! Domain types shared by the allocator, simulator, engine and scenario
//! layers. Construction validates every invariant; values are immutable
//! afterwards and safe to share across threads.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Validation errors raised while constructing domain values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("batch contains no jobs")]
    EmptyBatch,
    #[error("job {id} has size 0; every job part needs at least one element")]
    ZeroSize { id: u64 },
    #[error("job {id} has hidden_dim 0")]
    BadHiddenDim { id: u64 },
    #[error("cores must be >= 1")]
    BadCores,
    #[error("duplicate job id {id} within a batch")]
    DuplicateId { id: u64 },
    #[error("allocation plan must assign every part at least one thread")]
    BadPlan,
    #[error("cost model parameters must be finite and non-negative")]
    BadCostParam,
    #[error("cost model needs sigma or pi strictly positive")]
    NoComputeTerm,
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
}

/// One independent part of a divided job.
///
/// `size` is an abstract element count (rows for the matrix kernel,
/// tokens for sequence workloads); how it maps to work is a backend
/// concern. `seed` drives the deterministic input generator and
/// `hidden_dim` is the kernel width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: u64,
    pub size: usize,
    pub seed: u64,
    pub hidden_dim: usize,
}

impl JobSpec {
    pub const DEFAULT_HIDDEN_DIM: usize = 64;

    /// Creates a job with the default kernel width and `seed = id`.
    pub fn new(id: u64, size: usize) -> Self {
        Self { id, size, seed: id, hidden_dim: Self::DEFAULT_HIDDEN_DIM }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_hidden_dim(mut self, hidden_dim: usize) -> Self {
        self.hidden_dim = hidden_dim;
        self
    }
}

/// A validated batch: the `k` independent parts of one job plus the
/// core budget `C` they compete for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    jobs: Vec<JobSpec>,
    cores: usize,
}

impl Batch {
    /// Validates and builds a batch. Jobs must be non-empty with
    /// positive sizes and widths, ids unique, and `cores >= 1`.
    pub fn new(jobs: Vec<JobSpec>, cores: usize) -> Result<Self, ModelError> {
        if jobs.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        if cores < 1 {
            return Err(ModelError::BadCores);
        }
        let mut seen = Vec::with_capacity(jobs.len());
        for job in &jobs {
            if job.size < 1 {
                return Err(ModelError::ZeroSize { id: job.id });
            }
            if job.hidden_dim < 1 {
                return Err(ModelError::BadHiddenDim { id: job.id });
            }
            if seen.contains(&job.id) {
                return Err(ModelError::DuplicateId { id: job.id });
            }
            seen.push(job.id);
        }
        Ok(Self { jobs, cores })
    }

    /// Convenience constructor from bare sizes: ids and seeds run 0..k,
    /// kernel width is the default.
    pub fn from_sizes(sizes: &[usize], cores: usize) -> Result<Self, ModelError> {
        let jobs = sizes.iter().enumerate().map(|(i, &s)| JobSpec::new(i as u64, s)).collect();
        Self::new(jobs, cores)
    }

    pub fn jobs(&self) -> &[JobSpec] {
        &self.jobs
    }

    pub fn cores(&self) -> usize {
        self.cores
    }

    /// Number of job parts (`k`).
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn total_size(&self) -> usize {
        self.jobs.iter().map(|j| j.size).sum()
    }
}

/// Execution variant. The first four carry a per-part allocation plan;
/// `pad-batch` merges the batch into one padded kernel call and
/// `no-batch` processes parts one at a time with all cores, like `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "prun-1")]
    Prun1,
    #[serde(rename = "prun-eq")]
    PrunEq,
    #[serde(rename = "prun-def")]
    PrunDef,
    #[serde(rename = "pad-batch")]
    PadBatch,
    #[serde(rename = "no-batch")]
    NoBatch,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Base,
        Variant::Prun1,
        Variant::PrunEq,
        Variant::PrunDef,
        Variant::PadBatch,
        Variant::NoBatch,
    ];

    /// Variants that execute through a per-part allocation plan.
    /// `pad-batch` is the one exception: it runs a single merged kernel.
    pub fn has_plan(self) -> bool {
        !matches!(self, Variant::PadBatch)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Prun1 => "prun-1",
            Variant::PrunEq => "prun-eq",
            Variant::PrunDef => "prun-def",
            Variant::PadBatch => "pad-batch",
            Variant::NoBatch => "no-batch",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Variant::Base),
            "prun-1" => Ok(Variant::Prun1),
            "prun-eq" => Ok(Variant::PrunEq),
            "prun-def" => Ok(Variant::PrunDef),
            "pad-batch" => Ok(Variant::PadBatch),
            "no-batch" => Ok(Variant::NoBatch),
            other => Err(ModelError::UnknownVariant(other.to_string())),
        }
    }
}

/// Per-part worker-thread counts, aligned index-for-index with the jobs
/// of the batch the plan was computed for.
///
/// `sequential` marks plans whose parts run one at a time (the `base`
/// and `no-batch` variants); concurrent plans launch every part before
/// joining any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationPlan {
    threads: Vec<usize>,
    variant: Variant,
    sequential: bool,
}

impl AllocationPlan {
    pub fn new(threads: Vec<usize>, variant: Variant, sequential: bool) -> Result<Self, ModelError> {
        if threads.is_empty() || threads.iter().any(|&t| t < 1) {
            return Err(ModelError::BadPlan);
        }
        Ok(Self { threads, variant, sequential })
    }

    pub fn threads(&self) -> &[usize] {
        &self.threads
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn is_sequential(&self) -> bool {
        self.sequential
    }

    pub fn len(&self) -> usize {
        self.threads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn total_threads(&self) -> usize {
        self.threads.iter().sum()
    }
}

/// Analytic per-part execution time model:
///
/// ```text
/// T(n, c) = sigma * n  +  pi * n / c  +  kappa * c
/// ```
///
/// `sigma` is non-parallelizable time per element, `pi` perfectly
/// parallelizable time per element, and `kappa` coordination overhead
/// per worker thread. `kappa > 0` puts small inputs in a negative-scaling
/// regime: past `c* = sqrt(pi * n / kappa)` more threads are slower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub sigma: f64,
    pub pi: f64,
    pub kappa: f64,
}

impl CostModel {
    pub fn new(sigma: f64, pi: f64, kappa: f64) -> Result<Self, ModelError> {
        for v in [sigma, pi, kappa] {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::BadCostParam);
            }
        }
        if sigma == 0.0 && pi == 0.0 {
            return Err(ModelError::NoComputeTerm);
        }
        Ok(Self { sigma, pi, kappa })
    }
}

/// One measured (or simulated) execution of a batch under a variant.
///
/// `part_latencies` holds one entry per executed kernel: one per job
/// part for planned variants, a single entry for `pad-batch`, and one
/// per pipeline stage for pipeline scenarios. Checksums are present for
/// the real backend only. Time is in model units for the simulator and
/// milliseconds for the CPU engine; `throughput` is jobs per time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub variant: Variant,
    pub cores: usize,
    pub rep: usize,
    pub batch_index: usize,
    pub part_latencies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub part_checksums: Option<Vec<u64>>,
    pub makespan: f64,
    pub throughput: f64,
}

impl RunRecord {
    /// Batch-level checksum: a fixed-order polynomial fold of the part
    /// checksums. `None` for simulated records.
    pub fn batch_checksum(&self) -> Option<u64> {
        self.part_checksums.as_ref().map(|sums| {
            sums.iter().fold(0u64, |acc, &s| acc.wrapping_mul(0x100_0000_01B3).wrapping_add(s))
        })
    }
}
