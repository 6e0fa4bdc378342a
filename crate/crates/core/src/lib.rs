//! Divide-and-conquer scheduling for batched CPU workloads.
//!
//! Given a batch of independent job parts, this crate allocates worker
//! threads to each part proportionally to its input size and executes
//! the parts concurrently, each under its own worker pool. Two backends
//! share the same planning layer: an exact analytic simulator driven by
//! a three-parameter cost model, and a real CPU engine running
//! deterministic integer kernels whose checksums certify that parallel
//! execution is bit-identical to a single-threaded reference.
//!
//! Modules:
//!
//! - [`model`] — validated domain types ([`Batch`], [`AllocationPlan`],
//!   [`CostModel`], [`RunRecord`]).
//! - [`allocator`] — proportional, one-each and equal-split thread
//!   allocation.
//! - [`simulator`] — cost-model latencies and greedy gang scheduling.
//! - [`engine`] — per-part worker pools over integer matrix kernels.
//! - [`scenarios`] — experiment generators and the backend runner.
//! - [`rng`] — the pinned counter-based mixing function behind every
//!   deterministic input.

pub mod allocator;
pub mod engine;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod simulator;

pub use model::{AllocationPlan, Batch, CostModel, JobSpec, ModelError, RunRecord, Variant};
pub use scenarios::{Backend, RunOpts, ScenarioSpec};
