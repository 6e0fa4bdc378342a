//! Analytic execution backend.
//!
//! Computes noise-free part latencies from a [`CostModel`] and derives
//! makespans by deterministic greedy gang scheduling on `C` virtual
//! cores, in submission order without backfilling. Time is in abstract
//! model units.

use thiserror::Error;

use crate::model::{AllocationPlan, Batch, CostModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("plan covers {plan} parts but batch has {batch}")]
    PlanMismatch { plan: usize, batch: usize },
    #[error("part {part} wants {threads} threads but only {cores} cores exist")]
    ThreadsExceedCores { part: usize, threads: usize, cores: usize },
}

/// Outcome of one simulated batch execution.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Latency of each executed kernel, in model units.
    pub part_times: Vec<f64>,
    /// Completion time of the last part.
    pub makespan: f64,
    /// `(start, end)` per part on the virtual-core timeline.
    pub schedule: Vec<(f64, f64)>,
}

impl SimResult {
    fn from_schedule(part_times: Vec<f64>, schedule: Vec<(f64, f64)>) -> Self {
        let makespan = schedule.iter().map(|&(_, end)| end).fold(0.0, f64::max);
        Self { part_times, makespan, schedule }
    }
}

/// Analytic latency of one part:
/// `T(n, c) = sigma * n + (pi * n) / c + kappa * c`, evaluated in double
/// precision exactly in that order.
pub fn part_time(size: usize, threads: usize, model: &CostModel) -> f64 {
    debug_assert!(size >= 1 && threads >= 1);
    let n = size as f64;
    let c = threads as f64;
    model.sigma * n + model.pi * n / c + model.kappa * c
}

/// Simulates a planned execution of the batch.
///
/// Concurrent plans are gang-scheduled greedily in submission order:
/// part `i` starts at the earliest instant at which `threads[i]` cores
/// are simultaneously free. When the plan's threads sum to at most `C`
/// this degenerates to fully concurrent execution and the makespan is
/// the largest part time. Sequential plans run parts back-to-back.
pub fn simulate_prun(
    batch: &Batch,
    plan: &AllocationPlan,
    model: &CostModel,
) -> Result<SimResult, SimError> {
    if plan.len() != batch.len() {
        return Err(SimError::PlanMismatch { plan: plan.len(), batch: batch.len() });
    }
    let cores = batch.cores();
    for (part, &threads) in plan.threads().iter().enumerate() {
        if threads > cores {
            return Err(SimError::ThreadsExceedCores { part, threads, cores });
        }
    }

    let part_times: Vec<f64> = batch
        .jobs()
        .iter()
        .zip(plan.threads())
        .map(|(job, &threads)| part_time(job.size, threads, model))
        .collect();

    let schedule = if plan.is_sequential() {
        let mut clock = 0.0;
        part_times
            .iter()
            .map(|&t| {
                let start = clock;
                clock += t;
                (start, clock)
            })
            .collect()
    } else {
        // Free time per virtual core; a part occupies the earliest
        // `threads[i]` cores from its start to its end.
        let mut free = vec![0.0f64; cores];
        let mut schedule = Vec::with_capacity(part_times.len());
        for (&t, &threads) in part_times.iter().zip(plan.threads()) {
            free.sort_by(f64::total_cmp);
            let start = free[threads - 1];
            let end = start + t;
            for slot in free.iter_mut().take(threads) {
                *slot = end;
            }
            schedule.push((start, end));
        }
        schedule
    };

    Ok(SimResult::from_schedule(part_times, schedule))
}

/// Simulates the whole batch as a single kernel padded to the longest
/// part: one job of `k * max(size)` elements on all `C` cores. Pad
/// elements cost the same as real ones.
pub fn simulate_padded_batch(batch: &Batch, model: &CostModel) -> SimResult {
    let max_size = batch.jobs().iter().map(|j| j.size).max().expect("batch is non-empty");
    let padded = batch.len() * max_size;
    let t = part_time(padded, batch.cores(), model);
    SimResult::from_schedule(vec![t], vec![(0.0, t)])
}

/// Simulates unbatched execution: each part one at a time with all `C`
/// cores; the makespan is the sum of part times.
pub fn simulate_no_batch(batch: &Batch, model: &CostModel) -> SimResult {
    let mut clock = 0.0;
    let mut part_times = Vec::with_capacity(batch.len());
    let mut schedule = Vec::with_capacity(batch.len());
    for job in batch.jobs() {
        let t = part_time(job.size, batch.cores(), model);
        schedule.push((clock, clock + t));
        clock += t;
        part_times.push(t);
    }
    SimResult::from_schedule(part_times, schedule)
}
