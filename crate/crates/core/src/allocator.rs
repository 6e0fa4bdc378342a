//! Worker-thread allocation over the parts of a batch.
//!
//! The proportional strategy assigns each part a share of the `C`
//! available cores relative to its weight `w_i = size_i / total_size`:
//! a floor pass gives part `i` `max(1, floor(w_i * C))` threads, then a
//! remainder pass hands the still-unallocated cores one at a time to the
//! parts with the largest fractional remainder. Should the floor pass
//! overshoot instead (several tiny parts rounded up to their minimum of
//! one thread), a trim pass reclaims the surplus from the most
//! over-allocated parts, so a batch of `k <= C` parts always uses
//! exactly `C` cores. When there are more parts than cores every part
//! gets exactly one thread and surplus parts simply run after earlier
//! ones finish.
//!
//! Two simpler strategies are provided for comparison: one thread per
//! part (`prun-1`) and an equal split (`prun-eq`). `base` and `no-batch`
//! are expressed as sequential plans giving every part all `C` cores.

use crate::model::{AllocationPlan, Batch, Variant};

/// Relative weight of each part: `w_i = size_i / total_size`.
///
/// Weights are positive and sum to 1 (up to rounding); batch validation
/// guarantees `total_size >= 1`.
pub fn compute_weights(batch: &Batch) -> Vec<f64> {
    let total = batch.total_size() as f64;
    batch.jobs().iter().map(|j| j.size as f64 / total).collect()
}

/// Proportional allocation (`prun-def`).
///
/// With `k <= C` the result always sums to exactly `C`, via the award
/// pass when flooring under-allocates and the trim pass when bumping
/// over-allocates; with `k > C` every part gets one thread and the
/// batch is oversubscribed.
pub fn allocate_proportional(batch: &Batch) -> AllocationPlan {
    let k = batch.len();
    let cores = batch.cores();

    if k > cores {
        let threads = vec![1; k];
        return AllocationPlan::new(threads, Variant::PrunDef, false)
            .expect("all-ones plan is valid");
    }

    let weights = compute_weights(batch);
    let mut threads = Vec::with_capacity(k);
    // (part index, fractional remainder after the floor-and-bump pass).
    let mut remainders = Vec::with_capacity(k);
    let mut allocated = 0usize;

    for (index, &w) in weights.iter().enumerate() {
        let share = w * cores as f64;
        let mut count = share.floor() as usize;
        if count < 1 {
            count = 1;
        }
        // Bumped parts enter with a negative remainder and sort last.
        remainders.push((index, share - count as f64));
        threads.push(count);
        allocated += count;
    }

    if allocated < cores {
        // Stable sort, descending by remainder: ties keep index order.
        remainders.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut next = 0;
        while allocated < cores && next < remainders.len() {
            threads[remainders[next].0] += 1;
            allocated += 1;
            next += 1;
        }
    } else if allocated > cores {
        // Bumping tiny parts to one thread can overshoot the budget.
        // Reclaim one thread at a time from the eligible part (two or
        // more threads) with the smallest current remainder, i.e. the
        // most over-allocated one; ties lose from the higher index, the
        // mirror image of the award pass. Parts keep at least one
        // thread, and k <= C guarantees enough surplus exists.
        let mut current: Vec<f64> = remainders.iter().map(|&(_, r)| r).collect();
        while allocated > cores {
            let mut victim = None;
            for i in 0..threads.len() {
                if threads[i] < 2 {
                    continue;
                }
                match victim {
                    Some(v) if current[i] > current[v] => {}
                    _ => victim = Some(i),
                }
            }
            let v = victim.expect("some part holds more than one thread while over budget");
            threads[v] -= 1;
            current[v] += 1.0;
            allocated -= 1;
        }
    }

    AllocationPlan::new(threads, Variant::PrunDef, false).expect("threads are >= 1 by construction")
}

/// One worker thread per part (`prun-1`).
pub fn allocate_one_each(batch: &Batch) -> AllocationPlan {
    AllocationPlan::new(vec![1; batch.len()], Variant::Prun1, false)
        .expect("all-ones plan is valid")
}

/// Equal split (`prun-eq`): every part gets `max(1, floor(C / k))`.
pub fn allocate_equal(batch: &Batch) -> AllocationPlan {
    let share = (batch.cores() / batch.len()).max(1);
    AllocationPlan::new(vec![share; batch.len()], Variant::PrunEq, false)
        .expect("equal plan is valid")
}

/// Plan for any variant that executes through per-part thread counts.
///
/// `base` and `no-batch` give every part all `C` cores with the
/// sequential marker set. Returns `None` for `pad-batch`, which runs a
/// single merged kernel and has no per-part plan.
pub fn plan_for_variant(batch: &Batch, variant: Variant) -> Option<AllocationPlan> {
    match variant {
        Variant::PrunDef => Some(allocate_proportional(batch)),
        Variant::Prun1 => Some(allocate_one_each(batch)),
        Variant::PrunEq => Some(allocate_equal(batch)),
        Variant::Base | Variant::NoBatch => Some(
            AllocationPlan::new(vec![batch.cores(); batch.len()], variant, true)
                .expect("all-cores plan is valid"),
        ),
        Variant::PadBatch => None,
    }
}
