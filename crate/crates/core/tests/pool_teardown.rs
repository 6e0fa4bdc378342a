//! Worker pools must not outlive their invocation. Runs as its own
//! process so the OS thread count is not polluted by parallel tests.

#![cfg(target_os = "linux")]

use prun_core::allocator;
use prun_core::model::Batch;

fn os_thread_count() -> usize {
    let status = std::fs::read_to_string("/proc/self/status").unwrap();
    status
        .lines()
        .find_map(|l| l.strip_prefix("Threads:"))
        .and_then(|v| v.trim().parse().ok())
        .unwrap()
}

/// Joined pthreads can linger in the kernel task list for a moment
/// after join returns; a leaked pool worker, by contrast, never goes
/// away. Poll briefly before declaring a leak.
fn assert_settles_to(expected: usize) {
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(5);
    loop {
        let count = os_thread_count();
        if count == expected {
            return;
        }
        if std::time::Instant::now() > deadline {
            assert_eq!(count, expected, "worker threads outlived their invocation");
        }
        std::thread::yield_now();
    }
}

#[test]
fn no_worker_outlives_prun() {
    let batch = Batch::from_sizes(&[32, 32, 32], 4).unwrap();
    let plan = allocator::allocate_proportional(&batch);
    let before = os_thread_count();
    for _ in 0..5 {
        prun_core::engine::run_prun(&batch, &plan, false).unwrap();
    }
    assert_settles_to(before);

    let sequential =
        allocator::plan_for_variant(&batch, prun_core::Variant::Base).unwrap();
    prun_core::engine::run_prun(&batch, &sequential, false).unwrap();
    assert_settles_to(before);

    prun_core::engine::run_padded_batch(&batch, false);
    assert_settles_to(before);
}
