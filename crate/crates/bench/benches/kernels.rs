use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use prun_bench::hetero_batch;
use prun_core::allocator::plan_for_variant;
use prun_core::engine::{run_kernel, run_padded_batch, run_prun};
use prun_core::model::{JobSpec, Variant};

fn kernel_scaling(c: &mut Criterion) {
    let cpus = std::thread::available_parallelism().map(usize::from).unwrap_or(1);
    let job = JobSpec { id: 0, size: 512, seed: 3, hidden_dim: 64 };
    let mut group = c.benchmark_group("run_kernel_512x64");
    group.sample_size(20);
    for threads in [1, 2, cpus.max(2)] {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| run_kernel(&job, t, false));
        });
    }
    group.finish();
}

fn variants_on_hetero_batch(c: &mut Criterion) {
    let cpus = std::thread::available_parallelism().map(usize::from).unwrap_or(1);
    let batch = hetero_batch(4, 16, 256, cpus, 11);
    let mut group = c.benchmark_group("hetero_batch_4parts");
    group.sample_size(20);
    for variant in [Variant::Base, Variant::Prun1, Variant::PrunDef] {
        let plan = plan_for_variant(&batch, variant).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(variant),
            &plan,
            |b, plan| b.iter(|| run_prun(&batch, plan, false).unwrap()),
        );
    }
    group.bench_function("pad-batch", |b| b.iter(|| run_padded_batch(&batch, false)));
    group.finish();
}

criterion_group!(benches, kernel_scaling, variants_on_hetero_batch);
criterion_main!(benches);
