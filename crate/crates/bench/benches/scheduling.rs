use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use prun_bench::hetero_batch;
use prun_core::allocator::{allocate_proportional, plan_for_variant};
use prun_core::model::{CostModel, Variant};
use prun_core::simulator::simulate_prun;

fn allocation(c: &mut Criterion) {
    let mut group = c.benchmark_group("allocate_proportional");
    for k in [4usize, 64, 1024] {
        let batch = hetero_batch(k, 16, 512, 16, 42);
        group.bench_with_input(BenchmarkId::from_parameter(k), &batch, |b, batch| {
            b.iter(|| allocate_proportional(black_box(batch)));
        });
    }
    group.finish();
}

fn gang_scheduling(c: &mut Criterion) {
    let model = CostModel::new(0.05, 1.0, 0.0).unwrap();
    let mut group = c.benchmark_group("simulate_prun");
    for (k, cores) in [(8usize, 16usize), (64, 16), (256, 16)] {
        let batch = hetero_batch(k, 16, 512, cores, 7);
        let plan = plan_for_variant(&batch, Variant::PrunDef).unwrap();
        let id = BenchmarkId::from_parameter(format!("{k}parts_{cores}cores"));
        group.bench_with_input(id, &(batch, plan), |b, (batch, plan)| {
            b.iter(|| simulate_prun(black_box(batch), black_box(plan), &model).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, allocation, gang_scheduling);
criterion_main!(benches);
