use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spahm_bench::random_costs;
use spahm_core::lsap::solve_min;
use std::hint::black_box;

fn square(c: &mut Criterion) {
    let mut group = c.benchmark_group("lsap_square");
    for n in [10, 50, 100, 200] {
        let costs = random_costs(n, n, n as u64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &costs, |b, m| {
            b.iter(|| solve_min(black_box(m)).unwrap())
        });
    }
    group.finish();
}

// The matching step solves (K + L) × L problems: K existing atoms plus one
// new slot per local atom.
fn matching_shape(c: &mut Criterion) {
    let mut group = c.benchmark_group("lsap_matching_shape");
    for l in [25, 50, 100] {
        let costs = random_costs(3 * l, l, 7 + l as u64);
        group.bench_with_input(BenchmarkId::from_parameter(l), &costs, |b, m| {
            b.iter(|| solve_min(black_box(m)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, square, matching_shape);
criterion_main!(benches);
