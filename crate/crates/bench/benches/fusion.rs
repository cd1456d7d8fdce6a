use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spahm_bench::local_groups;
use spahm_core::fusion::{build_cost, fuse, initial_hypers, CostPath, FusionConfig, GlobalState};
use std::hint::black_box;

fn fuse_simulated(c: &mut Criterion) {
    let mut group = c.benchmark_group("fuse");
    group.sample_size(10);
    for (l, d, j) in [(10, 10, 5), (50, 50, 20)] {
        let groups = local_groups(l, d, j, 1);
        let init = initial_hypers(&groups, 1.0, 1.0).unwrap();
        let cfg = FusionConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(format!("L{l}_d{d}_J{j}")), &groups, |b, g| {
            b.iter(|| fuse(black_box(g), &cfg, &init).unwrap())
        });
    }
    group.finish();
}

fn cost_paths(c: &mut Criterion) {
    let groups = local_groups(50, 50, 20, 2);
    let init = initial_hypers(&groups, 1.0, 1.0).unwrap();
    let fused = fuse(&groups, &FusionConfig::default(), &init).unwrap();
    let mut state: GlobalState = fused.state;
    state.lift_group(0);
    let ibp = state.hyper.ibp(FusionConfig::default().penalty);
    let mut group = c.benchmark_group("cost_matrix");
    for (name, path) in [("gaussian", CostPath::Gaussian), ("general", CostPath::General)] {
        group.bench_function(name, |b| {
            b.iter(|| build_cost(path, black_box(&state), &groups, 0, &ibp).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fuse_simulated, cost_paths);
criterion_main!(benches);
