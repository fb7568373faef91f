use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ngcp::tensor::mttkrp;
use ngcp::{gradient, objective};
use ngcp_bench::{dense, laplacian};

fn mttkrp_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("mttkrp_dense");
    for s in [20, 50] {
        let fx = dense(s, 0.5);
        group.bench_with_input(BenchmarkId::from_parameter(s), &fx, |b, fx| {
            b.iter(|| mttkrp(&fx.tensor, fx.start.factors(), 1).unwrap())
        });
    }
    group.finish();
}

fn mttkrp_sparse(c: &mut Criterion) {
    let mut group = c.benchmark_group("mttkrp_sparse");
    for (d, s) in [(3, 4), (3, 10), (4, 6)] {
        let fx = laplacian(d, s);
        group.bench_with_input(BenchmarkId::from_parameter(format!("d{d}s{s}")), &fx, |b, fx| {
            b.iter(|| mttkrp(&fx.tensor, fx.start.factors(), 0).unwrap())
        });
    }
    group.finish();
}

fn objective_gradient(c: &mut Criterion) {
    let fx = dense(50, 0.5);
    c.bench_function("objective_dense_50", |b| b.iter(|| objective(&fx.tensor, &fx.start).unwrap()));
    c.bench_function("gradient_dense_50", |b| b.iter(|| gradient(&fx.tensor, &fx.start).unwrap()));
}

criterion_group!(benches, mttkrp_dense, mttkrp_sparse, objective_gradient);
criterion_main!(benches);
