use criterion::{criterion_group, criterion_main, Criterion};
use ngcp::als::als_sweep;
use ngcp::ngmres::{ngmres_iterate, AccelWindow};
use ngcp::solver::{CpProblem, SmoothProblem};
use ngcp::NgmresConfig;
use ngcp_bench::{dense, laplacian};

fn sweeps(c: &mut Criterion) {
    let fx = dense(50, 0.9);
    c.bench_function("als_sweep_dense_50", |b| b.iter(|| als_sweep(&fx.tensor, &fx.start).unwrap()));
    let fx = laplacian(3, 10);
    c.bench_function("als_sweep_laplacian_d3s10", |b| b.iter(|| als_sweep(&fx.tensor, &fx.start).unwrap()));
}

fn ngmres_step(c: &mut Criterion) {
    let fx = dense(50, 0.9);
    let problem = CpProblem::new(&fx.tensor, fx.start.rank()).unwrap();
    let config = NgmresConfig::default();
    let mut u = fx.start.pack().into_vec();
    let (_, mut g) = problem.value_and_gradient(&u).unwrap();
    problem.canonicalize(&mut u, Some(&mut g));
    let mut window = AccelWindow::new(config.window);
    window.push(u.clone(), g);
    for _ in 0..config.window {
        u = ngmres_iterate(&problem, &config, &mut window, &u).unwrap().u;
    }
    c.bench_function("ngmres_iteration_dense_50", |b| {
        b.iter_batched(
            || window.clone(),
            |mut w| ngmres_iterate(&problem, &config, &mut w, &u).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, sweeps, ngmres_step);
criterion_main!(benches);
