mod common;

use common::*;
use ngcp::linesearch::LineSearchParams;
use ngcp::ncg::{ncg_solve_flat, NcgConfig};
use ngcp::ngmres::{ngmres_iterate, AccelWindow};
use ngcp::problems::{gen_dense_problem, random_initial_guess, DenseProblemSpec};
use ngcp::solver::{CpProblem, SmoothProblem};
use ngcp::{als_solve, fit_h, ncg_solve, ngmres_solve, NgmresConfig, Result, StopReason, Tensor};

fn exact_problem(s: usize, seed: u64) -> Tensor {
    let spec = DenseProblemSpec { s, c: 0.5, rank: 3, l1: 0.0, l2: 0.0, seed };
    Tensor::Dense(gen_dense_problem(&spec).unwrap().tensor)
}

#[test]
fn ngmres_recovers_an_exact_low_rank_tensor() {
    let t = exact_problem(10, 3);
    let k0 = random_initial_guess(t.shape(), 3, 3).unwrap();
    let sol = ngmres_solve(&t, &k0, &NgmresConfig { max_iters: 300, ..Default::default() }).unwrap();
    assert_eq!(sol.stop_reason, StopReason::GradTol);
    assert!(fit_h(&t, &sol.model).unwrap() <= 1e-8);
}

#[test]
fn ngmres_trace_bookkeeping() {
    let t = exact_problem(8, 5);
    let k0 = random_initial_guess(t.shape(), 3, 5).unwrap();
    let cfg = NgmresConfig { window: 3, max_iters: 100, ..Default::default() };
    let sol = ngmres_solve(&t, &k0, &cfg).unwrap();
    let recs = &sol.trace.records;
    assert_eq!(recs[0].iter, 0);
    assert!(recs.windows(2).all(|w| w[1].iter == w[0].iter + 1));
    let last = recs.last().unwrap();
    assert_eq!(last.precond_calls, sol.trace.iterations());
    assert!(last.fevals > 2 * sol.trace.iterations());
    assert!(recs[..recs.len() - 1].iter().all(|r| r.gnorm_rel > 0.0));
}

#[test]
fn window_size_and_line_search_decrease_on_a_cp_problem() {
    let spec = DenseProblemSpec { s: 8, c: 0.8, rank: 3, l1: 1.0, l2: 1.0, seed: 9 };
    let t = Tensor::Dense(gen_dense_problem(&spec).unwrap().tensor);
    let problem = CpProblem::new(&t, 3).unwrap();
    let cfg = NgmresConfig { window: 4, ..Default::default() };
    let mut u = random_initial_guess(t.shape(), 3, 9).unwrap().normalize_and_reorder().pack().into_vec();
    let (_, g) = problem.value_and_gradient(&u).unwrap();
    let mut window = AccelWindow::new(cfg.window);
    window.push(u.clone(), g);
    let mut restarts = 0;
    for _ in 0..40 {
        let u_bar = ngcp::solver::OneStepUpdate::update(&problem, &u).unwrap();
        let (f_bar, _) = problem.value_and_gradient(&u_bar).unwrap();
        let out = ngmres_iterate(&problem, &cfg, &mut window, &u).unwrap();
        assert!(window.len() <= 4);
        if out.restart {
            restarts += 1;
            assert_eq!(window.len(), 1);
        }
        assert!(out.f <= f_bar * (1.0 + 1e-12), "{} > {}", out.f, f_bar);
        // The stored gradient is the gradient at the canonical iterate.
        let (f, g) = problem.value_and_gradient(&out.u).unwrap();
        assert!((f - out.f).abs() <= 1e-10 * (1.0 + f));
        let diff: Vec<f64> = g.iter().zip(&out.g).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-8 * (1.0 + norm(&g)));
        u = out.u;
    }
    let _ = restarts;
}

#[test]
fn stationary_start_stops_at_iteration_zero() {
    let mut rng = rng(31);
    let k = random_ktensor(&mut rng, &[4, 5, 3], 2);
    let t = Tensor::Dense(k.full().unwrap());
    let cfg = NgmresConfig::default();
    let sol = ngmres_solve(&t, &k, &cfg).unwrap();
    assert_eq!(sol.stop_reason, StopReason::GradTol);
    assert_eq!(sol.trace.iterations(), 0);
    let ncg = ncg_solve(&t, &k, &NcgConfig::default()).unwrap();
    assert_eq!(ncg.stop_reason, StopReason::GradTol);
    assert_eq!(ncg.trace.iterations(), 0);
}

#[test]
fn solvers_share_the_starting_objective() {
    let t = exact_problem(6, 4);
    let k0 = random_initial_guess(t.shape(), 3, 4).unwrap();
    let a = als_solve(&t, &k0, 1e-9, 5).unwrap();
    let n = ngmres_solve(&t, &k0, &NgmresConfig { max_iters: 5, ..Default::default() }).unwrap();
    let c = ncg_solve(&t, &k0, &NcgConfig { max_iters: 5, ..Default::default() }).unwrap();
    assert_eq!(a.trace.records[0].f, n.trace.records[0].f);
    assert_eq!(a.trace.records[0].f, c.trace.records[0].f);
}

#[test]
fn als_trace_is_monotone() {
    let spec = DenseProblemSpec { s: 10, c: 0.7, rank: 3, l1: 5.0, l2: 5.0, seed: 2 };
    let t = Tensor::Dense(gen_dense_problem(&spec).unwrap().tensor);
    let k0 = random_initial_guess(t.shape(), 3, 2).unwrap();
    let sol = als_solve(&t, &k0, 1e-9, 200).unwrap();
    for w in sol.trace.records.windows(2) {
        assert!(w[1].f <= w[0].f * (1.0 + 1e-12));
    }
    assert_eq!(sol.trace.last().unwrap().precond_calls, sol.trace.iterations());
}

struct Quadratic {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SmoothProblem for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.b.len();
        let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.a[i + j * n] * u[j]).sum::<f64>() - self.b[i]).collect();
        Ok((0.5 * (dot(&g, u) - dot(&self.b, u)), g))
    }
}

#[test]
fn ncg_terminates_on_spd_quadratics() {
    use rand::Rng;
    for seed in 0..5 {
        let mut rng = rng(40 + seed);
        let n = 5;
        let m: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i + j * n] =
                    (0..n).map(|k| m[i + k * n] * m[j + k * n]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = Quadratic { a: a.clone(), b: b.clone() };
        // Tight curvature condition makes each search nearly exact.
        let ls = LineSearchParams { ftol: 1e-8, gtol: 1e-6, ..Default::default() };
        let cfg = NcgConfig { tol_grad: 1e-8, max_iters: n + 2, linesearch: ls };
        let sol = ncg_solve_flat(&q, &[0.0; 5], &cfg).unwrap();
        assert_eq!(sol.stop_reason, StopReason::GradTol, "seed {seed}");

        let direct = nalgebra::DMatrix::from_column_slice(n, n, &a)
            .cholesky()
            .unwrap()
            .solve(&nalgebra::DVector::from_column_slice(&b));
        for (x, y) in sol.iterate.iter().zip(direct.iter()) {
            assert!((x - y).abs() <= 1e-7);
        }
        for w in sol.trace.records.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
    }
}
