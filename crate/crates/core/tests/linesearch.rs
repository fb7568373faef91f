mod common;

use common::rng;
use ngcp::linesearch::{more_thuente, strong_wolfe, LineSearchParams, LineSearchStatus};
use rand::Rng;

/// `φ(β) = a(β − m)² + c·sin(ωβ) + e·β⁴`, shifted so that `φ′(0) < 0`.
fn random_phi(seed: u64) -> impl Fn(f64) -> (f64, f64) {
    let mut rng = rng(seed);
    let a = rng.gen_range(0.1..10.0);
    let m = 10f64.powf(rng.gen_range(-3.0..2.0));
    let c = rng.gen_range(0.0..0.5) * a * m * m;
    let w = rng.gen_range(0.1..5.0) / m;
    let e = rng.gen_range(0.0..0.1) * a / (m * m);
    let extra = (c * w).max(0.0) + 1e-3;
    move |b: f64| {
        let v = a * (b - m).powi(2) + c * (w * b).sin() + e * b.powi(4) - extra * b;
        let d = 2.0 * a * (b - m) + c * w * (w * b).cos() + 4.0 * e * b.powi(3) - extra;
        (v, d)
    }
}

#[test]
fn randomized_searches_honor_the_contract() {
    let params = LineSearchParams::default();
    let mut converged = 0;
    for seed in 0..100 {
        let phi = random_phi(seed);
        let (f0, d0) = phi(0.0);
        assert!(d0 < 0.0);
        let mut evals = 0;
        let res = more_thuente(
            |b| {
                evals += 1;
                phi(b)
            },
            f0,
            d0,
            &params,
        )
        .unwrap();
        assert!(res.evals <= 20 && res.evals == evals);
        assert!(res.step > 0.0);
        if res.status == LineSearchStatus::Converged {
            converged += 1;
            assert!(strong_wolfe(res.step, res.value, res.slope, f0, d0, &params), "seed {seed}");
            assert!(res.value <= f0 + params.ftol * res.step * d0);
            assert!(res.slope.abs() <= params.gtol * d0.abs());
        }
    }
    assert!(converged >= 95, "only {converged} searches converged");
}

#[test]
fn accepted_steps_are_in_the_wolfe_set_of_a_grid_oracle() {
    // The grid finds Wolfe points for every problem, so the search should too.
    let params = LineSearchParams::default();
    for seed in 200..230 {
        let phi = random_phi(seed);
        let (f0, d0) = phi(0.0);
        let grid_has_point = (1..200_000).map(|k| k as f64 * 1e-3).any(|b| {
            let (v, d) = phi(b);
            strong_wolfe(b, v, d, f0, d0, &params)
        });
        let res = more_thuente(&phi, f0, d0, &params).unwrap();
        if grid_has_point {
            assert_eq!(res.status, LineSearchStatus::Converged, "seed {seed}");
        }
    }
}
