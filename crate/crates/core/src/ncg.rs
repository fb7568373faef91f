//! Nonlinear conjugate gradients with the clamped Polak–Ribière update.

use crate::error::{CpError, Result};
use crate::kruskal::KruskalTensor;
use crate::linesearch::{more_thuente, LineSearchError, LineSearchParams};
use crate::solver::{CpProblem, CpSolution, Recorder, SmoothProblem, Solution, StopReason};
use crate::tensor::{dot, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcgConfig {
    pub tol_grad: f64,
    pub max_iters: usize,
    pub linesearch: LineSearchParams,
}

impl Default for NcgConfig {
    fn default() -> Self {
        Self { tol_grad: 1e-9, max_iters: 2000, linesearch: LineSearchParams::default() }
    }
}

/// Runs N-CG from `u0`. A failed line search restarts along `−g`; two
/// consecutive failures end the run with [`StopReason::LineSearchStall`].
pub fn ncg_solve_flat<P: SmoothProblem>(problem: &P, u0: &[f64], config: &NcgConfig) -> Result<Solution> {
    if !(config.tol_grad > 0.0) {
        return Err(CpError::InvalidParameter("tol_grad must be positive".into()));
    }
    config.linesearch.validate().map_err(|e| CpError::InvalidParameter(e.to_string()))?;

    let mut rec = Recorder::new(problem.data_norm());
    let mut u = u0.to_vec();
    let (mut f, mut g) = rec.evaluate(problem, &u)?;
    if rec.record(0, f, &g, false, None) <= config.tol_grad {
        return Ok(Solution { iterate: u, value: f, trace: rec.trace, stop_reason: StopReason::GradTol });
    }

    let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut stop = StopReason::MaxIters;
    let mut stalls = 0;
    let mut iter = 0;
    for _ in 0..config.max_iters {
        let mut slope0 = dot(&g, &d);
        let mut reset = false;
        if !(slope0 < 0.0) {
            d = g.iter().map(|x| -x).collect();
            slope0 = -dot(&g, &g);
            reset = true;
        }

        let mut cache: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        let mut failure: Option<CpError> = None;
        let along = |beta: f64| -> Vec<f64> { u.iter().zip(&d).map(|(x, di)| x + beta * di).collect() };
        let search = more_thuente(
            |beta| match rec.evaluate(problem, &along(beta)) {
                Ok((fb, gb)) => {
                    let slope = dot(&gb, &d);
                    cache.push((beta, fb, gb));
                    (fb, slope)
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::NAN, f64::NAN)
                }
            },
            f,
            slope0,
            &config.linesearch,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let res = match search {
            Ok(res) => res,
            Err(LineSearchError::NumericalStall { .. }) => {
                stalls += 1;
                if stalls >= 2 {
                    stop = StopReason::LineSearchStall;
                    break;
                }
                d = g.iter().map(|x| -x).collect();
                continue;
            }
            Err(e) => return Err(CpError::InvalidParameter(e.to_string())),
        };
        stalls = 0;

        let (beta, f_new, g_new) =
            cache.into_iter().rev().find(|(b, _, _)| *b == res.step).expect("returned step was evaluated");
        u = along(beta);

        let gg = dot(&g, &g);
        let pr = if gg > 0.0 {
            let num: f64 = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum();
            (num / gg).max(0.0)
        } else {
            0.0
        };
        for (di, gi) in d.iter_mut().zip(&g_new) {
            *di = -gi + pr * *di;
        }
        f = f_new;
        g = g_new;

        iter += 1;
        let gnorm = rec.record(iter, f, &g, reset, Some(beta));
        rec.trace.records.last_mut().expect("just recorded").cg_beta = Some(pr);
        if gnorm <= config.tol_grad {
            stop = StopReason::GradTol;
            break;
        }
    }
    Ok(Solution { iterate: u, value: f, trace: rec.trace, stop_reason: stop })
}

/// N-CG on a CP problem. Iterates are not normalized along the way; the
/// returned model is normalized once.
pub fn ncg_solve(t: &Tensor, k0: &KruskalTensor, config: &NcgConfig) -> Result<CpSolution> {
    let problem = CpProblem::new(t, k0.rank())?;
    let sol = ncg_solve_flat(&problem, &k0.pack(), config)?;
    let mut out = CpSolution::from_flat(&problem, sol)?;
    out.model = out.model.normalize_and_reorder();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

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
            let g: Vec<f64> =
                (0..n).map(|i| (0..n).map(|j| self.a[i + j * n] * u[j]).sum::<f64>() - self.b[i]).collect();
            Ok((0.5 * (dot(&g, u) - dot(&self.b, u)), g))
        }
    }

    #[test]
    fn stationary_start_takes_no_iterations() {
        let q = Quadratic { a: vec![2.0], b: vec![2.0] };
        let sol = ncg_solve_flat(&q, &[1.0], &NcgConfig::default()).unwrap();
        assert_eq!(sol.stop_reason, StopReason::GradTol);
        assert_eq!(sol.trace.iterations(), 0);
    }

    #[test]
    fn objective_decreases_and_coefficients_are_clamped() {
        let q = Quadratic { a: vec![10.0, 1.0, 1.0, 1.0], b: vec![1.0, -1.0] };
        let cfg = NcgConfig { tol_grad: 1e-10, max_iters: 100, ..Default::default() };
        let sol = ncg_solve_flat(&q, &[3.0, 3.0], &cfg).unwrap();
        assert_eq!(sol.stop_reason, StopReason::GradTol);
        for w in sol.trace.records.windows(2) {
            assert!(w[1].f <= w[0].f);
        }
        assert!(sol.trace.records[1..].iter().all(|r| r.cg_beta.unwrap() >= 0.0));
    }
}
