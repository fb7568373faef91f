//! Nonlinear GMRES: a one-step update produces ū, a windowed least-squares
//! recombination of past iterates produces û, and a line search from ū
//! along û − ū picks the next iterate.

use std::collections::VecDeque;

use crate::error::{CpError, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::{solve_lu_vec, solve_spd_vec};
use crate::linesearch::{more_thuente, LineSearchError, LineSearchParams};
use crate::solver::{CpProblem, CpSolution, OneStepUpdate, Recorder, SmoothProblem, Solution, StopReason};
use crate::tensor::{dot, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgmresConfig {
    pub window: usize,
    pub epsilon_reg: f64,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub linesearch: LineSearchParams,
    pub restart_on_ascent: bool,
    /// Take `u = ū + β(û − ū)` with this fixed β instead of searching.
    pub fixed_step: Option<f64>,
}

impl Default for NgmresConfig {
    fn default() -> Self {
        Self {
            window: 20,
            epsilon_reg: 1e-12,
            tol_grad: 1e-9,
            max_iters: 2000,
            linesearch: LineSearchParams::default(),
            restart_on_ascent: true,
            fixed_step: None,
        }
    }
}

impl NgmresConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(CpError::InvalidParameter("window must be at least 1".into()));
        }
        if !(self.epsilon_reg >= 0.0) {
            return Err(CpError::InvalidParameter("epsilon_reg must be nonnegative".into()));
        }
        if !(self.tol_grad > 0.0) {
            return Err(CpError::InvalidParameter("tol_grad must be positive".into()));
        }
        self.linesearch.validate().map_err(|e| CpError::InvalidParameter(e.to_string()))
    }
}

/// Past `(u, g(u))` pairs, oldest first, at most `capacity` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelWindow {
    capacity: usize,
    entries: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl AccelWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be at least 1");
        Self { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a pair, evicting the oldest beyond capacity.
    pub fn push(&mut self, u: Vec<f64>, g: Vec<f64>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((u, g));
    }

    /// Empties the window and stores the single pair `(u, g)`.
    pub fn reset(&mut self, u: Vec<f64>, g: Vec<f64>) {
        self.entries.clear();
        self.entries.push_back((u, g));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.entries.iter().map(|(u, g)| (u.as_slice(), g.as_slice()))
    }
}

/// Minimizes the linearized residual `‖ḡ + Σ α_j (ḡ − g_j)‖` over the window
/// and returns `(û, α)` with `û = ū + Σ α_j (ū − u_j)`.
pub fn accelerate(window: &AccelWindow, u_bar: &[f64], g_bar: &[f64], epsilon_reg: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(!window.is_empty(), "window must hold at least one pair");
    let m = window.len();
    let p: Vec<Vec<f64>> = window.iter().map(|(_, g)| g_bar.iter().zip(g).map(|(a, b)| a - b).collect()).collect();

    let mut ptp = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let v = dot(&p[i], &p[j]);
            ptp[i + j * m] = v;
            ptp[j + i * m] = v;
        }
        rhs[i] = -dot(&p[i], g_bar);
    }
    // Symmetric diagonal scaling to unit column norms before regularizing;
    // zero columns stay unscaled.
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let d = ptp[i + i * m].sqrt();
            if d > 0.0 {
                d
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..m {
        rhs[i] /= scale[i];
        for j in 0..m {
            ptp[i + j * m] /= scale[i] * scale[j];
        }
    }
    let max_diag = (0..m).map(|i| ptp[i + i * m]).fold(0.0, f64::max);
    let delta = if max_diag > 0.0 { epsilon_reg * max_diag } else { epsilon_reg };
    for i in 0..m {
        ptp[i + i * m] += delta;
    }

    let mut alpha =
        solve_spd_vec(&ptp, m, &rhs).or_else(|| solve_lu_vec(&ptp, m, &rhs)).unwrap_or_else(|| vec![0.0; m]);
    for (a, s) in alpha.iter_mut().zip(&scale) {
        *a /= s;
    }

    let mut u_hat = u_bar.to_vec();
    for ((u_j, _), a) in window.iter().zip(&alpha) {
        for (h, (ub, uj)) in u_hat.iter_mut().zip(u_bar.iter().zip(u_j)) {
            *h += a * (ub - uj);
        }
    }
    (u_hat, alpha)
}

/// What one N-GMRES iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct IterOutcome {
    pub u: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    /// The direction failed the descent test and the window was reset.
    pub restart: bool,
    /// Step taken along `û − ū`; `Some(0.0)` after a line-search stall.
    pub beta: Option<f64>,
    pub stalled: bool,
}

/// One iteration from `u_i`, whose pair must already be the newest window
/// entry. The accepted iterate is canonicalized and appended to the window.
pub fn ngmres_iterate<P>(
    problem: &P,
    config: &NgmresConfig,
    window: &mut AccelWindow,
    u_i: &[f64],
) -> Result<IterOutcome>
where
    P: SmoothProblem + OneStepUpdate,
{
    let mut rec = Recorder::new(1.0);
    iterate_counted(problem, config, window, u_i, &mut rec)
}

pub(crate) fn iterate_counted<P>(
    problem: &P,
    config: &NgmresConfig,
    window: &mut AccelWindow,
    u_i: &[f64],
    rec: &mut Recorder,
) -> Result<IterOutcome>
where
    P: SmoothProblem + OneStepUpdate,
{
    let u_bar = problem.update(u_i)?;
    rec.counters.precond_calls += 1;
    let (f_bar, g_bar) = rec.evaluate(problem, &u_bar)?;

    let (u_hat, _) = accelerate(window, &u_bar, &g_bar, config.epsilon_reg);
    let d: Vec<f64> = u_hat.iter().zip(&u_bar).map(|(h, b)| h - b).collect();
    let slope0 = dot(&g_bar, &d);

    let along = |beta: f64| -> Vec<f64> { u_bar.iter().zip(&d).map(|(b, di)| b + beta * di).collect() };

    let ascent = !(slope0 < 0.0);
    let mut out = if ascent && (config.restart_on_ascent || config.fixed_step.is_none()) {
        IterOutcome { u: u_bar, f: f_bar, g: g_bar, restart: config.restart_on_ascent, beta: None, stalled: false }
    } else if let Some(beta) = config.fixed_step {
        let u = along(beta);
        let (f, g) = rec.evaluate(problem, &u)?;
        IterOutcome { u, f, g, restart: false, beta: Some(beta), stalled: false }
    } else {
        let mut cache: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        let mut failure: Option<CpError> = None;
        let search = more_thuente(
            |beta| {
                let u = along(beta);
                match rec.evaluate(problem, &u) {
                    Ok((f, g)) => {
                        let slope = dot(&g, &d);
                        cache.push((beta, f, g));
                        (f, slope)
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        (f64::NAN, f64::NAN)
                    }
                }
            },
            f_bar,
            slope0,
            &config.linesearch,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        match search {
            Ok(res) => {
                let (beta, f, g) =
                    cache.into_iter().rev().find(|(b, _, _)| *b == res.step).expect("returned step was evaluated");
                IterOutcome { u: along(beta), f, g, restart: false, beta: Some(beta), stalled: false }
            }
            Err(LineSearchError::NumericalStall { .. }) => {
                IterOutcome { u: u_bar, f: f_bar, g: g_bar, restart: false, beta: Some(0.0), stalled: true }
            }
            Err(e) => return Err(CpError::InvalidParameter(e.to_string())),
        }
    };

    problem.canonicalize(&mut out.u, Some(&mut out.g));
    if out.restart {
        window.reset(out.u.clone(), out.g.clone());
    } else {
        window.push(out.u.clone(), out.g.clone());
    }
    Ok(out)
}

/// Runs N-GMRES from `u0` until `‖g‖/scale ≤ tol_grad`, `max_iters`, or two
/// consecutive line-search stalls.
pub fn ngmres_solve_flat<P>(problem: &P, u0: &[f64], config: &NgmresConfig) -> Result<Solution>
where
    P: SmoothProblem + OneStepUpdate,
{
    config.validate()?;
    let mut rec = Recorder::new(problem.data_norm());
    let mut u = u0.to_vec();
    let (mut f, mut g) = rec.evaluate(problem, &u)?;
    problem.canonicalize(&mut u, Some(&mut g));
    let gnorm = rec.record(0, f, &g, false, None);

    let mut best = (f, u.clone());
    let mut stop = StopReason::MaxIters;
    if gnorm <= config.tol_grad {
        return Ok(Solution { iterate: u, value: f, trace: rec.trace, stop_reason: StopReason::GradTol });
    }

    let mut window = AccelWindow::new(config.window);
    window.push(u.clone(), g);
    let mut stalls = 0;
    for iter in 1..=config.max_iters {
        let step = iterate_counted(problem, config, &mut window, &u, &mut rec)?;
        let gnorm = rec.record(iter, step.f, &step.g, step.restart, step.beta);
        u = step.u;
        f = step.f;
        if f < best.0 {
            best = (f, u.clone());
        }
        if gnorm <= config.tol_grad {
            stop = StopReason::GradTol;
            break;
        }
        stalls = if step.stalled { stalls + 1 } else { 0 };
        if stalls >= 2 {
            stop = StopReason::LineSearchStall;
            break;
        }
    }

    // The final iterate is the one that met the gradient test; otherwise
    // fall back to the lowest objective seen.
    let (value, iterate) = if stop == StopReason::GradTol { (f, u) } else { best };
    Ok(Solution { iterate, value, trace: rec.trace, stop_reason: stop })
}

/// N-GMRES with ALS as the one-step update on a CP problem.
pub fn ngmres_solve(t: &Tensor, k0: &KruskalTensor, config: &NgmresConfig) -> Result<CpSolution> {
    let problem = CpProblem::new(t, k0.rank())?;
    let sol = ngmres_solve_flat(&problem, &k0.pack(), config)?;
    CpSolution::from_flat(&problem, sol)
}
