//! Problem abstraction shared by the drivers, per-iteration traces, and the
//! CP adapter that plugs a data tensor into them.

use std::time::Instant;

use crate::als::als_sweep;
use crate::error::{CpError, Result};
use crate::kruskal::{canonicalize, CpModel, KruskalTensor};
use crate::tensor::{dot, Tensor};

/// A smooth objective over flat vectors.
pub trait SmoothProblem {
    fn dim(&self) -> usize;

    fn value_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Normalization for the reported fit `√(2f)/scale` and relative
    /// gradient norm `‖g‖/scale`.
    fn data_norm(&self) -> f64 {
        1.0
    }

    /// Maps an iterate, and optionally the gradient at it, to a canonical
    /// representative with the same objective value.
    fn canonicalize(&self, _u: &mut [f64], _gradient: Option<&mut [f64]>) {}
}

/// One-step iterative update `u ↦ M(u)`.
pub trait OneStepUpdate {
    fn update(&self, u: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradTol,
    MaxIters,
    LineSearchStall,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::GradTol => "grad_tol",
            StopReason::MaxIters => "max_iters",
            StopReason::LineSearchStall => "line_search_stall",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-iteration record; iteration 0 is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub time_s: f64,
    pub f: f64,
    pub h: f64,
    pub gnorm_rel: f64,
    pub fevals: usize,
    pub gevals: usize,
    pub precond_calls: usize,
    pub restart: bool,
    /// Accepted step length along the search direction, when one was taken.
    pub beta: Option<f64>,
    /// Polak–Ribière coefficient (N-CG only).
    pub cg_beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<IterRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    /// Number of accepted iterations (records after the starting point).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub fevals: usize,
    pub gevals: usize,
    pub precond_calls: usize,
}

/// Builds trace records with cumulative counters and a monotonic clock.
#[derive(Debug)]
pub(crate) struct Recorder {
    start: Instant,
    scale: f64,
    pub counters: Counters,
    pub trace: Trace,
}

impl Recorder {
    pub fn new(scale: f64) -> Self {
        Self { start: Instant::now(), scale, counters: Counters::default(), trace: Trace::default() }
    }

    pub fn evaluate<P: SmoothProblem + ?Sized>(&mut self, p: &P, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.counters.fevals += 1;
        self.counters.gevals += 1;
        p.value_and_gradient(u)
    }

    pub fn record(&mut self, iter: usize, f: f64, g: &[f64], restart: bool, beta: Option<f64>) -> f64 {
        let gnorm_rel = dot(g, g).sqrt() / self.scale;
        self.trace.records.push(IterRecord {
            iter,
            time_s: self.start.elapsed().as_secs_f64(),
            f,
            h: (2.0 * f).max(0.0).sqrt() / self.scale,
            gnorm_rel,
            fevals: self.counters.fevals,
            gevals: self.counters.gevals,
            precond_calls: self.counters.precond_calls,
            restart,
            beta,
            cg_beta: None,
        });
        gnorm_rel
    }
}

/// Result of a flat-vector solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub iterate: Vec<f64>,
    pub value: f64,
    pub trace: Trace,
    pub stop_reason: StopReason,
}

/// Plain fixed-point iteration `u ← M(u)` (stand-alone ALS for CP).
pub fn fixed_point_solve<P>(problem: &P, u0: &[f64], tol_grad: f64, max_iters: usize) -> Result<Solution>
where
    P: SmoothProblem + OneStepUpdate,
{
    let mut rec = Recorder::new(problem.data_norm());
    let mut u = u0.to_vec();
    let (mut f, mut g) = rec.evaluate(problem, &u)?;
    problem.canonicalize(&mut u, Some(&mut g));
    let mut gnorm = rec.record(0, f, &g, false, None);
    let mut stop = StopReason::MaxIters;
    if gnorm <= tol_grad {
        stop = StopReason::GradTol;
    } else {
        for iter in 1..=max_iters {
            u = problem.update(&u)?;
            rec.counters.precond_calls += 1;
            (f, g) = rec.evaluate(problem, &u)?;
            gnorm = rec.record(iter, f, &g, false, None);
            if gnorm <= tol_grad {
                stop = StopReason::GradTol;
                break;
            }
        }
    }
    Ok(Solution { iterate: u, value: f, trace: rec.trace, stop_reason: stop })
}

/// CP objective over packed iterates, with ALS as the one-step update and
/// normalization/reordering as the canonical map.
#[derive(Debug, Clone)]
pub struct CpProblem<'a> {
    model: CpModel<'a>,
}

impl<'a> CpProblem<'a> {
    pub fn new(tensor: &'a Tensor, rank: usize) -> Result<Self> {
        let model = CpModel::new(tensor, rank)?;
        if model.data_norm() == 0.0 {
            return Err(CpError::ZeroTensor);
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &CpModel<'a> {
        &self.model
    }

    pub fn unpack(&self, u: &[f64]) -> Result<KruskalTensor> {
        KruskalTensor::unpack(u, self.model.shape(), self.model.rank())
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        let expected = self.dim();
        if u.len() != expected {
            return Err(CpError::LengthMismatch { expected, got: u.len() });
        }
        Ok(())
    }
}

impl SmoothProblem for CpProblem<'_> {
    fn dim(&self) -> usize {
        self.model.packed_len()
    }

    fn value_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(u)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Ok((f64::NAN, vec![f64::NAN; u.len()]));
        }
        let k = self.unpack(u)?;
        let (f, g) = self.model.objective_and_gradient(&k)?;
        Ok((f, g.into_vec()))
    }

    fn data_norm(&self) -> f64 {
        self.model.data_norm()
    }

    fn canonicalize(&self, u: &mut [f64], gradient: Option<&mut [f64]>) {
        canonicalize(u, gradient, self.model.shape(), self.model.rank());
    }
}

impl OneStepUpdate for CpProblem<'_> {
    fn update(&self, u: &[f64]) -> Result<Vec<f64>> {
        let k = self.unpack(u)?;
        Ok(als_sweep(self.model.tensor(), &k)?.pack().into_vec())
    }
}

/// Result of a CP solve.
#[derive(Debug, Clone)]
pub struct CpSolution {
    pub model: KruskalTensor,
    pub objective: f64,
    pub trace: Trace,
    pub stop_reason: StopReason,
}

impl CpSolution {
    pub(crate) fn from_flat(problem: &CpProblem<'_>, sol: Solution) -> Result<Self> {
        Ok(Self {
            model: problem.unpack(&sol.iterate)?,
            objective: sol.value,
            trace: sol.trace,
            stop_reason: sol.stop_reason,
        })
    }
}

/// Stand-alone ALS from `k0` until `‖g‖/‖T‖ ≤ tol_grad` or `max_iters`.
pub fn als_solve(t: &Tensor, k0: &KruskalTensor, tol_grad: f64, max_iters: usize) -> Result<CpSolution> {
    let problem = CpProblem::new(t, k0.rank())?;
    let sol = fixed_point_solve(&problem, &k0.pack(), tol_grad, max_iters)?;
    CpSolution::from_flat(&problem, sol)
}
