//! Moré–Thuente line search for the strong Wolfe conditions.
//!
//! The iteration follows the MINPACK-2 `dcsrch`/`dcstep` pair: a bracketing
//! phase that extrapolates until the interval of uncertainty contains a
//! minimizer, then safeguarded cubic/quadratic interpolation inside it.

use thiserror::Error;

/// Extrapolation bounds used before a bracket is found.
const XTRAP_LOWER: f64 = 1.1;
const XTRAP_UPPER: f64 = 4.0;
/// Relative bracket width below which the search stops making progress.
const XTOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub ftol: f64,
    /// Curvature constant.
    pub gtol: f64,
    pub initial_step: f64,
    /// Maximum number of function/gradient evaluations.
    pub max_evals: usize,
    pub step_min: f64,
    pub step_max: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { ftol: 1e-4, gtol: 1e-2, initial_step: 1.0, max_evals: 20, step_min: 0.0, step_max: 1e20 }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<(), LineSearchError> {
        let ok = 0.0 < self.ftol
            && self.ftol < self.gtol
            && self.gtol < 1.0
            && self.initial_step > 0.0
            && self.max_evals >= 1
            && 0.0 <= self.step_min
            && self.step_min < self.step_max;
        if ok {
            Ok(())
        } else {
            Err(LineSearchError::InvalidParams(*self))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchStatus {
    /// Both strong Wolfe conditions hold at the returned step.
    Converged,
    /// The evaluation budget ran out; the step with the smallest φ is returned.
    MaxEvals,
    /// The step hit `step_max` while φ was still decreasing.
    StepAtMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub step: f64,
    pub value: f64,
    pub slope: f64,
    pub status: LineSearchStatus,
    pub evals: usize,
}

#[derive(Error, Debug, Clone, Copy, PartialEq)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction (phi'(0) = {0})")]
    NotDescent(f64),
    #[error("interval of uncertainty collapsed after {evals} evaluations without satisfying the Wolfe conditions")]
    NumericalStall { evals: usize },
    #[error("invalid line search parameters {0:?}")]
    InvalidParams(LineSearchParams),
}

/// Strong Wolfe predicate, stated exactly as tested by the search.
pub fn strong_wolfe(step: f64, value: f64, slope: f64, value0: f64, slope0: f64, params: &LineSearchParams) -> bool {
    value <= value0 + params.ftol * step * slope0 && slope.abs() <= params.gtol * slope0.abs()
}

/// Searches `β > 0` along a ray given `φ(0)`, `φ′(0)` and an evaluator
/// `β ↦ (φ(β), φ′(β))`.
pub fn more_thuente<F>(
    mut eval: F,
    value0: f64,
    slope0: f64,
    params: &LineSearchParams,
) -> Result<LineSearchResult, LineSearchError>
where
    F: FnMut(f64) -> (f64, f64),
{
    params.validate()?;
    if !(slope0 < 0.0) {
        return Err(LineSearchError::NotDescent(slope0));
    }

    let (ftol, gtol) = (params.ftol, params.gtol);
    let (step_min, step_max) = (params.step_min, params.step_max);
    let mut cap = step_max;
    let gtest = ftol * slope0;

    let mut stp = params.initial_step.clamp(step_min, step_max);
    let mut bracketed = false;
    let mut stage_one = true;
    let mut width = step_max - step_min;
    let mut width_prev = 2.0 * width;

    // Best step so far (x) and the other endpoint of the interval (y).
    let mut x = Point { step: 0.0, value: value0, slope: slope0 };
    let mut y = x;
    let mut stmin = 0.0;
    let mut stmax = stp + XTRAP_UPPER * stp;

    let mut best: Option<(f64, f64, f64)> = None;
    let mut evals = 0;

    loop {
        let (value, slope) = eval(stp);
        evals += 1;
        if !(value.is_finite() && slope.is_finite()) {
            // Overflow or an undefined point: retreat towards the best step
            // and never probe this far again.
            if evals >= params.max_evals {
                return match best {
                    Some((step, value, slope)) => {
                        Ok(LineSearchResult { step, value, slope, status: LineSearchStatus::MaxEvals, evals })
                    }
                    None => Err(LineSearchError::NumericalStall { evals }),
                };
            }
            cap = stp;
            stp = x.step + 0.5 * (stp - x.step);
            if stp - x.step <= XTOL * stp {
                return Err(LineSearchError::NumericalStall { evals });
            }
            continue;
        }
        if best.is_none_or(|(_, v, _)| value < v) {
            best = Some((stp, value, slope));
        }

        let ftest = value0 + stp * gtest;
        if stage_one && value <= ftest && slope >= 0.0 {
            stage_one = false;
        }

        if value <= ftest && slope.abs() <= gtol * (-slope0) {
            return Ok(LineSearchResult { step: stp, value, slope, status: LineSearchStatus::Converged, evals });
        }
        if bracketed && (stp <= stmin || stp >= stmax) {
            return Err(LineSearchError::NumericalStall { evals });
        }
        if bracketed && stmax - stmin <= XTOL * stmax {
            return Err(LineSearchError::NumericalStall { evals });
        }
        if stp == step_max && value <= ftest && slope <= gtest {
            return Ok(LineSearchResult { step: stp, value, slope, status: LineSearchStatus::StepAtMax, evals });
        }
        if stp == step_min && (value > ftest || slope >= gtest) {
            return Err(LineSearchError::NumericalStall { evals });
        }
        if evals >= params.max_evals {
            let (step, value, slope) = best.expect("at least one evaluation");
            return Ok(LineSearchResult { step, value, slope, status: LineSearchStatus::MaxEvals, evals });
        }

        let trial = Point { step: stp, value, slope };
        if stage_one && value <= x.value && value > ftest {
            // Work with the auxiliary function ψ(β) = φ(β) − φ(0) − ftol·β·φ′(0).
            let shift = |p: Point| Point { step: p.step, value: p.value - p.step * gtest, slope: p.slope - gtest };
            let unshift = |p: Point| Point { step: p.step, value: p.value + p.step * gtest, slope: p.slope + gtest };
            let (mut xm, mut ym) = (shift(x), shift(y));
            stp = step_update(&mut xm, &mut ym, shift(trial), &mut bracketed, stmin, stmax);
            x = unshift(xm);
            y = unshift(ym);
        } else {
            stp = step_update(&mut x, &mut y, trial, &mut bracketed, stmin, stmax);
        }

        if bracketed {
            if (y.step - x.step).abs() >= 0.66 * width_prev {
                stp = x.step + 0.5 * (y.step - x.step);
            }
            width_prev = width;
            width = (y.step - x.step).abs();
            stmin = x.step.min(y.step);
            stmax = x.step.max(y.step);
        } else {
            stmin = stp + XTRAP_LOWER * (stp - x.step);
            stmax = stp + XTRAP_UPPER * (stp - x.step);
        }

        stp = stp.clamp(step_min, cap);
        if bracketed && (stp <= stmin || stp >= stmax || stmax - stmin <= XTOL * stmax) {
            stp = x.step;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    step: f64,
    value: f64,
    slope: f64,
}

/// Safeguarded step update (`dcstep`): updates the interval endpoints `x`
/// (lowest value so far) and `y` with the trial point `t`, and returns the
/// next trial step.
fn step_update(x: &mut Point, y: &mut Point, t: Point, bracketed: &mut bool, lo: f64, hi: f64) -> f64 {
    let sgnd = t.slope * x.slope.signum();
    let (stx, fx, dx) = (x.step, x.value, x.slope);
    let (stp, fp, dp) = (t.step, t.value, t.slope);

    let next = if fp > fx {
        // Higher value: the minimum is bracketed.
        let theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (dx / s) * (dp / s)).max(0.0).sqrt();
        if stp < stx {
            gamma = -gamma;
        }
        let p = (gamma - dx) + theta;
        let q = ((gamma - dx) + gamma) + dp;
        let stpc = stx + (p / q) * (stp - stx);
        let stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx);
        *bracketed = true;
        if (stpc - stx).abs() < (stpq - stx).abs() {
            stpc
        } else {
            stpc + (stpq - stpc) / 2.0
        }
    } else if sgnd < 0.0 {
        // Derivatives of opposite sign: bracketed.
        let theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (dx / s) * (dp / s)).max(0.0).sqrt();
        if stp > stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + dx;
        let stpc = stp + (p / q) * (stx - stp);
        let stpq = stp + (dp / (dp - dx)) * (stx - stp);
        *bracketed = true;
        if (stpc - stp).abs() > (stpq - stp).abs() {
            stpc
        } else {
            stpq
        }
    } else if dp.abs() < dx.abs() {
        // Lower value, same-sign derivative of decreasing magnitude.
        let theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (dx / s) * (dp / s)).max(0.0).sqrt();
        if stp > stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = (gamma + (dx - dp)) + gamma;
        let r = p / q;
        let stpc = if r < 0.0 && gamma != 0.0 {
            stp + r * (stx - stp)
        } else if stp > stx {
            hi
        } else {
            lo
        };
        let stpq = stp + (dp / (dp - dx)) * (stx - stp);
        if *bracketed {
            let mut f = if (stpc - stp).abs() < (stpq - stp).abs() { stpc } else { stpq };
            if stp > stx {
                f = f.min(stp + 0.66 * (y.step - stp));
            } else {
                f = f.max(stp + 0.66 * (y.step - stp));
            }
            f
        } else {
            let f = if (stpc - stp).abs() > (stpq - stp).abs() { stpc } else { stpq };
            f.clamp(lo.min(hi), hi.max(lo))
        }
    } else if *bracketed {
        // Lower value, derivative not decreasing: cubic step towards y.
        let (sty, fy, dy) = (y.step, y.value, y.slope);
        let theta = 3.0 * (fp - fy) / (sty - stp) + dy + dp;
        let s = theta.abs().max(dy.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (dy / s) * (dp / s)).max(0.0).sqrt();
        if stp > sty {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + dy;
        stp + (p / q) * (sty - stp)
    } else if stp > stx {
        hi
    } else {
        lo
    };

    if fp > fx {
        *y = t;
    } else {
        if sgnd < 0.0 {
            *y = *x;
        }
        *x = t;
    }
    next
}
