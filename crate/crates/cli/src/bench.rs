//! Seed sweeps and accuracy-to-target statistics.
//!
//! Each run's reference `h*` is the fit at its own final iterate. The
//! iteration count to a target is the first trace index with
//! `|h − h*| ≤ target`. Runs that stop without meeting the gradient
//! tolerance are censored: their counts are reported as the iteration
//! budget, a lower bound. Within a cell, a seed enters the medians only if
//! every converged run for that seed reached the same `h*` to within
//! [`H_STAR_MATCH`].

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use ngcp::{StopReason, Trace};
use rayon::prelude::*;

use crate::config::{run_solver, Method, ProblemSource, RunConfig};
use crate::error::CliResult;

pub const TARGETS: [f64; 3] = [1e-3, 1e-6, 1e-10];
pub const H_STAR_MATCH: f64 = 1e-8;

/// Everything that distinguishes one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchJob {
    pub problem: ProblemSource,
    pub method: Method,
    /// Window size; used only by N-GMRES.
    pub window: usize,
    pub rank: usize,
    pub seed: u64,
    pub tol_grad: f64,
    pub max_iters: usize,
}

impl BenchJob {
    pub fn variant(&self) -> String {
        match self.method {
            Method::Ngmres => format!("ngmres w={}", self.window),
            m => m.to_string(),
        }
    }

    fn run_config(&self) -> RunConfig {
        RunConfig {
            problem: self.problem.clone(),
            method: self.method,
            rank: self.rank,
            window: self.window,
            tol_grad: self.tol_grad,
            max_iters: self.max_iters,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub job: BenchJob,
    pub h_star: f64,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub final_gnorm_rel: f64,
    /// Per target: iterations and seconds to reach it.
    pub iters_to: [usize; 3],
    pub time_to: [f64; 3],
    pub wall_s: f64,
    pub error: Option<String>,
    pub trace: Trace,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.stop_reason == Some(StopReason::GradTol)
    }

    pub fn censored(&self) -> bool {
        self.error.is_none() && !self.converged()
    }
}

/// First record index with `|h − h*| ≤ target` and its time stamp.
pub fn first_within(trace: &Trace, h_star: f64, target: f64) -> Option<(usize, f64)> {
    trace.records.iter().find(|r| (r.h - h_star).abs() <= target).map(|r| (r.iter, r.time_s))
}

pub fn run_job(job: &BenchJob) -> RunSummary {
    let start = Instant::now();
    let result = job.problem.load(job.seed).and_then(|t| run_solver(&t, &job.run_config()));
    let wall_s = start.elapsed().as_secs_f64();
    match result {
        Ok(sol) => {
            let last = sol.trace.last().expect("traces start with iteration 0").clone();
            let h_star = last.h;
            let converged = sol.stop_reason == StopReason::GradTol;
            let mut iters_to = [0; 3];
            let mut time_to = [0.0; 3];
            for (k, &target) in TARGETS.iter().enumerate() {
                let hit = first_within(&sol.trace, h_star, target);
                (iters_to[k], time_to[k]) = match hit {
                    Some(v) if converged => v,
                    _ => (job.max_iters, last.time_s),
                };
            }
            RunSummary {
                job: job.clone(),
                h_star,
                iterations: sol.trace.iterations(),
                stop_reason: Some(sol.stop_reason),
                final_gnorm_rel: last.gnorm_rel,
                iters_to,
                time_to,
                wall_s,
                error: None,
                trace: sol.trace,
            }
        }
        Err(e) => RunSummary {
            job: job.clone(),
            h_star: f64::NAN,
            iterations: 0,
            stop_reason: None,
            final_gnorm_rel: f64::NAN,
            iters_to: [0; 3],
            time_to: [f64::NAN; 3],
            wall_s,
            error: Some(e.to_string()),
            trace: Trace::default(),
        },
    }
}

/// Runs all jobs on a pool of `workers` threads; results keep job order.
pub fn run_jobs(jobs: &[BenchJob], workers: usize) -> CliResult<Vec<RunSummary>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::error::CliError::Usage(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(run_job).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMedian {
    pub problem: String,
    pub variant: String,
    pub method: Method,
    pub window: usize,
    /// Number of seeds that entered the median.
    pub runs: usize,
    pub h_star: f64,
    pub iters_to: [f64; 3],
    pub time_to: [f64; 3],
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Seeds of each problem whose converged runs agree on `h*`, and whose runs
/// all completed without error.
pub fn matching_seeds(runs: &[RunSummary]) -> BTreeMap<(String, u64), bool> {
    let mut groups: BTreeMap<(String, u64), Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.job.problem.label(), r.job.seed)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let ok = rs.iter().all(|r| r.error.is_none());
            let hs: Vec<f64> = rs.iter().filter(|r| r.converged()).map(|r| r.h_star).collect();
            let lo = hs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (key, ok && (hs.len() < 2 || hi - lo <= H_STAR_MATCH))
        })
        .collect()
}

/// Medians per problem and variant over matching seeds.
pub fn cell_medians(runs: &[RunSummary]) -> Vec<CellMedian> {
    let matching = matching_seeds(runs);
    let mut cells: BTreeMap<(String, String), Vec<&RunSummary>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in runs {
        let key = (r.job.problem.label(), r.job.variant());
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        cells.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs: Vec<&RunSummary> =
                cells[&key].iter().copied().filter(|r| matching[&(r.job.problem.label(), r.job.seed)]).collect();
            let first = cells[&key][0];
            let col = |f: &dyn Fn(&RunSummary) -> f64| median(&mut rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            CellMedian {
                problem: key.0.clone(),
                variant: key.1.clone(),
                method: first.job.method,
                window: first.job.window,
                runs: rs.len(),
                h_star: col(&|r| r.h_star),
                iters_to: [0, 1, 2].map(|k| col(&|r| r.iters_to[k] as f64)),
                time_to: [0, 1, 2].map(|k| col(&|r| r.time_to[k])),
            }
        })
        .collect()
}

pub const REPORT_HEADER: &str = "row_type,problem,variant,seed,runs,h_star,matching,censored,\
iters_1e-3,time_1e-3,iters_1e-6,time_1e-6,iters_1e-10,time_1e-10,iterations,final_gnorm_rel,stop_reason,error";

/// Per-run rows followed by one median row per problem and variant.
pub fn write_report<W: Write>(mut w: W, runs: &[RunSummary]) -> io::Result<()> {
    let matching = matching_seeds(runs);
    writeln!(w, "{REPORT_HEADER}")?;
    for r in runs {
        let m = matching[&(r.job.problem.label(), r.job.seed)];
        let stop = r.stop_reason.map(|s| s.to_string()).unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        write!(
            w,
            "run,{},{},{},1,{:e},{},{}",
            r.job.problem.label(),
            r.job.variant(),
            r.job.seed,
            r.h_star,
            m,
            r.censored()
        )?;
        for k in 0..3 {
            write!(w, ",{},{:.6}", r.iters_to[k], r.time_to[k])?;
        }
        writeln!(w, ",{},{:e},{stop},{err}", r.iterations, r.final_gnorm_rel)?;
    }
    for c in cell_medians(runs) {
        write!(w, "median,{},{},,{},{:e},,", c.problem, c.variant, c.runs, c.h_star)?;
        for k in 0..3 {
            write!(w, ",{},{:.6}", c.iters_to[k], c.time_to[k])?;
        }
        writeln!(w, ",,,,")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ngcp::IterRecord;

    fn trace(hs: &[f64]) -> Trace {
        Trace {
            records: hs
                .iter()
                .enumerate()
                .map(|(i, &h)| IterRecord {
                    iter: i,
                    time_s: i as f64,
                    f: 0.0,
                    h,
                    gnorm_rel: 1.0,
                    fevals: 0,
                    gevals: 0,
                    precond_calls: 0,
                    restart: false,
                    beta: None,
                    cg_beta: None,
                })
                .collect(),
        }
    }

    #[test]
    fn first_crossing_is_monotone_in_target() {
        let t = trace(&[1.0, 0.5, 0.1001, 0.1000001, 0.1]);
        let h = 0.1;
        let its: Vec<usize> = TARGETS.iter().map(|&e| first_within(&t, h, e).unwrap().0).collect();
        assert_eq!(its, vec![2, 3, 4]);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }
}
