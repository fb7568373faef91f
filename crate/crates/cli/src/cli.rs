//! Argument parsing and subcommand dispatch.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ngcp::io::{save_ktensor, save_tensor};
use ngcp::problems::{gen_dense_problem, gen_laplacian, DenseProblemSpec, LaplacianSpec};
use ngcp::Tensor;

use crate::bench::{run_jobs, write_report, BenchJob, H_STAR_MATCH};
use crate::config::{run_solver, KeyValues, Method, ProblemSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{read_trace_csv, render_svg, write_plot_data, write_trace_csv, Series};

#[derive(Parser, Debug)]
#[command(name = "ngcp", version, about = "CP tensor decomposition by ALS, N-GMRES and N-CG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a dense collinear test tensor.
    GenDense(GenDenseArgs),
    /// Generate a finite-difference Laplacian tensor.
    GenLaplacian(GenLaplacianArgs),
    /// Run one solver and write its trace and factorization.
    Solve(SolveArgs),
    /// Sweep problems, methods, windows and seeds.
    Bench(BenchArgs),
    /// Turn trace files into long-format plot data and an optional SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct DenseFlags {
    /// Mode size.
    #[arg(long)]
    pub s: Option<usize>,
    /// Collinearity in [0, 1).
    #[arg(long)]
    pub c: Option<f64>,
    /// Rank of the noise-free tensor.
    #[arg(long = "R")]
    pub big_r: Option<usize>,
    /// Homoskedastic noise level in [0, 100).
    #[arg(long)]
    pub l1: Option<f64>,
    /// Heteroskedastic noise level in [0, 100).
    #[arg(long)]
    pub l2: Option<f64>,
    /// Grid dimension of the Laplacian problem.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenDenseArgs {
    #[command(flatten)]
    pub p: DenseFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output tensor file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the generating factors as a ktensor file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the problem parameters as key=value text.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenLaplacianArgs {
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub s: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// key=value file supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Generated problem: dense or laplacian.
    #[arg(long)]
    pub problem: Option<String>,
    /// Read the data tensor from a file instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub p: DenseFlags,
    #[arg(long)]
    pub method: Option<String>,
    /// CP rank of the fitted model.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long = "tol-grad")]
    pub tol_grad: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Final factorization output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock seconds in the trace (otherwise written as 0).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated mode sizes.
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long = "R")]
    pub big_r: Option<String>,
    #[arg(long)]
    pub l1: Option<String>,
    #[arg(long)]
    pub l2: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    /// Comma-separated methods.
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated N-GMRES window sizes.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long = "tol-grad")]
    pub tol_grad: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Number of seeds per cell.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// First seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-run trace CSVs.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Trace CSV files.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    /// Series labels, in trace order (defaults to file stems).
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    /// Long-format plot data CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

const DEFAULT_TOL_GRAD: f64 = 1e-9;
const DEFAULT_MAX_ITERS: usize = 2000;
const DEFAULT_WINDOW: usize = 20;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::GenDense(a) => gen_dense(a),
        Command::GenLaplacian(a) => {
            let t = gen_laplacian(&LaplacianSpec { d: a.d, s: a.s })?;
            save(&a.out, |p| save_tensor(p, &Tensor::Sparse(t)))?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot(a),
    }
}

fn save(path: &Path, f: impl FnOnce(&Path) -> ngcp::Result<()>) -> CliResult<()> {
    f(path).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn gen_dense(a: GenDenseArgs) -> CliResult<()> {
    let spec = DenseProblemSpec {
        s: a.p.s.unwrap_or(20),
        c: a.p.c.unwrap_or(0.5),
        rank: a.p.big_r.unwrap_or(3),
        l1: a.p.l1.unwrap_or(0.0),
        l2: a.p.l2.unwrap_or(0.0),
        seed: a.seed,
    };
    let p = gen_dense_problem(&spec)?;
    save(&a.out, |path| save_tensor(path, &Tensor::Dense(p.tensor)))?;
    if let Some(path) = &a.truth {
        save(path, |path| save_ktensor(path, &p.factors))?;
    }
    if let Some(path) = &a.spec {
        std::fs::write(path, spec.to_key_values()).map_err(|e| CliError::io(path, e))?;
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn problem_source(
    kind: Option<&str>,
    input: Option<PathBuf>,
    kv: &KeyValues,
    p: &DenseFlags,
) -> CliResult<ProblemSource> {
    let input = kv.pick("input", input)?;
    if let Some(path) = input {
        return Ok(ProblemSource::File(path));
    }
    let kind = kind.map(str::to_string).or_else(|| kv.raw("problem").map(str::to_string));
    match kind.as_deref().unwrap_or("dense") {
        "dense" => Ok(ProblemSource::Dense {
            s: kv.pick("s", p.s)?.unwrap_or(20),
            c: kv.pick("c", p.c)?.unwrap_or(0.5),
            rank: kv.pick("R", p.big_r)?.unwrap_or(3),
            l1: kv.pick("l1", p.l1)?.unwrap_or(0.0),
            l2: kv.pick("l2", p.l2)?.unwrap_or(0.0),
        }),
        "laplacian" => {
            Ok(ProblemSource::Laplacian { d: kv.pick("d", p.d)?.unwrap_or(3), s: kv.pick("s", p.s)?.unwrap_or(4) })
        }
        other => Err(CliError::Usage(format!("unknown problem '{other}' (expected dense or laplacian)"))),
    }
}

fn solve(a: SolveArgs) -> CliResult<()> {
    let kv = match &a.config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    let problem = problem_source(a.problem.as_deref(), a.input.clone(), &kv, &a.p)?;
    let method: Method = match kv.pick::<String>("method", a.method.clone())? {
        Some(m) => m.parse().map_err(CliError::Usage)?,
        None => Method::Ngmres,
    };
    let rank = kv
        .pick("rank", a.rank)?
        .or_else(|| problem.default_rank())
        .ok_or_else(|| CliError::Usage("--rank is required for this problem".into()))?;
    let cfg = RunConfig {
        problem,
        method,
        rank,
        window: kv.pick("window", a.window)?.unwrap_or(DEFAULT_WINDOW),
        tol_grad: kv.pick("tol-grad", a.tol_grad)?.unwrap_or(DEFAULT_TOL_GRAD),
        max_iters: kv.pick("max-iters", a.max_iters)?.unwrap_or(DEFAULT_MAX_ITERS),
        seed: kv.pick("seed", a.seed)?.unwrap_or(0),
    };
    cfg.validate()?;
    let trace_path = kv.pick("trace", a.trace.clone())?;
    let out_path = kv.pick("out", a.out.clone())?;
    let timing = a.timing || kv.raw("timing").is_some_and(|v| v == "true" || v == "1");

    let t = cfg.problem.load(cfg.seed)?;
    let sol = run_solver(&t, &cfg)?;

    if let Some(path) = &trace_path {
        write_trace_csv(create(path)?, &sol.trace, timing).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &out_path {
        save(path, |p| save_ktensor(p, &sol.model))?;
    }
    let last = sol.trace.last().expect("trace has iteration 0");
    println!(
        "method={} iters={} f={:e} h={:e} gnorm_rel={:e} stop={}",
        cfg.method,
        sol.trace.iterations(),
        last.f,
        last.h,
        last.gnorm_rel,
        sol.stop_reason
    );
    Ok(())
}

fn list<T>(key: &str, flag: Option<String>, kv: &KeyValues, default: &str) -> CliResult<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let text = kv.pick::<String>(key, flag)?.unwrap_or_else(|| default.to_string());
    text.split(',').map(|v| v.trim().parse::<T>().map_err(|e| CliError::Usage(format!("--{key} '{v}': {e}")))).collect()
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let kv = match &a.config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    let kind = kv.pick::<String>("problem", a.problem.clone())?.unwrap_or_else(|| "dense".into());
    let mut problems = Vec::new();
    match kind.as_str() {
        "dense" => {
            for s in list::<usize>("s", a.s.clone(), &kv, "50")? {
                for c in list::<f64>("c", a.c.clone(), &kv, "0.5")? {
                    for rank in list::<usize>("R", a.big_r.clone(), &kv, "3")? {
                        for l1 in list::<f64>("l1", a.l1.clone(), &kv, "0")? {
                            for l2 in list::<f64>("l2", a.l2.clone(), &kv, "0")? {
                                problems.push(ProblemSource::Dense { s, c, rank, l1, l2 });
                            }
                        }
                    }
                }
            }
        }
        "laplacian" => {
            for d in list::<usize>("d", a.d.clone(), &kv, "3")? {
                for s in list::<usize>("s", a.s.clone(), &kv, "4")? {
                    problems.push(ProblemSource::Laplacian { d, s });
                }
            }
        }
        other => return Err(CliError::Usage(format!("unknown problem '{other}' (expected dense or laplacian)"))),
    }
    let methods: Vec<Method> = list::<String>("method", a.method.clone(), &kv, "als,ngmres,ncg")?
        .iter()
        .map(|m| m.parse().map_err(CliError::Usage))
        .collect::<CliResult<_>>()?;
    let windows = list::<usize>("window", a.window.clone(), &kv, &DEFAULT_WINDOW.to_string())?;
    let seeds = kv.pick("seeds", a.seeds)?.unwrap_or(5);
    let first_seed = kv.pick("seed", a.seed)?.unwrap_or(0);
    let tol_grad = kv.pick("tol-grad", a.tol_grad)?.unwrap_or(DEFAULT_TOL_GRAD);
    let max_iters = kv.pick("max-iters", a.max_iters)?.unwrap_or(DEFAULT_MAX_ITERS);
    let rank_flag = kv.pick("rank", a.rank)?;
    let workers =
        kv.pick("workers", a.workers)?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let mut jobs = Vec::new();
    for problem in &problems {
        let rank = rank_flag
            .or_else(|| problem.default_rank())
            .ok_or_else(|| CliError::Usage("--rank is required for this problem".into()))?;
        for &method in &methods {
            let ws: &[usize] = if method == Method::Ngmres { &windows } else { &windows[..1] };
            for &window in ws {
                for seed in first_seed..first_seed + seeds {
                    let job = BenchJob { problem: problem.clone(), method, window, rank, seed, tol_grad, max_iters };
                    RunConfig { problem: job.problem.clone(), method, rank, window, tol_grad, max_iters, seed }
                        .validate()?;
                    jobs.push(job);
                }
            }
        }
    }

    let runs = run_jobs(&jobs, workers)?;
    write_report(create(&a.out)?, &runs).map_err(|e| CliError::io(&a.out, e))?;
    if let Some(dir) = kv.pick("trace", a.trace.clone())? {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for (k, r) in runs.iter().enumerate() {
            let path =
                dir.join(format!("run{k:04}_{}_seed{}.csv", r.job.variant().replace([' ', '='], ""), r.job.seed));
            write_trace_csv(create(&path)?, &r.trace, true).map_err(|e| CliError::io(&path, e))?;
        }
    }
    let failed = runs.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} runs ({} failed), h* match tolerance {H_STAR_MATCH:e}; report written to {}",
        runs.len(),
        failed,
        a.out.display()
    );
    Ok(())
}

fn plot(a: PlotArgs) -> CliResult<()> {
    let mut series = Vec::new();
    for (k, path) in a.traces.iter().enumerate() {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let trace = read_trace_csv(BufReader::new(file)).map_err(|e| CliError::io(path, e))?;
        let label = a.labels.get(k).cloned().unwrap_or_else(|| {
            path.file_stem().map_or_else(|| format!("series{k}"), |s| s.to_string_lossy().into_owned())
        });
        series.push(Series { label, trace });
    }
    write_plot_data(create(&a.out)?, &series).map_err(|e| CliError::io(&a.out, e))?;
    if let Some(path) = &a.svg {
        let mut w = create(path)?;
        w.write_all(render_svg(&series).as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
