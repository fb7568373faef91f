//! Run configuration, problem construction and solver dispatch.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ngcp::io::load_tensor;
use ngcp::problems::{gen_dense_problem, gen_laplacian, random_initial_guess, DenseProblemSpec, LaplacianSpec};
use ngcp::{als_solve, ncg_solve, ngmres_solve, CpSolution, NcgConfig, NgmresConfig, Tensor};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Als,
    Ngmres,
    Ncg,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Als => "als",
            Method::Ngmres => "ngmres",
            Method::Ncg => "ncg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "als" => Ok(Method::Als),
            "ngmres" | "n-gmres" => Ok(Method::Ngmres),
            "ncg" | "n-cg" => Ok(Method::Ncg),
            other => Err(format!("unknown method '{other}' (expected als, ngmres or ncg)")),
        }
    }
}

/// Where the data tensor comes from. Generated problems take their seed
/// from the run.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Dense { s: usize, c: f64, rank: usize, l1: f64, l2: f64 },
    Laplacian { d: usize, s: usize },
    File(PathBuf),
}

impl ProblemSource {
    pub fn dense_spec(&self, seed: u64) -> Option<DenseProblemSpec> {
        match *self {
            ProblemSource::Dense { s, c, rank, l1, l2 } => Some(DenseProblemSpec { s, c, rank, l1, l2, seed }),
            _ => None,
        }
    }

    pub fn load(&self, seed: u64) -> CliResult<Tensor> {
        Ok(match self {
            ProblemSource::Dense { .. } => {
                let spec = self.dense_spec(seed).expect("dense source");
                Tensor::Dense(gen_dense_problem(&spec)?.tensor)
            }
            ProblemSource::Laplacian { d, s } => Tensor::Sparse(gen_laplacian(&LaplacianSpec { d: *d, s: *s })?),
            ProblemSource::File(path) => load_tensor(path)?,
        })
    }

    /// Rank to use when none is given explicitly.
    pub fn default_rank(&self) -> Option<usize> {
        match self {
            ProblemSource::Dense { rank, .. } => Some(*rank),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSource::Dense { s, c, rank, l1, l2 } => format!("dense s={s} c={c} R={rank} l1={l1} l2={l2}"),
            ProblemSource::Laplacian { d, s } => format!("laplacian d={d} s={s}"),
            ProblemSource::File(p) => format!("file {}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSource,
    pub method: Method,
    pub rank: usize,
    pub window: usize,
    pub tol_grad: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.rank < 1 {
            return Err(CliError::Usage("rank must be at least 1".into()));
        }
        if self.window < 1 {
            return Err(CliError::Usage("window must be at least 1".into()));
        }
        if !(self.tol_grad > 0.0) {
            return Err(CliError::Usage("tol-grad must be positive".into()));
        }
        if let Some(spec) = self.problem.dense_spec(self.seed) {
            spec.validate()?;
        }
        if let ProblemSource::Laplacian { d, s } = self.problem {
            LaplacianSpec { d, s }.validate()?;
        }
        Ok(())
    }
}

/// Solves `t` from the seeded uniform initial guess.
pub fn run_solver(t: &Tensor, cfg: &RunConfig) -> CliResult<CpSolution> {
    let k0 = random_initial_guess(t.shape(), cfg.rank, cfg.seed)?;
    let sol = match cfg.method {
        Method::Als => als_solve(t, &k0, cfg.tol_grad, cfg.max_iters)?,
        Method::Ngmres => {
            let c = NgmresConfig {
                window: cfg.window,
                tol_grad: cfg.tol_grad,
                max_iters: cfg.max_iters,
                ..Default::default()
            };
            ngmres_solve(t, &k0, &c)?
        }
        Method::Ncg => {
            let c = NcgConfig { tol_grad: cfg.tol_grad, max_iters: cfg.max_iters, ..Default::default() };
            ncg_solve(t, &k0, &c)?
        }
    };
    Ok(sol)
}

/// Flat `key=value` configuration; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", k + 1)))?;
            let key = key.trim().trim_start_matches('-').replace('_', "-");
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// The flag value if given, else the parsed config value.
    pub fn pick<T>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_and_override() {
        let kv = KeyValues::parse("# run\nmethod = ncg\nmax_iters=10\n\n--seed=4 # inline\n").unwrap();
        assert_eq!(kv.raw("method"), Some("ncg"));
        assert_eq!(kv.pick::<usize>("max-iters", None).unwrap(), Some(10));
        assert_eq!(kv.pick::<u64>("seed", Some(9)).unwrap(), Some(9));
        assert_eq!(kv.pick::<u64>("seed", None).unwrap(), Some(4));
        assert!(kv.pick::<usize>("method", None).is_err());
        assert!(KeyValues::parse("oops").is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("N-GMRES".parse::<Method>().unwrap(), Method::Ngmres);
        assert!("lbfgs".parse::<Method>().is_err());
    }
}
