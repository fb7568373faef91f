//! Seeded test problem generators.
//!
//! Randomness comes from ChaCha20 seeded with `seed_from_u64(seed)`. Stream 0
//! generates problems in a fixed order: the factor matrices one mode at a
//! time (column-major uniform(0,1) entries), then every entry of `N1`, then
//! every entry of `N2`, both standard normal via the ziggurat method. Both
//! noise tensors are drawn even when a stage is skipped, so the factors
//! for a seed do not depend on the noise levels. Stream 1 generates
//! initial guesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{CpError, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::{cholesky_upper, thin_q};
use crate::tensor::{DenseTensor, Matrix, Shape, SparseTensor};

const PROBLEM_STREAM: u64 = 0;
const GUESS_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Matrix {
    let values = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    Matrix::new(rows, cols, values).expect("finite uniform draws")
}

/// Dense three-way problem with collinear factors and two noise stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseProblemSpec {
    pub s: usize,
    pub c: f64,
    pub rank: usize,
    pub l1: f64,
    pub l2: f64,
    pub seed: u64,
}

impl DenseProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CpError::InvalidParameter(m.into()));
        if self.rank < 1 || self.s < self.rank {
            return bad("need s >= R >= 1");
        }
        if !(0.0..1.0).contains(&self.c) {
            return bad("collinearity c must lie in [0, 1)");
        }
        if !(0.0..100.0).contains(&self.l1) || !(0.0..100.0).contains(&self.l2) {
            return bad("noise levels must lie in [0, 100)");
        }
        Ok(())
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!("s={}\nc={}\nR={}\nl1={}\nl2={}\nseed={}\n", self.s, self.c, self.rank, self.l1, self.l2, self.seed)
    }

    /// The collinearity matrix `(1 − c)I + c·11ᵀ`.
    pub fn collinearity_matrix(&self) -> Matrix {
        let mut k = Matrix::zeros(self.rank, self.rank);
        for i in 0..self.rank {
            for j in 0..self.rank {
                k.set(i, j, if i == j { 1.0 } else { self.c });
            }
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseProblem {
    /// The noisy data tensor.
    pub tensor: DenseTensor,
    /// `full(factors)` before noise.
    pub noise_free: DenseTensor,
    pub factors: KruskalTensor,
}

fn collinear_factors_from(spec: &DenseProblemSpec, rng: &mut ChaCha20Rng) -> Result<Vec<Matrix>> {
    spec.validate()?;
    let c = cholesky_upper(&spec.collinearity_matrix())
        .ok_or_else(|| CpError::InvalidParameter("collinearity matrix is not positive definite".into()))?;
    (0..3).map(|_| thin_q(&uniform_matrix(rng, spec.s, spec.rank)).matmul(&c)).collect()
}

/// Three `s × R` factors with unit columns and pairwise column inner
/// products `c`: `Q·C` with `Q` orthonormalized uniform noise and `CᵀC = K`.
pub fn gen_collinear_factors(spec: &DenseProblemSpec) -> Result<Vec<Matrix>> {
    collinear_factors_from(spec, &mut rng(spec.seed, PROBLEM_STREAM))
}

fn normal_tensor(rng: &mut ChaCha20Rng, shape: &Shape) -> Vec<f64> {
    (0..shape.len()).map(|_| rng.sample(StandardNormal)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(100/l − 1)^{-1/2}`: the noise-to-signal norm ratio for level `l`.
pub fn noise_ratio(l: f64) -> f64 {
    (100.0 / l - 1.0).powf(-0.5)
}

pub fn gen_dense_problem(spec: &DenseProblemSpec) -> Result<DenseProblem> {
    let mut rng = rng(spec.seed, PROBLEM_STREAM);
    let factors = KruskalTensor::new(collinear_factors_from(spec, &mut rng)?)?;
    let shape = factors.shape().clone();
    let noise_free = factors.full()?;
    let n1 = normal_tensor(&mut rng, &shape);
    let n2 = normal_tensor(&mut rng, &shape);

    let mut t = noise_free.values().to_vec();
    if spec.l1 > 0.0 {
        let scale = noise_ratio(spec.l1) * norm(&t) / norm(&n1);
        for (x, n) in t.iter_mut().zip(&n1) {
            *x += scale * n;
        }
    }
    if spec.l2 > 0.0 {
        let weighted: Vec<f64> = n2.iter().zip(&t).map(|(n, x)| n * x).collect();
        let scale = noise_ratio(spec.l2) * norm(&t) / norm(&weighted);
        for (x, w) in t.iter_mut().zip(&weighted) {
            *x += scale * w;
        }
    }
    Ok(DenseProblem { tensor: DenseTensor::new(shape, t)?, noise_free, factors })
}

/// Finite-difference Laplacian on an `s^d` grid as an order-`2d` tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaplacianSpec {
    pub d: usize,
    pub s: usize,
}

impl LaplacianSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.s < 2 {
            return Err(CpError::InvalidParameter("need d >= 1 and s >= 2".into()));
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> String {
        format!("d={}\ns={}\n", self.d, self.s)
    }

    /// `s^d + 2·d·s^{d−1}·(s − 1)`.
    pub fn expected_nnz(&self) -> usize {
        let (d, s) = (self.d as u32, self.s);
        s.pow(d) + 2 * self.d * s.pow(d - 1) * (s - 1)
    }
}

pub fn gen_laplacian(spec: &LaplacianSpec) -> Result<SparseTensor> {
    spec.validate()?;
    let (d, s) = (spec.d, spec.s);
    let shape = Shape::new(vec![s; 2 * d])?;
    let grid = Shape::new(vec![s; d])?;
    let mut entries = Vec::with_capacity(spec.expected_nnz());
    let mut point = vec![0; d];
    for offset in 0..grid.len() {
        grid.unravel(offset, &mut point);
        entries.push(([point.as_slice(), point.as_slice()].concat(), 2.0 * d as f64));
        for k in 0..d {
            if point[k] + 1 < s {
                let mut next = point.clone();
                next[k] += 1;
                entries.push(([point.as_slice(), next.as_slice()].concat(), -1.0));
                entries.push(([next.as_slice(), point.as_slice()].concat(), -1.0));
            }
        }
    }
    SparseTensor::from_entries(shape, entries)
}

/// Initial guess with independent uniform(0,1) factor entries.
pub fn random_initial_guess(shape: &Shape, rank: usize, seed: u64) -> Result<KruskalTensor> {
    if rank < 1 {
        return Err(CpError::InvalidParameter("rank must be at least 1".into()));
    }
    let mut rng = rng(seed, GUESS_STREAM);
    KruskalTensor::new(shape.dims().iter().map(|&d| uniform_matrix(&mut rng, d, rank)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: f64, l1: f64, l2: f64) -> DenseProblemSpec {
        DenseProblemSpec { s: 8, c, rank: 3, l1, l2, seed: 7 }
    }

    #[test]
    fn zero_collinearity_gives_orthonormal_factors() {
        for f in gen_collinear_factors(&spec(0.0, 0.0, 0.0)).unwrap() {
            assert!(f.gram().max_abs_diff(&Matrix::identity(3)) < 1e-12);
        }
    }

    #[test]
    fn factor_gram_equals_collinearity_matrix() {
        let sp = spec(0.9, 0.0, 0.0);
        let k = Matrix::from_rows(&[&[1.0, 0.9, 0.9], &[0.9, 1.0, 0.9], &[0.9, 0.9, 1.0]]).unwrap();
        for f in gen_collinear_factors(&sp).unwrap() {
            assert!(f.gram().max_abs_diff(&k) < 1e-12);
        }
    }

    #[test]
    fn noise_free_problem_is_exact() {
        let p = gen_dense_problem(&spec(0.5, 0.0, 0.0)).unwrap();
        assert_eq!(p.tensor, p.noise_free);
    }

    #[test]
    fn first_noise_stage_has_the_prescribed_magnitude() {
        let p = gen_dense_problem(&spec(0.5, 1.0, 0.0)).unwrap();
        let diff: Vec<f64> = p.tensor.values().iter().zip(p.noise_free.values()).map(|(a, b)| a - b).collect();
        let ratio = norm(&diff) / p.noise_free.frobenius_norm();
        assert!((ratio - 99f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_dense_problem(&spec(0.5, 1.0, 1.0)).unwrap();
        let b = gen_dense_problem(&spec(0.5, 1.0, 1.0)).unwrap();
        assert_eq!(a, b);
        let g = random_initial_guess(a.tensor.shape(), 3, 7).unwrap();
        assert_eq!(g, random_initial_guess(a.tensor.shape(), 3, 7).unwrap());
        assert!(g.factors().iter().all(|f| f.as_slice().iter().all(|&v| (0.0..1.0).contains(&v))));
    }

    #[test]
    fn one_dimensional_laplacian_is_tridiagonal() {
        let t = gen_laplacian(&LaplacianSpec { d: 1, s: 3 }).unwrap();
        assert_eq!(t.nnz(), 7);
        let dense = t.to_dense();
        assert_eq!(dense.values(), &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
    }

    #[test]
    fn two_dimensional_laplacian_counts() {
        let spec = LaplacianSpec { d: 2, s: 2 };
        let t = gen_laplacian(&spec).unwrap();
        assert_eq!(t.nnz(), 12);
        assert_eq!(spec.expected_nnz(), 12);
        assert_eq!(t.get(&[1, 0, 1, 0]).unwrap(), 4.0);
    }
}
