//! The CP model: Kruskal tensors, the least-squares objective and its
//! gradient, the normalized fit, canonical normalization, and packing into
//! the flat iterate vectors the optimizers work on.

use std::ops::{Deref, DerefMut};

use crate::error::{CpError, Result};
use crate::tensor::kernels::{check_factors, gram_hadamard_from_grams};
use crate::tensor::{dot, khatri_rao, mttkrp, DenseTensor, Matrix, Shape, SparseTensor, Tensor};

/// Sum of R rank-one terms, stored as N factor matrices `A(n)` of size
/// `I_n × R`. Term weights are absorbed into the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalTensor {
    shape: Shape,
    factors: Vec<Matrix>,
}

impl KruskalTensor {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CpError::InvalidShape("a Kruskal tensor needs at least one factor".into()));
        }
        let shape = Shape::new(factors.iter().map(Matrix::rows).collect())?;
        check_factors(&shape, &factors)?;
        Ok(Self { shape, factors })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.factors[0].cols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &Matrix {
        &self.factors[mode]
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }

    /// Length of the packed iterate, `R · Σ I_n`.
    pub fn packed_len(shape: &Shape, rank: usize) -> usize {
        rank * shape.dims().iter().sum::<usize>()
    }

    /// Dense reconstruction `Σ_r a_r(1) ∘ … ∘ a_r(N)`.
    pub fn full(&self) -> Result<DenseTensor> {
        let rank = self.rank();
        let first = &self.factors[0];
        let rest: Vec<&Matrix> = self.factors[1..].iter().collect();
        let right =
            if rest.is_empty() { Matrix::from_parts_unchecked(1, rank, vec![1.0; rank]) } else { khatri_rao(&rest)? };
        let rows = first.rows();
        let mut values = vec![0.0; self.shape.len()];
        for q in 0..right.rows() {
            let dst = &mut values[q * rows..(q + 1) * rows];
            for r in 0..rank {
                let w = right.get(q, r);
                if w == 0.0 {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(first.col(r)) {
                    *d += w * a;
                }
            }
        }
        DenseTensor::new(self.shape.clone(), values)
    }

    /// Flattens the factors in mode order, each column-major.
    pub fn pack(&self) -> IterateVector {
        let mut v = Vec::with_capacity(Self::packed_len(&self.shape, self.rank()));
        for f in &self.factors {
            v.extend_from_slice(f.as_slice());
        }
        IterateVector(v)
    }

    pub fn unpack(values: &[f64], shape: &Shape, rank: usize) -> Result<Self> {
        let expected = Self::packed_len(shape, rank);
        if values.len() != expected {
            return Err(CpError::LengthMismatch { expected, got: values.len() });
        }
        if rank == 0 {
            return Err(CpError::InvalidParameter("rank must be at least 1".into()));
        }
        let mut factors = Vec::with_capacity(shape.order());
        let mut start = 0;
        for &d in shape.dims() {
            let len = d * rank;
            factors.push(Matrix::new(d, rank, values[start..start + len].to_vec())?);
            start += len;
        }
        Ok(Self { shape: shape.clone(), factors })
    }

    /// Canonical form: every column rescaled to norm `λ_r^{1/N}` where
    /// `λ_r = Π_n ‖a_r(n)‖`, terms stably sorted by decreasing `λ_r`.
    pub fn normalize_and_reorder(&self) -> KruskalTensor {
        let mut flat = self.pack();
        canonicalize(&mut flat, None, &self.shape, self.rank());
        KruskalTensor::unpack(&flat, &self.shape, self.rank()).expect("same layout")
    }
}

/// Flat stacking of all factor entries (mode order, each column-major).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateVector(pub Vec<f64>);

/// Gradient in [`IterateVector`] layout; block n is `G(n)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradient(pub Vec<f64>);

macro_rules! flat_vector {
    ($t:ty) => {
        impl Deref for $t {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }
        impl DerefMut for $t {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
        impl From<Vec<f64>> for $t {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
        impl $t {
            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }
            pub fn norm(&self) -> f64 {
                dot(&self.0, &self.0).sqrt()
            }
        }
    };
}

flat_vector!(IterateVector);
flat_vector!(Gradient);

/// In-place canonical normalization of a packed iterate.
///
/// When `gradient` is given it is mapped to the gradient at the normalized
/// point. Rescaling column `a_r(n)` by `s` while keeping the model fixed
/// scales the matching gradient column by `1/s`, so no re-evaluation is
/// needed. Terms with a zero column keep their entries and sort last.
pub fn canonicalize(u: &mut [f64], mut gradient: Option<&mut [f64]>, shape: &Shape, rank: usize) {
    let order = shape.order();
    let offsets: Vec<usize> = shape
        .dims()
        .iter()
        .scan(0, |acc, &d| {
            let start = *acc;
            *acc += d * rank;
            Some(start)
        })
        .collect();
    let col = |n: usize, r: usize| {
        let d = shape.dim(n);
        let s = offsets[n] + r * d;
        s..s + d
    };

    let mut weights = vec![0.0; rank];
    for (r, weight) in weights.iter_mut().enumerate() {
        let norms: Vec<f64> = (0..order)
            .map(|n| {
                let c = &u[col(n, r)];
                dot(c, c).sqrt()
            })
            .collect();
        if norms.contains(&0.0) {
            *weight = 0.0;
            continue;
        }
        *weight = norms.iter().product();
        let root = (norms.iter().map(|x| x.ln()).sum::<f64>() / order as f64).exp();
        for (n, &nrm) in norms.iter().enumerate() {
            let scale = root / nrm;
            for x in &mut u[col(n, r)] {
                *x *= scale;
            }
            if let Some(g) = gradient.as_deref_mut() {
                for x in &mut g[col(n, r)] {
                    *x /= scale;
                }
            }
        }
    }

    let mut perm: Vec<usize> = (0..rank).collect();
    perm.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return;
    }
    let permute = |v: &mut [f64]| {
        let src = v.to_vec();
        for n in 0..order {
            for (dst_r, &src_r) in perm.iter().enumerate() {
                let (d, s) = (col(n, dst_r), col(n, src_r));
                v[d].copy_from_slice(&src[s]);
            }
        }
    };
    permute(u);
    if let Some(g) = gradient {
        permute(g);
    }
}

/// Objective and gradient evaluation for one data tensor at a fixed rank.
///
/// Caches `‖T‖²`. For dense data the objective is the directly summed
/// residual `½‖T − full(K)‖²`, which stays accurate down to exact fits; for
/// sparse data the expanded form
/// `½‖T‖² − ⟨T, full(K)⟩ + ½·1ᵀΓ1` avoids densifying the model.
#[derive(Debug, Clone)]
pub struct CpModel<'a> {
    tensor: &'a Tensor,
    rank: usize,
    norm_sq: f64,
}

impl<'a> CpModel<'a> {
    pub fn new(tensor: &'a Tensor, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(CpError::InvalidParameter("rank must be at least 1".into()));
        }
        let norm = tensor.frobenius_norm();
        Ok(Self { tensor, rank, norm_sq: norm * norm })
    }

    pub fn tensor(&self) -> &'a Tensor {
        self.tensor
    }

    pub fn shape(&self) -> &Shape {
        self.tensor.shape()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data_norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    pub fn packed_len(&self) -> usize {
        KruskalTensor::packed_len(self.shape(), self.rank)
    }

    fn check(&self, k: &KruskalTensor) -> Result<()> {
        if k.shape() != self.shape() {
            return Err(CpError::ShapeMismatch(format!(
                "model dims {:?} vs data dims {:?}",
                k.shape().dims(),
                self.shape().dims()
            )));
        }
        Ok(())
    }

    pub fn objective(&self, k: &KruskalTensor) -> Result<f64> {
        self.check(k)?;
        match self.tensor {
            Tensor::Dense(t) => Ok(residual_objective(t, k)?),
            Tensor::Sparse(t) => {
                let grams: Vec<Matrix> = k.factors().iter().map(Matrix::gram).collect();
                let inner = sparse_inner(t, k);
                Ok(self.expanded(inner, &grams))
            }
        }
    }

    /// The expanded form `½‖T‖² − ⟨T, full(K)⟩ + ½·1ᵀΓ1` regardless of
    /// storage.
    pub fn objective_expanded(&self, k: &KruskalTensor) -> Result<f64> {
        self.check(k)?;
        let grams: Vec<Matrix> = k.factors().iter().map(Matrix::gram).collect();
        let m = mttkrp(self.tensor, k.factors(), 0)?;
        let inner = dot(m.as_slice(), k.factor(0).as_slice());
        Ok(self.expanded(inner, &grams))
    }

    fn expanded(&self, inner: f64, grams: &[Matrix]) -> f64 {
        let gamma = gram_hadamard_from_grams(grams, None).expect("validated factors");
        let model_sq: f64 = gamma.as_slice().iter().sum();
        0.5 * self.norm_sq - inner + 0.5 * model_sq
    }

    pub fn gradient(&self, k: &KruskalTensor) -> Result<Gradient> {
        Ok(self.evaluate(k, false)?.1)
    }

    /// Objective and gradient sharing one set of MTTKRPs and Grams.
    pub fn objective_and_gradient(&self, k: &KruskalTensor) -> Result<(f64, Gradient)> {
        let (f, g) = self.evaluate(k, true)?;
        Ok((f.expect("requested"), g))
    }

    fn evaluate(&self, k: &KruskalTensor, with_value: bool) -> Result<(Option<f64>, Gradient)> {
        self.check(k)?;
        let grams: Vec<Matrix> = k.factors().iter().map(Matrix::gram).collect();
        let mut g = Vec::with_capacity(self.packed_len());
        let mut inner = 0.0;
        for (n, a) in k.factors().iter().enumerate() {
            let m = mttkrp(self.tensor, k.factors(), n)?;
            if n == 0 {
                inner = dot(m.as_slice(), a.as_slice());
            }
            let gamma = gram_hadamard_from_grams(&grams, Some(n))?;
            let ag = a.matmul(&gamma)?;
            g.extend(ag.as_slice().iter().zip(m.as_slice()).map(|(x, y)| x - y));
        }
        let f = if with_value {
            Some(match self.tensor {
                Tensor::Dense(t) => residual_objective(t, k)?,
                Tensor::Sparse(_) => self.expanded(inner, &grams),
            })
        } else {
            None
        };
        Ok((f, Gradient(g)))
    }

    /// `‖T − full(K)‖ / ‖T‖` from an objective value, clamped at zero.
    pub fn fit_from_objective(&self, f: f64) -> f64 {
        (2.0 * f).max(0.0).sqrt() / self.data_norm()
    }

    pub fn fit_h(&self, k: &KruskalTensor) -> Result<f64> {
        if self.norm_sq == 0.0 {
            return Err(CpError::ZeroTensor);
        }
        Ok(self.fit_from_objective(self.objective(k)?))
    }
}

fn residual_objective(t: &DenseTensor, k: &KruskalTensor) -> Result<f64> {
    let model = k.full()?;
    let sq: f64 = t.values().iter().zip(model.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(0.5 * sq)
}

fn sparse_inner(t: &SparseTensor, k: &KruskalTensor) -> f64 {
    let rank = k.rank();
    let mut total = 0.0;
    for (idx, v) in t.iter() {
        let mut term_sum = 0.0;
        for r in 0..rank {
            let mut p = v;
            for (n, f) in k.factors().iter().enumerate() {
                p *= f.get(idx[n], r);
            }
            term_sum += p;
        }
        total += term_sum;
    }
    total
}

/// `½‖T − full(K)‖²`.
pub fn objective(t: &Tensor, k: &KruskalTensor) -> Result<f64> {
    CpModel::new(t, k.rank())?.objective(k)
}

/// Gradient blocks `G(n) = −T(n)Φ̄(n) + A(n)Γ̄(n)`, packed.
pub fn gradient(t: &Tensor, k: &KruskalTensor) -> Result<Gradient> {
    CpModel::new(t, k.rank())?.gradient(k)
}

/// Normalized distance `‖T − full(K)‖ / ‖T‖`.
pub fn fit_h(t: &Tensor, k: &KruskalTensor) -> Result<f64> {
    CpModel::new(t, k.rank())?.fit_h(k)
}
