//! Multilinear kernels shared by every solver: unfolding, Khatri–Rao,
//! MTTKRP and the Hadamard product of factor Grams.
//!
//! Ordering convention: the mode-n unfolding enumerates the remaining modes
//! in increasing order with the lowest mode fastest, and [`khatri_rao`]
//! makes its first argument's row index fastest. Hence for a Kruskal tensor
//!
//! ```text
//! T(n) = A(n) · khatri_rao([A(1), …, A(n-1), A(n+1), …, A(N)])ᵀ
//! ```
//!
//! which is the Kolda–Bader product `A(N) ⊙ … ⊙ A(n+1) ⊙ A(n-1) ⊙ … ⊙ A(1)`.

use super::{DenseTensor, Matrix, SparseTensor, Tensor};
use crate::error::{CpError, Result};

/// Mode-n unfolding. Dense input is materialized; sparse input is exposed as
/// an index-mapped view.
#[derive(Debug)]
pub enum Unfolding<'a> {
    Dense(Matrix),
    Sparse(SparseUnfolding<'a>),
}

/// Virtual mode-n unfolding of a sparse tensor.
#[derive(Debug, Clone, Copy)]
pub struct SparseUnfolding<'a> {
    tensor: &'a SparseTensor,
    mode: usize,
}

impl<'a> SparseUnfolding<'a> {
    pub fn rows(&self) -> usize {
        self.tensor.shape().dim(self.mode)
    }

    pub fn cols(&self) -> usize {
        self.tensor.shape().len_without(self.mode)
    }

    /// Stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + 'a {
        let shape = self.tensor.shape();
        let mode = self.mode;
        self.tensor.iter().map(move |(idx, v)| (idx[mode], shape.unfolding_column(idx, mode), v))
    }
}

pub fn matricize(t: &Tensor, mode: usize) -> Result<Unfolding<'_>> {
    t.shape().check_mode(mode)?;
    Ok(match t {
        Tensor::Dense(d) => Unfolding::Dense(matricize_dense(d, mode)),
        Tensor::Sparse(s) => Unfolding::Sparse(SparseUnfolding { tensor: s, mode }),
    })
}

pub fn matricize_dense(t: &DenseTensor, mode: usize) -> Matrix {
    let shape = t.shape();
    let mut out = Matrix::zeros(shape.dim(mode), shape.len_without(mode));
    let mut idx = vec![0; shape.order()];
    for (off, &v) in t.values().iter().enumerate() {
        shape.unravel(off, &mut idx);
        out.set(idx[mode], shape.unfolding_column(&idx, mode), v);
    }
    out
}

/// Column-wise Kronecker product, first matrix's row index fastest.
pub fn khatri_rao(mats: &[&Matrix]) -> Result<Matrix> {
    let first = mats.first().ok_or_else(|| CpError::InvalidParameter("khatri_rao needs at least one matrix".into()))?;
    let r = first.cols();
    if let Some(m) = mats.iter().find(|m| m.cols() != r) {
        return Err(CpError::ShapeMismatch(format!("khatri_rao column counts differ ({} vs {})", r, m.cols())));
    }
    let mut acc = (*first).clone();
    for m in &mats[1..] {
        let prev_rows = acc.rows();
        let rows = prev_rows
            .checked_mul(m.rows())
            .ok_or_else(|| CpError::InvalidShape("khatri_rao row count overflows".into()))?;
        let mut next = Matrix::zeros(rows, r);
        for c in 0..r {
            let src = acc.col(c);
            let dst = next.col_mut(c);
            for (j, &b) in m.col(c).iter().enumerate() {
                for (d, &a) in dst[j * prev_rows..(j + 1) * prev_rows].iter_mut().zip(src) {
                    *d = a * b;
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Khatri–Rao product of a contiguous range of factors, or a 1×R row of
/// ones when the range is empty.
fn khatri_rao_range(factors: &[Matrix], rank: usize) -> Matrix {
    if factors.is_empty() {
        return Matrix::from_parts_unchecked(1, rank, vec![1.0; rank]);
    }
    let refs: Vec<&Matrix> = factors.iter().collect();
    khatri_rao(&refs).expect("factor column counts already validated")
}

pub(crate) fn check_factors(shape: &super::Shape, factors: &[Matrix]) -> Result<usize> {
    if factors.len() != shape.order() {
        return Err(CpError::ShapeMismatch(format!("{} factors for an order-{} tensor", factors.len(), shape.order())));
    }
    let rank = factors[0].cols();
    for (n, f) in factors.iter().enumerate() {
        if f.rows() != shape.dim(n) || f.cols() != rank {
            return Err(CpError::ShapeMismatch(format!(
                "factor {n} is {}x{}, expected {}x{rank}",
                f.rows(),
                f.cols(),
                shape.dim(n)
            )));
        }
    }
    Ok(rank)
}

/// `T(n) · khatri_rao(factors except n)` as an `I_n × R` matrix.
pub fn mttkrp(t: &Tensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    match t {
        Tensor::Dense(d) => mttkrp_dense(d, factors, mode),
        Tensor::Sparse(s) => mttkrp_sparse(s, factors, mode),
    }
}

pub fn mttkrp_dense(t: &DenseTensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    let shape = t.shape();
    shape.check_mode(mode)?;
    let rank = check_factors(shape, factors)?;
    let dim = shape.dim(mode);
    let left_kr = khatri_rao_range(&factors[..mode], rank);
    let right_kr = khatri_rao_range(&factors[mode + 1..], rank);
    let left = left_kr.rows();
    let right = right_kr.rows();

    let values = t.values();
    let mut out = Matrix::zeros(dim, rank);
    let mut partial = vec![0.0; rank];
    for q in 0..right {
        let block = &values[q * left * dim..(q + 1) * left * dim];
        for i in 0..dim {
            let fiber = &block[i * left..(i + 1) * left];
            for (r, p) in partial.iter_mut().enumerate() {
                *p = fiber.iter().zip(left_kr.col(r)).map(|(a, b)| a * b).sum();
            }
            for (r, p) in partial.iter().enumerate() {
                let w = right_kr.get(q, r);
                let cell = &mut out.as_mut_slice()[i + r * dim];
                *cell += w * p;
            }
        }
    }
    Ok(out)
}

/// Sparse MTTKRP over stored entries only, `O(nnz·R·N)`.
pub fn mttkrp_sparse(t: &SparseTensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    let shape = t.shape();
    shape.check_mode(mode)?;
    let rank = check_factors(shape, factors)?;
    let mut out = Matrix::zeros(shape.dim(mode), rank);
    let mut row = vec![0.0; rank];
    for (idx, v) in t.iter() {
        row.fill(v);
        for (m, f) in factors.iter().enumerate() {
            if m == mode {
                continue;
            }
            for (r, x) in row.iter_mut().enumerate() {
                *x *= f.get(idx[m], r);
            }
        }
        for (r, x) in row.iter().enumerate() {
            let cur = out.get(idx[mode], r);
            out.set(idx[mode], r, cur + x);
        }
    }
    Ok(out)
}

/// Elementwise product of `A(l)ᵀA(l)` over all modes, or all modes except
/// `skip`.
pub fn gram_hadamard(factors: &[Matrix], skip: Option<usize>) -> Result<Matrix> {
    let grams: Vec<Matrix> = factors.iter().map(Matrix::gram).collect();
    gram_hadamard_from_grams(&grams, skip)
}

pub(crate) fn gram_hadamard_from_grams(grams: &[Matrix], skip: Option<usize>) -> Result<Matrix> {
    let rank = grams.first().ok_or_else(|| CpError::InvalidParameter("no factors".into()))?.cols();
    if grams.iter().any(|g| g.cols() != rank) {
        return Err(CpError::ShapeMismatch("factor column counts differ".into()));
    }
    let mut out = Matrix::from_parts_unchecked(rank, rank, vec![1.0; rank * rank]);
    for (l, g) in grams.iter().enumerate() {
        if Some(l) == skip {
            continue;
        }
        for (o, &x) in out.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *o *= x;
        }
    }
    for a in 0..rank {
        for b in a + 1..rank {
            let v = 0.5 * (out.get(a, b) + out.get(b, a));
            out.set(a, b, v);
            out.set(b, a, v);
        }
    }
    Ok(out)
}
