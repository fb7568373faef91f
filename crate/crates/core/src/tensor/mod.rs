//! Tensor storage and multilinear kernels.

mod dense;
pub mod kernels;
mod matrix;
mod shape;
mod sparse;

pub use dense::DenseTensor;
pub use kernels::{gram_hadamard, khatri_rao, matricize, mttkrp, SparseUnfolding, Unfolding};
pub use matrix::Matrix;
pub use shape::Shape;
pub use sparse::SparseTensor;

pub(crate) use matrix::dot;

/// A data tensor in either storage format.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Dense(DenseTensor),
    Sparse(SparseTensor),
}

impl Tensor {
    pub fn shape(&self) -> &Shape {
        match self {
            Tensor::Dense(t) => t.shape(),
            Tensor::Sparse(t) => t.shape(),
        }
    }

    /// Frobenius norm; sparse tensors sum stored entries only.
    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Tensor::Dense(t) => t.frobenius_norm(),
            Tensor::Sparse(t) => t.frobenius_norm(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Tensor::Sparse(_))
    }

    pub fn to_dense(&self) -> DenseTensor {
        match self {
            Tensor::Dense(t) => t.clone(),
            Tensor::Sparse(t) => t.to_dense(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Tensor::Dense(t) => t.nnz(),
            Tensor::Sparse(t) => t.nnz(),
        }
    }
}

impl From<DenseTensor> for Tensor {
    fn from(t: DenseTensor) -> Self {
        Tensor::Dense(t)
    }
}

impl From<SparseTensor> for Tensor {
    fn from(t: SparseTensor) -> Self {
        Tensor::Sparse(t)
    }
}

/// Frobenius norm of either storage format.
pub fn frobenius_norm(t: &Tensor) -> f64 {
    t.frobenius_norm()
}
