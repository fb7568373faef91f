#![allow(dead_code)]

use ngcp::{DenseTensor, KruskalTensor, Matrix, Shape, SparseTensor, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_ktensor(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> KruskalTensor {
    KruskalTensor::new(dims.iter().map(|&d| random_matrix(rng, d, rank)).collect()).unwrap()
}

pub fn random_dense(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let values = (0..shape.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseTensor::new(shape, values).unwrap()
}

/// Random sparse tensor where each position is stored with probability `density`.
pub fn random_sparse(rng: &mut ChaCha8Rng, dims: &[usize], density: f64) -> SparseTensor {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let mut idx = vec![0; dims.len()];
    let mut entries = Vec::new();
    for k in 0..shape.len() {
        if rng.gen::<f64>() < density {
            shape.unravel(k, &mut idx);
            entries.push((idx.clone(), rng.gen_range(-1.0..1.0)));
        }
    }
    SparseTensor::from_entries(shape, entries).unwrap()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize], sparse: bool) -> Tensor {
    if sparse {
        Tensor::Sparse(random_sparse(rng, dims, 0.3))
    } else {
        Tensor::Dense(random_dense(rng, dims))
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
