//! Fixtures shared by the benchmarks.

use ngcp::problems::{gen_dense_problem, gen_laplacian, random_initial_guess, DenseProblemSpec, LaplacianSpec};
use ngcp::{KruskalTensor, Tensor};

/// A data tensor with a seeded starting point.
pub struct Fixture {
    pub tensor: Tensor,
    pub start: KruskalTensor,
}

/// Collinear dense `s × s × s` problem of rank 3.
pub fn dense(s: usize, c: f64) -> Fixture {
    let spec = DenseProblemSpec { s, c, rank: 3, l1: 0.0, l2: 0.0, seed: 1 };
    let tensor = Tensor::Dense(gen_dense_problem(&spec).expect("valid spec").tensor);
    let start = random_initial_guess(tensor.shape(), 3, 1).expect("valid shape");
    Fixture { tensor, start }
}

/// Laplacian of the `d`-dimensional `s`-point grid, fitted at rank 2.
pub fn laplacian(d: usize, s: usize) -> Fixture {
    let tensor = Tensor::Sparse(gen_laplacian(&LaplacianSpec { d, s }).expect("valid spec"));
    let start = random_initial_guess(tensor.shape(), 2, 1).expect("valid shape");
    Fixture { tensor, start }
}
