//! One alternating least squares sweep: block Gauss–Seidel over the
//! first-order optimality equations `G(n) = 0`, modes in order 1..N.

use crate::error::{CpError, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::solve_spd;
use crate::tensor::kernels::{check_factors, gram_hadamard_from_grams};
use crate::tensor::{mttkrp, Matrix, Tensor};

/// Relative ridge added to `Γ̄(n)` when its Cholesky factorization fails.
pub const RIDGE: f64 = 1e-12;

/// Runs one sweep and returns the normalized, reordered result.
pub fn als_sweep(t: &Tensor, k: &KruskalTensor) -> Result<KruskalTensor> {
    let mut factors = k.factors().to_vec();
    sweep_in_place(t, &mut factors, |_, _| {})?;
    Ok(KruskalTensor::new(factors)?.normalize_and_reorder())
}

/// The unnormalized sweep. `after_mode(n, factors)` runs right after mode n
/// is updated; tests use it to inspect intermediate block gradients.
pub fn sweep_in_place<F>(t: &Tensor, factors: &mut [Matrix], mut after_mode: F) -> Result<()>
where
    F: FnMut(usize, &[Matrix]),
{
    check_factors(t.shape(), factors)?;
    let mut grams: Vec<Matrix> = factors.iter().map(Matrix::gram).collect();
    for n in 0..factors.len() {
        let rhs = mttkrp(t, factors, n)?;
        let gamma = gram_hadamard_from_grams(&grams, Some(n))?;
        factors[n] = solve_block(&gamma, &rhs, n)?;
        grams[n] = factors[n].gram();
        after_mode(n, factors);
    }
    Ok(())
}

/// Solves `A Γ̄ = M` through the transposed system `Γ̄ Aᵀ = Mᵀ`.
fn solve_block(gamma: &Matrix, rhs: &Matrix, mode: usize) -> Result<Matrix> {
    let rhs_t = rhs.transpose();
    if let Some(x) = solve_spd(gamma, &rhs_t) {
        return Ok(x.transpose());
    }
    let rank = gamma.rows();
    let trace: f64 = (0..rank).map(|i| gamma.get(i, i)).sum();
    let ridge = RIDGE * trace;
    let mut reg = gamma.clone();
    for i in 0..rank {
        reg.set(i, i, gamma.get(i, i) + ridge);
    }
    solve_spd(&reg, &rhs_t).map(|x| x.transpose()).ok_or(CpError::SingularSystem { mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kruskal::objective;
    use crate::tensor::{DenseTensor, Shape};

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn scalar_sweep_redistributes_the_product() {
        let t = Tensor::Dense(DenseTensor::new(Shape::new(vec![1, 1, 1]).unwrap(), vec![8.0]).unwrap());
        let k = KruskalTensor::new(vec![col(&[1.0]), col(&[1.0]), col(&[1.0])]).unwrap();

        let mut raw = k.factors().to_vec();
        sweep_in_place(&t, &mut raw, |_, _| {}).unwrap();
        assert_eq!(raw[0].as_slice(), &[8.0]);
        assert_eq!(raw[1].as_slice(), &[1.0]);
        assert_eq!(raw[2].as_slice(), &[1.0]);

        let out = als_sweep(&t, &k).unwrap();
        for f in out.factors() {
            assert!((f.get(0, 0) - 2.0).abs() < 1e-14);
        }
        assert!(objective(&t, &out).unwrap() < 1e-24);
    }

    #[test]
    fn zero_factors_are_singular() {
        let t = Tensor::Dense(DenseTensor::new(Shape::new(vec![2, 2]).unwrap(), vec![1.0; 4]).unwrap());
        let k = KruskalTensor::new(vec![Matrix::zeros(2, 1), Matrix::zeros(2, 1)]).unwrap();
        assert_eq!(als_sweep(&t, &k), Err(CpError::SingularSystem { mode: 0 }));
    }

    #[test]
    fn collinear_columns_fall_back_to_ridge() {
        // Two identical columns make Γ̄ exactly singular.
        let t = Tensor::Dense(DenseTensor::new(Shape::new(vec![2, 2]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let b = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let k = KruskalTensor::new(vec![b.clone(), b]).unwrap();
        let out = als_sweep(&t, &k).unwrap();
        assert!(out.factors().iter().all(|f| f.as_slice().iter().all(|v| v.is_finite())));
    }
}
