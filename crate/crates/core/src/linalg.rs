//! Small dense factorizations backed by nalgebra.

use nalgebra::DMatrix;

use crate::tensor::Matrix;

/// Solves `A X = B` for symmetric positive definite `A` by Cholesky.
/// Returns `None` when the factorization breaks down.
pub(crate) fn solve_spd(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let chol = a.to_nalgebra().cholesky()?;
    let x = chol.solve(&b.to_nalgebra());
    x.iter().all(|v| v.is_finite()).then(|| Matrix::from_nalgebra(&x))
}

/// Same as [`solve_spd`] on plain column-major slices of an `n × n` system
/// with a single right-hand side.
pub(crate) fn solve_spd_vec(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let chol = DMatrix::from_column_slice(n, n, a).cholesky()?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
    x.iter().all(|v| v.is_finite()).then(|| x.as_slice().to_vec())
}

/// General square solve by LU with partial pivoting.
pub(crate) fn solve_lu_vec(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let lu = DMatrix::from_column_slice(n, n, a).lu();
    let x = lu.solve(&nalgebra::DVector::from_column_slice(b))?;
    x.iter().all(|v| v.is_finite()).then(|| x.as_slice().to_vec())
}

/// Thin QR with the sign convention `diag(R) ≥ 0`; returns `Q` (`m × n`).
pub(crate) fn thin_q(a: &Matrix) -> Matrix {
    let qr = a.to_nalgebra().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..r.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            let mut c = q.column_mut(j);
            c.neg_mut();
        }
    }
    Matrix::from_nalgebra(&q)
}

/// Upper-triangular `C` with `CᵀC = A` for symmetric positive definite `A`.
pub(crate) fn cholesky_upper(a: &Matrix) -> Option<Matrix> {
    let chol = a.to_nalgebra().cholesky()?;
    Some(Matrix::from_nalgebra(&chol.l().transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_sign_convention_and_orthonormality() {
        let a = Matrix::from_rows(&[&[-1.0, 2.0], &[0.5, 1.0], &[2.0, -3.0]]).unwrap();
        let q = thin_q(&a);
        let qtq = q.gram();
        assert!(qtq.max_abs_diff(&Matrix::identity(2)) < 1e-14);
        let r = q.transpose().matmul(&a).unwrap();
        assert!(r.get(0, 0) > 0.0 && r.get(1, 1) > 0.0);
        assert!(r.get(1, 0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_upper_reproduces_matrix() {
        let a = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]).unwrap();
        let c = cholesky_upper(&a).unwrap();
        assert_eq!(c.get(1, 0), 0.0);
        assert!(c.transpose().matmul(&c).unwrap().max_abs_diff(&a) < 1e-14);
        let neg = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(cholesky_upper(&neg).is_none());
    }
}
