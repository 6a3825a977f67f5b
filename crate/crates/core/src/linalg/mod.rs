//! Small dense linear algebra: covariance, symmetric inverse square root,
//! SVD and the Moore–Penrose pseudo-inverse.

mod decomp;
mod matrix;

pub use decomp::{det, qr, svd, sym_eigen, Lu, SvdResult, SymEigen};
pub use matrix::Matrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative singular-value cutoff used by [`pinv`].
pub const PINV_RCOND: f64 = 1e-12;

/// Symmetry tolerance accepted by [`inv_sqrt_sym`], relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Cross-covariance `(1/T) · X · Yᵀ` of two already-centered `n × T` blocks.
pub fn covariance<T: Real>(x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
    if x.cols() != y.cols() {
        return Err(Error::dim("covariance", format!("{} samples", x.cols()), y.cols()));
    }
    let inv_t = T::one() / T::from_count(x.cols());
    Ok(x.dot(&y.transpose()).scale(inv_t))
}

/// `(m + ridge·I)^{-1/2}` for symmetric `m`, via eigendecomposition.
///
/// Eigenvalues that are not positive (at the solver's resolution) yield
/// [`Error::Singular`].
pub fn inv_sqrt_sym<T: Real>(m: &Matrix<T>, ridge: T) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::dim("inv_sqrt_sym", "square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    if ridge < T::zero() || !ridge.is_finite() {
        return Err(Error::Parameter(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    let asym = m.max_asymmetry();
    if asym > T::lit(SYMMETRY_TOL) * T::one().max(m.max_abs()) {
        return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
    }
    let n = m.rows();
    let sym = m.add(&m.transpose()).scale(T::lit(0.5)).add_diagonal(ridge);
    let eig = sym_eigen(&sym)?;
    let lmax = eig.values[0].max(T::zero());
    // Anything within rounding of zero is indistinguishable from singular.
    let floor = T::from_count(n) * T::epsilon() * lmax;
    let lmin = eig.values[n - 1];
    if lmin <= floor || lmin <= T::zero() {
        return Err(Error::Singular { min_eigenvalue: lmin.as_f64() });
    }
    let q = &eig.vectors;
    let scaled = Matrix::from_fn(n, n, |i, j| q[(i, j)] / eig.values[j].sqrt());
    let out = scaled.dot(&q.transpose());
    // Exact symmetry keeps downstream whitening symmetric bit-for-bit.
    Ok(Matrix::from_fn(n, n, |i, j| if i <= j { out[(i, j)] } else { out[(j, i)] }))
}

/// Moore–Penrose pseudo-inverse with cutoff `max(rows, cols) · σ_max · 1e-12`.
pub fn pinv<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let s = svd(m)?;
    let rcond = T::lit(PINV_RCOND).max(T::epsilon());
    let cutoff = T::from_count(m.rows().max(m.cols())) * s.sigma_max() * rcond;
    let k = s.sigma.len();
    // V · Σ⁺ · Uᵀ
    let v_scaled = Matrix::from_fn(m.cols(), k, |i, j| {
        let sv = s.sigma[j];
        if sv > cutoff {
            s.vt[(j, i)] / sv
        } else {
            T::zero()
        }
    });
    Ok(v_scaled.dot(&s.u.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn covariance_trivial_cases() {
        let x = Matrix::from_rows(&[vec![1.0_f64, -1.0]]).unwrap();
        let y = Matrix::from_rows(&[vec![-1.0_f64, 1.0]]).unwrap();
        assert_eq!(covariance(&x, &x).unwrap()[(0, 0)], 1.0);
        assert_eq!(covariance(&x, &y).unwrap()[(0, 0)], -1.0);
        let z = Matrix::from_rows(&[vec![1.0_f64, 2.0, 3.0]]).unwrap();
        assert!(matches!(covariance(&x, &z), Err(Error::Dimension { .. })));
    }

    #[test]
    fn covariance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random(3, 50, &mut rng);
        let y = random(3, 50, &mut rng);
        let c = covariance(&x, &y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for t in 0..50 {
                    acc += x[(i, t)] * y[(j, t)];
                }
                assert!((c[(i, j)] - acc / 50.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inv_sqrt_trivial_cases() {
        let id = inv_sqrt_sym(&Matrix::<f64>::identity(3), 0.0).unwrap();
        assert!(id.max_abs_diff(&Matrix::identity(3)) < 1e-15);
        let d = inv_sqrt_sym(&Matrix::diag(&[4.0_f64, 9.0]), 0.0).unwrap();
        assert!(d.max_abs_diff(&Matrix::diag(&[0.5, 1.0 / 3.0])) < 1e-15);
    }

    #[test]
    fn inv_sqrt_whitens_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random(8, 8, &mut rng);
        let m = g.dot(&g.transpose()).add_diagonal(1.0);
        let w = inv_sqrt_sym(&m, 0.0).unwrap();
        assert_eq!(w.max_asymmetry(), 0.0);
        assert!(w.dot(&m).dot(&w).max_abs_diff(&Matrix::identity(8)) < 1e-8);
    }

    #[test]
    fn inv_sqrt_errors() {
        let sing = Matrix::diag(&[1.0_f64, 0.0]);
        assert!(matches!(inv_sqrt_sym(&sing, 0.0), Err(Error::Singular { .. })));
        assert!(inv_sqrt_sym(&sing, 1e-3).is_ok());
        let indef = Matrix::diag(&[1.0_f64, -2.0]);
        assert!(matches!(inv_sqrt_sym(&indef, 1.0), Err(Error::Singular { .. })));
        let asym = Matrix::from_rows(&[vec![1.0_f64, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(inv_sqrt_sym(&asym, 0.0), Err(Error::NotSymmetric { .. })));
        assert!(inv_sqrt_sym(&Matrix::<f64>::identity(2), -1.0).is_err());
    }

    #[test]
    fn pinv_trivial_cases() {
        let id = pinv(&Matrix::<f64>::identity(4)).unwrap();
        assert!(id.max_abs_diff(&Matrix::identity(4)) < 1e-15);
        let d = pinv(&Matrix::diag(&[2.0_f64, 0.0])).unwrap();
        assert!(d.max_abs_diff(&Matrix::diag(&[0.5, 0.0])) < 1e-15);
    }

    #[test]
    fn pinv_of_full_rank_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random(8, 8, &mut rng);
        let p = pinv(&m).unwrap();
        assert!(p.dot(&m).max_abs_diff(&Matrix::identity(8)) < 1e-8);
        let inv = Lu::new(&m).unwrap().inverse().unwrap();
        assert!(p.max_abs_diff(&inv) < 1e-8 * inv.max_abs().max(1.0));
    }

    #[test]
    fn pinv_of_rectangular_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = random(3, 7, &mut rng);
        let p = pinv(&m).unwrap();
        assert_eq!(p.shape(), (7, 3));
        assert!(m.dot(&p).max_abs_diff(&Matrix::identity(3)) < 1e-10);
    }

    #[test]
    fn generic_over_f32() {
        let m: Matrix<f32> = Matrix::diag(&[4.0, 16.0]);
        let w = inv_sqrt_sym(&m, 0.0).unwrap();
        assert!((w[(1, 1)] - 0.25).abs() < 1e-6);
        let p = pinv(&m).unwrap();
        assert!((p[(0, 0)] - 0.25).abs() < 1e-6);
    }
}
