//! Jacobi eigen/SVD solvers plus Householder QR and LU for small dense matrices.
//!
//! Matrices here are tiny (n is usually 8), so the cyclic Jacobi methods are
//! the right trade: slow asymptotically, but accurate to working precision
//! and fully deterministic.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, norm, Matrix};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `m = u · diag(sigma) · vt`.
#[derive(Debug, Clone)]
pub struct SvdResult<T: Real> {
    /// Left singular vectors as columns (`rows × k`).
    pub u: Matrix<T>,
    /// Singular values, descending and non-negative (`k = min(rows, cols)`).
    pub sigma: Vec<T>,
    /// Right singular vectors as rows (`k × cols`).
    pub vt: Matrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let k = self.sigma.len();
        let us = Matrix::from_fn(self.u.rows(), k, |i, j| self.u[(i, j)] * self.sigma[j]);
        us.dot(&self.vt)
    }

    /// Largest singular value (zero for an all-zero matrix).
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }
}

/// Eigendecomposition of a symmetric matrix: `m = vectors · diag(values) · vectorsᵀ`.
#[derive(Debug, Clone)]
pub struct SymEigen<T: Real> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: Matrix<T>,
}

/// Cyclic Jacobi eigenvalue iteration. Only the upper triangle is trusted;
/// the caller is responsible for symmetry.
pub fn sym_eigen<T: Real>(m: &Matrix<T>) -> Result<SymEigen<T>> {
    if !m.is_square() {
        return Err(Error::dim("sym_eigen", "square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let n = m.rows();
    let mut a = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)];
        }
    }
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let eps = T::epsilon();

    let mut converged = n == 1 || scale == T::zero();
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { algorithm: "symmetric Jacobi eigensolver", iterations: sweeps });
        }
        sweeps += 1;
        let off: T = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= eps * scale {
            converged = true;
            continue;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let col = vectors.col(j);
        if sign_of_dominant(&col) < T::zero() {
            vectors.set_col(j, &col.iter().map(|&x| -x).collect::<Vec<_>>());
        }
    }
    Ok(SymEigen { values, vectors })
}

/// +1 or -1 such that multiplying makes the largest-magnitude entry positive
/// (earliest index wins ties).
fn sign_of_dominant<T: Real>(v: &[T]) -> T {
    let mut best = T::zero();
    let mut sign = T::one();
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign = if x < T::zero() { -T::one() } else { T::one() };
        }
    }
    sign
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// Each left singular vector is oriented so its largest-magnitude entry is
/// positive; the paired right vector is flipped to match.
pub fn svd<T: Real>(m: &Matrix<T>) -> Result<SvdResult<T>> {
    if m.rows() < m.cols() {
        let t = svd_tall(&m.transpose())?;
        // A = (Aᵀ)ᵀ = V Σ Uᵀ; re-orient so the convention applies to the new U.
        let mut u = t.vt.transpose();
        let mut vt = t.u.transpose();
        orient(&mut u, &mut vt);
        return Ok(SvdResult { u, sigma: t.sigma, vt });
    }
    svd_tall(m)
}

fn svd_tall<T: Real>(m: &Matrix<T>) -> Result<SvdResult<T>> {
    let (rows, k) = m.shape();
    // Work column-major: columns of the evolving U·Σ, and of V.
    let mut w: Vec<Vec<T>> = (0..k).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..k)
        .map(|j| (0..k).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();

    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { algorithm: "one-sided Jacobi SVD", iterations: sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sig: Vec<T> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap_or(std::cmp::Ordering::Equal));

    let sigma: Vec<T> = order.iter().map(|&i| sig[i]).collect();
    let mut ucols: Vec<Option<Vec<T>>> = order
        .iter()
        .map(|&i| {
            let s = sig[i];
            (s > T::zero() && s.is_normal()).then(|| w[i].iter().map(|&x| x / s).collect())
        })
        .collect();
    complete_orthonormal(&mut ucols, rows);

    let mut u = Matrix::from_fn(rows, k, |i, j| ucols[j].as_ref().unwrap()[i]);
    let mut vt = Matrix::from_fn(k, k, |i, j| v[order[i]][j]);
    orient(&mut u, &mut vt);
    Ok(SvdResult { u, sigma, vt })
}

fn rotate_pair<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills missing columns with unit vectors orthogonal to all present ones.
fn complete_orthonormal<T: Real>(cols: &mut [Option<Vec<T>>], dim: usize) {
    let mut candidate = 0;
    for j in 0..cols.len() {
        if cols[j].is_some() {
            continue;
        }
        while candidate < dim {
            let mut e: Vec<T> = (0..dim).map(|i| if i == candidate { T::one() } else { T::zero() }).collect();
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().flatten() {
                    let proj = dot(&e, c);
                    for (x, &y) in e.iter_mut().zip(c) {
                        *x -= proj * y;
                    }
                }
            }
            let nrm = norm(&e);
            if nrm > T::lit(1e-3) {
                cols[j] = Some(e.into_iter().map(|x| x / nrm).collect());
                break;
            }
        }
    }
}

fn orient<T: Real>(u: &mut Matrix<T>, vt: &mut Matrix<T>) {
    for j in 0..u.cols() {
        if sign_of_dominant(&u.col(j)) < T::zero() {
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
            for x in vt.row_mut(j) {
                *x = -*x;
            }
        }
    }
}

/// Householder QR of a tall or square matrix: `m = q · r` with `q` having
/// orthonormal columns (`rows × cols`) and `r` upper triangular with a
/// non-negative diagonal.
pub fn qr<T: Real>(m: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::dim("qr", "rows >= cols", format!("{rows}x{cols}")));
    }
    let mut r = m.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(cols);
    for k in 0..cols {
        let mut x: Vec<T> = (k..rows).map(|i| r[(i, k)]).collect();
        let alpha = norm(&x);
        let sign = if x[0] < T::zero() { -T::one() } else { T::one() };
        x[0] += sign * alpha;
        let vn = norm(&x);
        if vn > T::zero() {
            for e in &mut x {
                *e /= vn;
            }
            for j in k..cols {
                let proj: T = (k..rows).map(|i| x[i - k] * r[(i, j)]).sum();
                for i in k..rows {
                    r[(i, j)] -= T::lit(2.0) * x[i - k] * proj;
                }
            }
        }
        reflectors.push(x);
    }
    // Accumulate Q by applying the reflectors to the first `cols` unit vectors.
    let mut q = Matrix::from_fn(rows, cols, |i, j| if i == j { T::one() } else { T::zero() });
    for (k, x) in reflectors.iter().enumerate().rev() {
        for j in 0..cols {
            let proj: T = (k..rows).map(|i| x[i - k] * q[(i, j)]).sum();
            for i in k..rows {
                q[(i, j)] -= T::lit(2.0) * x[i - k] * proj;
            }
        }
    }
    let mut r = Matrix::from_fn(cols, cols, |i, j| if i <= j { r[(i, j)] } else { T::zero() });
    for k in 0..cols {
        if r[(k, k)] < T::zero() {
            for j in 0..cols {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..rows {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok((q, r))
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    parity: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim("lu", "square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = T::one();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[(a, k)].abs().partial_cmp(&lu[(b, k)].abs()).unwrap())
                .unwrap();
            if lu[(p, k)] == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                parity = -parity;
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let d = f * lu[(k, j)];
                    lu[(i, j)] -= d;
                }
            }
        }
        Ok(Self { lu, perm, parity, singular })
    }

    pub fn det(&self) -> T {
        if self.singular {
            return T::zero();
        }
        self.lu.diagonal().into_iter().fold(self.parity, |acc, d| acc * d)
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::dim("lu solve", n, b.len()));
        }
        if self.singular {
            return Err(Error::Singular { min_eigenvalue: 0.0 });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let d = self.lu[(i, j)] * x[j];
                x[i] -= d;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let d = self.lu[(i, j)] * x[j];
                x[i] -= d;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        let cols = (0..n)
            .map(|j| {
                let e: Vec<T> = (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect();
                self.solve(&e)
            })
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(&cols)
    }
}

pub fn det<T: Real>(m: &Matrix<T>) -> Result<T> {
    Ok(Lu::new(m)?.det())
}
