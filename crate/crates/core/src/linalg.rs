//! Small dense factorizations: Cholesky, symmetric Jacobi eigendecomposition,
//! Householder QR, and one-sided Jacobi SVD.
//!
//! The matrices involved are tiny (Gram matrices are R x R with R around 10,
//! factor matrices a few hundred entries), so accuracy and determinism matter
//! far more than asymptotics.

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, Matrix};

/// Cholesky factor L (lower triangular, `a = L Lᵀ`). Fails on a non-positive
/// pivot, which signals that `a` is not numerically positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            let ljk = l.get(j, k);
            diag -= ljk * ljk;
        }
        if diag.is_nan() || diag <= 0.0 || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, sum / ljj);
        }
    }
    Some(l)
}

/// Squared ratio of extreme Cholesky pivots; a cheap lower-bound style proxy
/// for the spectral condition number of the factored matrix.
pub fn cholesky_condition_estimate(l: &Matrix) -> f64 {
    let n = l.rows();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for j in 0..n {
        let d = l.get(j, j);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        return f64::INFINITY;
    }
    (hi / lo) * (hi / lo)
}

/// Solve `L Lᵀ x = b` column by column for a matrix right-hand side.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    debug_assert_eq!(b.rows(), n);
    let mut x = b.clone();
    for j in 0..x.cols() {
        let col = x.col_mut(j);
        // forward substitution L y = b
        for i in 0..n {
            let mut v = col[i];
            for k in 0..i {
                v -= l.get(i, k) * col[k];
            }
            col[i] = v / l.get(i, i);
        }
        // back substitution Lᵀ x = y
        for i in (0..n).rev() {
            let mut v = col[i];
            for k in (i + 1)..n {
                v -= l.get(k, i) * col[k];
            }
            col[i] = v / l.get(i, i);
        }
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, v)` with `a = v * diag(eigenvalues) * vᵀ`,
/// eigenvalues in descending order.
pub fn sym_eig(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // update rows/columns p and q of the symmetric matrix
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|&(w, _)| w).collect();
    let mut v_sorted = Matrix::zeros(n, n);
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        for k in 0..n {
            v_sorted.set(k, dst, v.get(k, src));
        }
    }
    Ok((eigenvalues, v_sorted))
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition,
/// dropping eigenvalues below `cutoff_scale * eps * max |eigenvalue|`.
pub fn pinv_symmetric(a: &Matrix, cutoff_scale: f64) -> Result<Matrix> {
    let n = a.rows();
    let (w, v) = sym_eig(a)?;
    let w_max = w.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let cutoff = cutoff_scale * f64::EPSILON * w_max;
    let mut out = Matrix::zeros(n, n);
    for (idx, &wi) in w.iter().enumerate() {
        if wi.abs() <= cutoff {
            continue;
        }
        let inv = 1.0 / wi;
        let col = v.col(idx);
        for j in 0..n {
            let f = inv * col[j];
            for i in 0..n {
                out.set(i, j, out.get(i, j) + col[i] * f);
            }
        }
    }
    Ok(out)
}

/// First `p` columns of the orthogonal factor of a Householder QR of `a`,
/// with the sign convention that the diagonal of R is nonnegative.
pub fn qr_orthonormal(a: &Matrix, p: usize) -> Matrix {
    let m = a.rows();
    let n = a.cols();
    let steps = m.min(n);
    assert!(p <= m, "requested more columns than rows");
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut diag_signs = Vec::with_capacity(steps);

    for k in 0..steps {
        let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        let alpha = norm2(&v);
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = norm2(&v);
        if vnorm > 0.0 {
            for x in &mut v {
                *x /= vnorm;
            }
            // apply I - 2vvᵀ to the trailing block
            for j in k..n {
                let mut proj = 0.0;
                for (idx, &vi) in v.iter().enumerate() {
                    proj += vi * r.get(k + idx, j);
                }
                for (idx, &vi) in v.iter().enumerate() {
                    let cur = r.get(k + idx, j);
                    r.set(k + idx, j, cur - 2.0 * proj * vi);
                }
            }
        }
        diag_signs.push(if r.get(k, k) >= 0.0 { 1.0 } else { -1.0 });
        reflectors.push(v);
    }

    // accumulate Q (thin, p columns) by applying reflectors to the identity
    let mut q = Matrix::zeros(m, p);
    for j in 0..p {
        q.set(j, j, 1.0);
    }
    for k in (0..steps).rev() {
        let v = &reflectors[k];
        for j in 0..p {
            let mut proj = 0.0;
            for (idx, &vi) in v.iter().enumerate() {
                proj += vi * q.get(k + idx, j);
            }
            for (idx, &vi) in v.iter().enumerate() {
                let cur = q.get(k + idx, j);
                q.set(k + idx, j, cur - 2.0 * proj * vi);
            }
        }
    }
    // flip columns so that diag(R) >= 0
    for (k, &sign) in diag_signs.iter().enumerate().take(p) {
        if sign < 0.0 {
            for i in 0..m {
                q.set(i, k, -q.get(i, k));
            }
        }
    }
    q
}

/// Thin singular value decomposition `a = u * diag(sigma) * vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `m x n`; columns paired with zero singular values are zero.
    pub u: Matrix,
    /// Singular values in descending order, length `n`.
    pub sigma: Vec<f64>,
    /// `n x n` orthogonal.
    pub v: Matrix,
}

impl ThinSvd {
    /// Number of singular values above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > tol * smax).count()
    }
}

/// One-sided Jacobi SVD: rotate column pairs of a working copy until all are
/// mutually orthogonal, then read off the singular values as column norms.
/// Very accurate for the small factor matrices used here.
pub fn thin_svd(a: &Matrix) -> ThinSvd {
    let n = a.cols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let eps = 1e-15;

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                // sqrt the factors separately so the product cannot overflow
                if gamma.abs() <= eps * (alpha.sqrt() * beta.sqrt()) || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| norm2(w.col(j))).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let m = a.rows();
    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let sigma_max = order.first().map(|&j| norms[j]).unwrap_or(0.0);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > sigma_max * 1e-300 && s > 0.0 {
            for i in 0..m {
                u.set(i, dst, w.get(i, src) / s);
            }
        }
        for i in 0..n {
            v_sorted.set(i, dst, v.get(i, src));
        }
    }
    ThinSvd {
        u,
        sigma,
        v: v_sorted,
    }
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.rows() {
        let mp = m.get(i, p);
        let mq = m.get(i, q);
        m.set(i, p, c * mp - s * mq);
        m.set(i, q, s * mp + c * mq);
    }
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let mut pivot = col;
        for i in (col + 1)..n {
            if work.get(i, col).abs() > work.get(pivot, col).abs() {
                pivot = i;
            }
        }
        let pval = work.get(pivot, col);
        if pval.abs() < f64::MIN_POSITIVE * 16.0 || !pval.is_finite() {
            return Err(Error::DegenerateInput("singular matrix in inversion"));
        }
        if pivot != col {
            swap_rows(&mut work, pivot, col);
            swap_rows(&mut inv, pivot, col);
        }
        let scale = 1.0 / work.get(col, col);
        for j in 0..n {
            work.set(col, j, work.get(col, j) * scale);
            inv.set(col, j, inv.get(col, j) * scale);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = work.get(i, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                work.set(i, j, work.get(i, j) - f * work.get(col, j));
                inv.set(i, j, inv.get(i, j) - f * inv.get(col, j));
            }
        }
    }
    Ok(inv)
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    for j in 0..m.cols() {
        let t = m.get(a, j);
        m.set(a, j, m.get(b, j));
        m.set(b, j, t);
    }
}
