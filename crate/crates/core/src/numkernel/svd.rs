use super::{DenseMatrix, NumError};
use crate::Scalar;

const MAX_SWEEPS: usize = 80;

/// Singular value decomposition `A = U diag(sigma) Vᵀ`.
///
/// Wide inputs are padded with zero rows, so `u` always has at least as many
/// rows as columns and `v` is a full square orthogonal matrix. The singular
/// values are sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
    rows: usize,
}

impl<T: Scalar> Svd<T> {
    /// One-sided Jacobi decomposition.
    pub fn new(m: &DenseMatrix<T>) -> Result<Self, NumError> {
        if !m.is_finite() {
            return Err(NumError::InvalidArgument(
                "matrix has non-finite entries".into(),
            ));
        }
        let (rows, cols) = m.shape();
        let pr = rows.max(cols);
        let mut u = DenseMatrix::from_fn(pr, cols, |i, j| if i < rows { m[(i, j)] } else { T::zero() });
        let mut v = DenseMatrix::<T>::identity(cols);
        let eps = T::epsilon();
        // Pairs involving a column that is negligible against the whole
        // matrix are left alone; rotating rounding noise never settles.
        let fro_sq = m.as_slice().iter().map(|v| *v * *v).sum::<T>();
        let negligible = eps * eps * fro_sq;
        let mut converged = cols < 2;
        let mut sweeps = 0;
        while !converged {
            if sweeps == MAX_SWEEPS {
                return Err(NumError::Convergence {
                    op: "svd",
                    iterations: sweeps,
                });
            }
            sweeps += 1;
            converged = true;
            for p in 0..cols - 1 {
                for q in p + 1..cols {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..pr {
                        let (a, b) = (u[(i, p)], u[(i, q)]);
                        alpha += a * a;
                        beta += b * b;
                        gamma += a * b;
                    }
                    if gamma == T::zero()
                        || alpha <= negligible
                        || beta <= negligible
                        || gamma.abs() <= eps * (alpha * beta).sqrt()
                    {
                        continue;
                    }
                    converged = false;
                    let zeta = (beta - alpha) / (T::two() * gamma);
                    let sgn = if zeta >= T::zero() { T::one() } else { -T::one() };
                    let t = sgn / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..pr {
                        let (a, b) = (u[(i, p)], u[(i, q)]);
                        u[(i, p)] = c * a - s * b;
                        u[(i, q)] = s * a + c * b;
                    }
                    for i in 0..cols {
                        let (a, b) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * a - s * b;
                        v[(i, q)] = s * a + c * b;
                    }
                }
            }
        }
        let mut sigma: Vec<T> = (0..cols)
            .map(|j| (0..pr).map(|i| u[(i, j)] * u[(i, j)]).sum::<T>().sqrt())
            .collect();
        for (j, s) in sigma.iter().enumerate() {
            if *s > T::zero() {
                for i in 0..pr {
                    u[(i, j)] /= *s;
                }
            }
        }
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|a, b| sigma[*b].partial_cmp(&sigma[*a]).unwrap_or(std::cmp::Ordering::Equal));
        let u = u.select_cols(&order);
        let v = v.select_cols(&order);
        sigma = order.iter().map(|&j| sigma[j]).collect();
        Ok(Self { u, sigma, v, rows })
    }

    pub fn max_singular(&self) -> T {
        self.sigma.first().copied().unwrap_or(T::zero())
    }

    /// Number of singular values above `tol` times the largest one.
    pub fn rank(&self, tol: T) -> usize {
        let cut = tol * self.max_singular();
        if self.max_singular() == T::zero() {
            return 0;
        }
        self.sigma.iter().filter(|s| **s > cut).count()
    }

    /// Orthonormal basis of the right null space as column vectors.
    pub fn null_space(&self, tol: T) -> Vec<Vec<T>> {
        let r = self.rank(tol);
        (r..self.v.cols()).map(|j| self.v.column(j)).collect()
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values below `tol` times the largest.
    pub fn solve(&self, b: &[T], tol: T) -> Result<Vec<T>, NumError> {
        if b.len() != self.rows {
            return Err(NumError::dim(
                "lstsq",
                format!("rhs of length {} for {} rows", b.len(), self.rows),
            ));
        }
        let cols = self.v.cols();
        let mut x = vec![T::zero(); cols];
        let r = self.rank(tol);
        for k in 0..r {
            let coef: T = (0..self.rows).map(|i| self.u[(i, k)] * b[i]).sum::<T>() / self.sigma[k];
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += coef * self.v[(i, k)];
            }
        }
        Ok(x)
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(m: &DenseMatrix<T>) -> Result<Vec<T>, NumError> {
    Ok(Svd::new(m)?.sigma)
}

/// Numerical rank relative to the largest singular value.
pub fn rank_tol<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<usize, NumError> {
    if tol <= T::zero() {
        return Err(NumError::InvalidArgument("rank tolerance must be positive".into()));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0);
    }
    Ok(Svd::new(m)?.rank(tol))
}

/// Orthonormal basis of `{x : m x = 0}`.
pub fn null_space<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<Vec<Vec<T>>, NumError> {
    if tol <= T::zero() {
        return Err(NumError::InvalidArgument("null-space tolerance must be positive".into()));
    }
    if m.cols() == 0 {
        return Ok(Vec::new());
    }
    if m.rows() == 0 {
        return Ok((0..m.cols()).map(|j| DenseMatrix::<T>::identity(m.cols()).column(j)).collect());
    }
    Ok(Svd::new(m)?.null_space(tol))
}

/// Orthonormal basis of `{w : wᵀ m = 0}`.
pub fn left_nullspace<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<Vec<Vec<T>>, NumError> {
    null_space(&m.transpose(), tol)
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn lstsq<T: Scalar>(m: &DenseMatrix<T>, b: &[T], tol: T) -> Result<Vec<T>, NumError> {
    Svd::new(m)?.solve(b, tol)
}
