use super::{norm_inf, DenseMatrix};
use crate::Scalar;

/// Step for coordinate value `x`: `h · max(1, |x|)`.
#[inline]
pub fn fd_step<T: Scalar>(x: T, h: T) -> T {
    h * T::one().max(x.abs())
}

/// Central-difference Jacobian of `f` at `x`. The step for coordinate `i`
/// is `h · max(1, |x_i|)`.
pub fn fd_jacobian<T: Scalar, F>(f: F, x: &[T], h: T) -> DenseMatrix<T>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let n = x.len();
    let mut xp = x.to_vec();
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 0..n {
        // Round the step so that x ± hj is exactly representable.
        let hj = (x[j] + fd_step(x[j], h)) - x[j];
        xp[j] = x[j] + hj;
        let fp = f(&xp);
        xp[j] = x[j] - hj;
        let fm = f(&xp);
        xp[j] = x[j];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (*a - *b) / (T::two() * hj)).collect());
    }
    let m = cols.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(m, n, |i, j| cols[j][i])
}

/// Second directional derivative `(f(x+hv) − 2f(x) + f(x−hv)) / h²` with the
/// step scaled by `max(1, ‖x‖∞)`.
pub fn fd_second_directional<T: Scalar, F>(f: F, x: &[T], v: &[T], h: T) -> Vec<T>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let hs = fd_step(norm_inf(x), h);
    let xp: Vec<T> = x.iter().zip(v).map(|(a, b)| *a + hs * *b).collect();
    let xm: Vec<T> = x.iter().zip(v).map(|(a, b)| *a - hs * *b).collect();
    let (fp, f0, fm) = (f(&xp), f(x), f(&xm));
    fp.iter()
        .zip(&f0)
        .zip(&fm)
        .map(|((p, c), m)| (*p - T::two() * *c + *m) / (hs * hs))
        .collect()
}

/// Mixed derivative `(∂²f/∂x∂μ) v` of a parametrized map by the four-point
/// central stencil. `hx` is scaled by `max(1, ‖x‖∞)`, `hmu` by `max(1, |μ|)`.
pub fn fd_mixed_directional<T: Scalar, F>(f: F, x: &[T], mu: T, v: &[T], hx: T, hmu: T) -> Vec<T>
where
    F: Fn(&[T], T) -> Vec<T>,
{
    let hs = fd_step(norm_inf(x), hx);
    let k = fd_step(mu, hmu);
    let xp: Vec<T> = x.iter().zip(v).map(|(a, b)| *a + hs * *b).collect();
    let xm: Vec<T> = x.iter().zip(v).map(|(a, b)| *a - hs * *b).collect();
    let pp = f(&xp, mu + k);
    let pm = f(&xp, mu - k);
    let mp = f(&xm, mu + k);
    let mm = f(&xm, mu - k);
    let denom = T::lit(4.0) * hs * k;
    (0..pp.len())
        .map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / denom)
        .collect()
}
