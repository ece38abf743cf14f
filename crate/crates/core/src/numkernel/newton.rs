use super::{fd_jacobian, norm2, norm_inf, DenseMatrix, NumError, Svd};
use crate::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions<T> {
    pub max_iter: usize,
    /// Convergence threshold on `‖f(x)‖∞`.
    pub tol: T,
    /// Base finite-difference step when no analytic Jacobian is supplied.
    pub fd_step: T,
    /// Relative singular-value cutoff for the pseudo-inverse step.
    pub rank_tol: T,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 60,
            tol: T::lit(1e-12),
            fd_step: T::lit(1e-6),
            rank_tol: T::lit(1e-12),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub residual: T,
}

/// Newton iteration with a central-difference Jacobian.
pub fn newton_root<T: Scalar, F>(f: F, x0: &[T], opts: &NewtonOptions<T>) -> Result<NewtonReport<T>, NumError>
where
    F: Fn(&[T]) -> Vec<T>,
{
    let h = opts.fd_step;
    newton_root_with_jacobian(&f, |x: &[T]| fd_jacobian(&f, x, h), x0, opts)
}

/// Newton iteration with a caller-supplied Jacobian.
///
/// Steps are minimum-norm least-squares solutions of `J dx = −f`, so
/// rectangular or rank-deficient Jacobians are accepted. A backtracking
/// line search on `‖f‖₂` guards against overshooting.
pub fn newton_root_with_jacobian<T: Scalar, F, J>(
    f: F,
    jac: J,
    x0: &[T],
    opts: &NewtonOptions<T>,
) -> Result<NewtonReport<T>, NumError>
where
    F: Fn(&[T]) -> Vec<T>,
    J: Fn(&[T]) -> DenseMatrix<T>,
{
    let to_f64 = |x: &[T]| x.iter().map(|v| v.as_f64()).collect::<Vec<_>>();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut iterations = 0;
    loop {
        let res = norm_inf(&fx);
        if !res.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(NumError::NoConvergence {
                last_iterate: to_f64(&x),
                iterations,
                residual: f64::INFINITY,
            });
        }
        if res <= opts.tol {
            return Ok(NewtonReport { x, iterations, residual: res });
        }
        if iterations == opts.max_iter {
            return Err(NumError::NoConvergence {
                last_iterate: to_f64(&x),
                iterations,
                residual: res.as_f64(),
            });
        }
        iterations += 1;
        let j = jac(&x);
        let rhs: Vec<T> = fx.iter().map(|v| -*v).collect();
        let dx = Svd::new(&j)?.solve(&rhs, opts.rank_tol)?;
        let base = norm2(&fx);
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let xt: Vec<T> = x.iter().zip(&dx).map(|(a, b)| *a + lambda * *b).collect();
            let ft = f(&xt);
            let nt = norm2(&ft);
            if nt.is_finite() && nt < base {
                accepted = Some((xt, ft));
                break;
            }
            lambda *= T::half();
        }
        match accepted {
            Some((xt, ft)) => {
                x = xt;
                fx = ft;
            }
            None => {
                return Err(NumError::NoConvergence {
                    last_iterate: to_f64(&x),
                    iterations,
                    residual: res.as_f64(),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let r = newton_root(|x: &[f64]| vec![x[0] * x[0] - 4.0], &[3.0], &NewtonOptions::default()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-12);
        assert!(r.iterations > 0);
    }

    #[test]
    fn cubic_equilibrium() {
        let r = newton_root(|x: &[f64]| vec![x[0] * (1.0 - x[0] * x[0])], &[0.8], &NewtonOptions::default())
            .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_root_reports_last_iterate() {
        let opts = NewtonOptions { max_iter: 5, ..NewtonOptions::default() };
        match newton_root(|x: &[f64]| vec![x[0] * x[0] + 1.0], &[0.5], &opts) {
            Err(NumError::NoConvergence { last_iterate, .. }) => assert_eq!(last_iterate.len(), 1),
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn underdetermined_system() {
        let r = newton_root(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 1.0], &[2.0, 1.0], &NewtonOptions::default())
            .unwrap();
        assert!((r.x[0].hypot(r.x[1]) - 1.0).abs() < 1e-12);
    }
}
