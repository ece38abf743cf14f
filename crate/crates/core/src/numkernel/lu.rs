use super::{DenseMatrix, NumError};
use crate::Scalar;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(m: &DenseMatrix<T>) -> Result<Self, NumError> {
        if !m.is_square() {
            return Err(NumError::dim("lu", format!("matrix is {}x{}", m.rows(), m.cols())));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let (mut piv, mut best) = (k, lu[(k, k)].abs());
            for i in k + 1..n {
                if lu[(i, k)].abs() > best {
                    best = lu[(i, k)].abs();
                    piv = i;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let d = f * lu[(k, j)];
                    lu[(i, j)] -= d;
                }
            }
        }
        Ok(Self { lu, perm, sign, singular })
    }

    /// True when a zero pivot was met.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> T {
        if self.singular {
            return T::zero();
        }
        (0..self.lu.rows()).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, NumError> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(NumError::dim("lu solve", format!("rhs of length {} for {n} rows", b.len())));
        }
        if self.singular {
            return Err(NumError::Singular);
        }
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let d = self.lu[(i, j)] * y[j];
                y[i] -= d;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let d = self.lu[(i, j)] * y[j];
                y[i] -= d;
            }
            y[i] /= self.lu[(i, i)];
        }
        Ok(y)
    }
}

pub fn determinant<T: Scalar>(m: &DenseMatrix<T>) -> Result<T, NumError> {
    Ok(Lu::new(m)?.determinant())
}

pub fn solve<T: Scalar>(m: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, NumError> {
    Lu::new(m)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_with_pivoting() {
        let m = DenseMatrix::<f64>::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(determinant(&m).unwrap(), -1.0);
        let m = DenseMatrix::<f64>::from_rows(&[[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]);
        assert!((determinant(&m).unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn solve_roundtrip() {
        let m = DenseMatrix::<f64>::from_rows(&[[4.0, -2.0, 1.0], [-2.0, 4.0, -2.0], [1.0, -2.0, 4.0]]);
        let x = [1.0, 2.0, 3.0];
        let b = m.matvec(&x).unwrap();
        let got = solve(&m, &b).unwrap();
        for (g, w) in got.iter().zip(x) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix() {
        let m = DenseMatrix::<f64>::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(determinant(&m).unwrap(), 0.0);
        assert!(matches!(solve(&m, &[1.0, 1.0]), Err(NumError::Singular)));
    }
}
