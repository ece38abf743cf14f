use std::fmt;

use num_complex::Complex;

use super::{DenseMatrix, NumError};
use crate::Scalar;

/// Largest dimension accepted by [`eigenvalues`].
pub const MAX_EIGEN_DIM: usize = 64;

/// Iterations allowed per eigenvalue before the QR sweep gives up.
const MAX_ITS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a real square matrix, sorted by descending real part and
/// then descending imaginary part.
#[derive(Clone, PartialEq)]
pub struct Spectrum<T> {
    values: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    /// Wraps a list of eigenvalues, sorting it into canonical order.
    pub fn from_values(mut values: Vec<Complex<T>>) -> Self {
        values.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        Self { values }
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.values.iter().map(|c| c.re).collect()
    }

    /// Largest real part, or `-inf` for an empty spectrum.
    pub fn leading_real(&self) -> T {
        self.values.first().map_or(T::neg_infinity(), |c| c.re)
    }

    /// Largest modulus.
    pub fn spectral_radius(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Eigenvalues with modulus at most `tol`.
    pub fn count_zero(&self, tol: T) -> usize {
        self.values.iter().filter(|c| c.norm() <= tol).count()
    }

    /// Eigenvalues with real part above `tol`.
    pub fn count_positive(&self, tol: T) -> usize {
        self.values.iter().filter(|c| c.re > tol).count()
    }

    /// Eigenvalues with real part below `-tol`.
    pub fn count_negative(&self, tol: T) -> usize {
        self.values.iter().filter(|c| c.re < -tol).count()
    }

    /// The eigenvalues whose modulus exceeds `tol`, still in canonical order.
    pub fn nonzero(&self, tol: T) -> Spectrum<T> {
        Spectrum {
            values: self.values.iter().copied().filter(|c| c.norm() > tol).collect(),
        }
    }

    /// Checks that every non-real eigenvalue has a partner within `tol` of
    /// its complex conjugate.
    pub fn is_conjugate_paired(&self, tol: T) -> bool {
        let mut used = vec![false; self.values.len()];
        for i in 0..self.values.len() {
            let a = self.values[i];
            if a.im.abs() <= tol || used[i] {
                continue;
            }
            let partner = (0..self.values.len()).find(|&j| {
                j != i && !used[j] && (self.values[j] - a.conj()).norm() <= tol
            });
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }

    /// Eigenvalues converted to `f64` pairs `(re, im)`.
    pub fn to_f64_pairs(&self) -> Vec<(f64, f64)> {
        self.values.iter().map(|c| (c.re.as_f64(), c.im.as_f64())).collect()
    }
}

impl<T: fmt::Debug> fmt::Debug for Spectrum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.values.iter().map(|c| (&c.re, &c.im)))
            .finish()
    }
}

impl<T: Scalar> fmt::Display for Spectrum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.values.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            let (re, im) = (c.re.as_f64(), c.im.as_f64());
            if im == 0.0 {
                write!(f, "{re:.4}")?;
            } else if im > 0.0 {
                write!(f, "{re:.4}+{im:.4}i")?;
            } else {
                write!(f, "{re:.4}-{:.4}i", -im)?;
            }
        }
        write!(f, ")")
    }
}

/// All eigenvalues of a real square matrix, with algebraic multiplicity.
///
/// The matrix is balanced, reduced to upper Hessenberg form by Householder
/// reflections and then driven to real Schur form with Francis double-shift
/// QR sweeps.
pub fn eigenvalues<T: Scalar>(m: &DenseMatrix<T>) -> Result<Spectrum<T>, NumError> {
    if !m.is_square() {
        return Err(NumError::dim(
            "eigenvalues",
            format!("matrix is {}x{}", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    if n > MAX_EIGEN_DIM {
        return Err(NumError::dim(
            "eigenvalues",
            format!("dimension {n} exceeds {MAX_EIGEN_DIM}"),
        ));
    }
    if !m.is_finite() {
        return Err(NumError::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok(Spectrum { values: Vec::new() });
    }
    // 1-based working copy keeps the QR sweep close to its textbook form.
    let mut a = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }
    balance(&mut a, n);
    hessenberg(&mut a, n);
    let (wr, wi) = hqr(&mut a, n)?;
    let values = wr
        .into_iter()
        .zip(wi)
        .skip(1)
        .map(|(re, im)| Complex::new(re, im))
        .collect();
    Ok(Spectrum::from_values(values))
}

fn balance<T: Scalar>(a: &mut [Vec<T>], n: usize) {
    let radix = T::two();
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let ginv = T::one() / f;
                    for j in 1..=n {
                        a[i][j] *= ginv;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Scalar>(a: &mut [Vec<T>], n: usize) {
    if n < 3 {
        return;
    }
    for k in 1..=n - 2 {
        let len = n - k;
        let mut v: Vec<T> = (0..len).map(|t| a[k + 1 + t][k]).collect();
        let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if v[0] > T::zero() { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // Left application: rows k+1..n.
        for j in 1..=n {
            let dotp: T = (0..len).map(|t| v[t] * a[k + 1 + t][j]).sum();
            let s = T::two() * dotp;
            for t in 0..len {
                a[k + 1 + t][j] -= s * v[t];
            }
        }
        // Right application: columns k+1..n.
        for i in 1..=n {
            let dotp: T = (0..len).map(|t| a[i][k + 1 + t] * v[t]).sum();
            let s = T::two() * dotp;
            for t in 0..len {
                a[i][k + 1 + t] -= s * v[t];
            }
        }
        a[k + 1][k] = alpha;
        for i in k + 2..=n {
            a[i][k] = T::zero();
        }
    }
}

#[inline]
fn sign<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (1-based storage).
#[allow(clippy::many_single_char_names)]
fn hqr<T: Scalar>(a: &mut [Vec<T>], n: usize) -> Result<(Vec<T>, Vec<T>), NumError> {
    let zero = T::zero();
    let mut wr = vec![zero; n + 1];
    let mut wi = vec![zero; n + 1];
    let mut anorm = zero;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = zero;
    let mut total_its = 0usize;
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == zero {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = zero;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = zero;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = T::half() * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= zero {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != zero {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = zero;
                    wi[nn] = zero;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                if nn < 2 {
                    nn = 0;
                } else {
                    nn -= 2;
                }
                break;
            }
            if its == MAX_ITS_PER_EIGENVALUE {
                return Err(NumError::Convergence {
                    op: "eigenvalues",
                    iterations: total_its,
                });
            }
            if its > 0 && its.is_multiple_of(10) {
                // Exceptional shift.
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            total_its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            let mut z;
            loop {
                z = a[m][m];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i][i - 2] = zero;
                if i != m + 2 {
                    a[i][i - 3] = zero;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = zero;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != zero {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != zero {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((wr, wi))
}
