//! Small dense matrices over f64, C64 and Quaternion, with the handful of
//! factorizations the canonicalization needs: Gaussian solves (valid over a
//! division ring), column-pivoted orthonormalization for rank decisions,
//! a Hermitian Jacobi eigensolver and one-sided Jacobi singular values.

use crate::scalars::{Involution, C64};

/// Entry type of [`Mat`]: a field or skew field element.
///
/// Multiplication need not be commutative; every routine in this module
/// keeps left and right factors in order.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn norm_sqr(&self) -> f64;
    fn inv(&self) -> Self;
    fn scale(&self, s: f64) -> Self;
    fn involve(&self, inv: Involution) -> Self;

    fn abs(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:?} ", self.data[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Involution-transpose M^st.
    pub fn st(&self, inv: Involution) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].involve(inv))
    }

    pub fn matmul(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn neg(&self) -> Mat<T> {
        self.map(|x| -*x)
    }

    pub fn scale(&self, s: f64) -> Mat<T> {
        self.map(|x| x.scale(s))
    }

    /// Multiply every entry on the left by `s`.
    pub fn scalar_mul_left(&self, s: T) -> Mat<T> {
        self.map(|x| s * *x)
    }

    /// Multiply every entry on the right by `s` (matters over H).
    pub fn scalar_mul_right(&self, s: T) -> Mat<T> {
        self.map(|x| *x * s)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .fold(0.0f64, f64::max)
            .sqrt()
    }

    pub fn trace(&self) -> T {
        let mut t = T::zero();
        for i in 0..self.rows.min(self.cols) {
            t = t + self[(i, i)];
        }
        t
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    pub fn from_columns(rows: usize, cols: &[Vec<T>]) -> Mat<T> {
        let mut m = Mat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        m
    }

    /// Stack two matrices side by side.
    pub fn hstack(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.rows, rhs.rows);
        Mat::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                rhs[(i, j - self.cols)]
            }
        })
    }

    /// Direct sum diag(self, rhs).
    pub fn direct_sum(&self, rhs: &Mat<T>) -> Mat<T> {
        let (r1, c1) = (self.rows, self.cols);
        Mat::from_fn(r1 + rhs.rows, c1 + rhs.cols, |i, j| {
            if i < r1 && j < c1 {
                self[(i, j)]
            } else if i >= r1 && j >= c1 {
                rhs[(i - r1, j - c1)]
            } else {
                T::zero()
            }
        })
    }

    /// Solve A X = B by Gaussian elimination with partial pivoting.
    /// Row operations act by left multiplication, so the routine is valid
    /// over a noncommutative division ring.
    pub fn solve(&self, b: &Mat<T>) -> Option<Mat<T>> {
        assert!(self.is_square());
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = a.max_abs().max(1e-300);
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm_sqr();
            for i in k + 1..n {
                let v = a[(i, k)].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.sqrt() <= 1e-14 * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(k * x.cols + j, p * x.cols + j);
                }
            }
            let piv_inv = a[(k, k)].inv();
            for i in k + 1..n {
                let factor = a[(i, k)] * piv_inv;
                if factor == T::zero() {
                    continue;
                }
                for j in k..n {
                    let t = factor * a[(k, j)];
                    a[(i, j)] = a[(i, j)] - t;
                }
                for j in 0..x.cols {
                    let t = factor * x[(k, j)];
                    x[(i, j)] = x[(i, j)] - t;
                }
            }
        }
        // back substitution: x_k = a_kk^-1 (b_k - sum_j a_kj x_j)
        for k in (0..n).rev() {
            let piv_inv = a[(k, k)].inv();
            for j in 0..x.cols {
                let mut acc = x[(k, j)];
                for l in k + 1..n {
                    acc = acc - a[(k, l)] * x[(l, j)];
                }
                x[(k, j)] = piv_inv * acc;
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        self.solve(&Mat::identity(self.rows))
    }

    /// Integer matrix power; negative exponents go through the inverse.
    pub fn pow_int(&self, k: i64) -> Option<Mat<T>> {
        assert!(self.is_square());
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Mat::identity(self.rows);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.matmul(&sq);
            }
        }
        Some(acc)
    }
}

/// Conjugate inner product <u, v> = sum conj(u_i) v_i. Quaternion
/// conjugation restricts to complex conjugation and to the identity on R,
/// so this is positive definite over f64, C64 and Quaternion alike.
fn dot_conj<T: Scalar>(u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (a, b) in u.iter().zip(v) {
        acc = acc + a.involve(Involution::QuatConj) * *b;
    }
    acc
}

fn norm2<T: Scalar>(u: &[T]) -> f64 {
    u.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Column-pivoted modified Gram-Schmidt. Returns an orthonormal basis of the
/// column space and the numerical rank at relative threshold `rel_eps`.
///
/// Pivoting prefers the earliest column on ties, so an exactly orthogonal
/// input comes back unchanged up to scaling.
pub fn col_orthonormal_basis<T: Scalar>(a: &Mat<T>, rel_eps: f64) -> (Mat<T>, usize) {
    let mut cols: Vec<Vec<T>> = (0..a.cols()).map(|j| a.column(j)).collect();
    let mut alive: Vec<usize> = (0..cols.len()).collect();
    let scale = cols.iter().map(|c| norm2(c)).fold(0.0f64, f64::max);
    let mut q: Vec<Vec<T>> = Vec::new();
    if scale == 0.0 {
        return (Mat::from_columns(a.rows(), &q), 0);
    }
    while !alive.is_empty() {
        let (mut best_pos, mut best) = (0usize, -1.0f64);
        for (pos, &j) in alive.iter().enumerate() {
            let n = norm2(&cols[j]);
            if n > best * (1.0 + 1e-12) {
                best = n;
                best_pos = pos;
            }
        }
        if best <= rel_eps * scale {
            break;
        }
        let j = alive.remove(best_pos);
        // re-orthogonalize once for stability
        for _ in 0..2 {
            for qi in &q {
                let c = dot_conj(qi, &cols[j]);
                let col = &mut cols[j];
                for (x, y) in col.iter_mut().zip(qi) {
                    *x = *x - *y * c;
                }
            }
        }
        let n = norm2(&cols[j]);
        if n <= rel_eps * scale {
            continue;
        }
        let inv = 1.0 / n;
        let unit: Vec<T> = cols[j].iter().map(|x| x.scale(inv)).collect();
        for &l in &alive {
            let c = dot_conj(&unit, &cols[l]);
            let col = &mut cols[l];
            for (x, y) in col.iter_mut().zip(&unit) {
                *x = *x - *y * c;
            }
        }
        q.push(unit);
    }
    let rank = q.len();
    (Mat::from_columns(a.rows(), &q), rank)
}

/// Numerical rank at relative threshold `rel_eps`.
pub fn rank<T: Scalar>(a: &Mat<T>, rel_eps: f64) -> usize {
    col_orthonormal_basis(a, rel_eps).1
}

/// Eigendecomposition of a Hermitian complex matrix by cyclic Jacobi.
/// Returns (eigenvalues, unitary V) with A = V diag(w) V^*.
pub fn hermitian_eig(a: &Mat<C64>, max_sweeps: usize) -> (Vec<f64>, Mat<C64>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut h = a.clone();
    // symmetrize away representation noise
    for i in 0..n {
        for j in 0..n {
            let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            h[(i, j)] = avg;
            h[(j, i)] = avg.conj();
        }
    }
    let mut v: Mat<C64> = Mat::identity(n);
    let scale = h.frobenius().max(1e-300);
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += h[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = h[(p, q)];
                if apq.norm_sqr().sqrt() <= 1e-300 {
                    continue;
                }
                let app = h[(p, p)].re;
                let aqq = h[(q, q)].re;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: [p q] <- [p q] * [[c, s*phase], [-s*conj(phase), c]]
                let (cp, cq) = (C64::new(c, 0.0), C64::new(c, 0.0));
                let sp = phase * s;
                for i in 0..n {
                    let hip = h[(i, p)];
                    let hiq = h[(i, q)];
                    h[(i, p)] = hip * cp - hiq * sp.conj();
                    h[(i, q)] = hip * sp + hiq * cq;
                }
                for jj in 0..n {
                    let hpj = h[(p, jj)];
                    let hqj = h[(q, jj)];
                    h[(p, jj)] = hpj * cp - hqj * sp;
                    h[(q, jj)] = hpj * sp.conj() + hqj * cq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cp - viq * sp.conj();
                    v[(i, q)] = vip * sp + viq * cq;
                }
            }
        }
    }
    let w: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
    (w, v)
}

/// Singular values of a complex matrix by one-sided Jacobi, descending.
pub fn singular_values(a: &Mat<C64>) -> Vec<f64> {
    let m = a.cols();
    let mut u = a.clone();
    let scale = u.frobenius().max(1e-300);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = C64::new(0.0, 0.0);
                for i in 0..u.rows() {
                    let x = u[(i, p)];
                    let y = u[(i, q)];
                    app += x.norm_sqr();
                    aqq += y.norm_sqr();
                    apq += x.conj() * y;
                }
                if apq.norm() <= 1e-15 * (app * aqq).sqrt().max(1e-300 * scale) {
                    continue;
                }
                rotated = true;
                let abs_apq = apq.norm();
                let phase = apq / abs_apq;
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * s;
                for i in 0..u.rows() {
                    let x = u[(i, p)];
                    let y = u[(i, q)];
                    u[(i, p)] = x * c - y * sp.conj();
                    u[(i, q)] = x * sp + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..m)
        .map(|j| (0..u.rows()).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// 2-norm condition number estimate via Jacobi singular values.
pub fn cond2(a: &Mat<C64>) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}
