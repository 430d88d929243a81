//! Scalar arithmetic over C, R and H, the four involutions, realification of
//! complex scalars, and the complex adjoint embedding of quaternion matrices.
//!
//! Quaternions follow the split convention q = (a + bi) + (c + di) j, so that
//! semiconjugation acts as complex conjugation on the first component only.

use crate::mat::{Mat, Scalar};
use crate::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Ground (skew) field of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    C,
    R,
    H,
}

impl Field {
    pub fn label(self) -> &'static str {
        match self {
            Field::C => "C",
            Field::R => "R",
            Field::H => "H",
        }
    }
}

/// The involution a -> ã carried by the scalar product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Involution {
    Identity,
    ComplexConj,
    QuatConj,
    QuatSemiconj,
}

impl Involution {
    pub fn label(self) -> &'static str {
        match self {
            Involution::Identity => "identity",
            Involution::ComplexConj => "conj",
            Involution::QuatConj => "quatconj",
            Involution::QuatSemiconj => "quatsemiconj",
        }
    }

    /// Legal field/involution combinations.
    pub fn legal_for(self, field: Field) -> bool {
        matches!(
            (field, self),
            (Field::R, Involution::Identity)
                | (Field::C, Involution::Identity)
                | (Field::C, Involution::ComplexConj)
                | (Field::H, Involution::QuatConj)
                | (Field::H, Involution::QuatSemiconj)
        )
    }
}

/// Quaternion a + bi + cj + dk with f64 components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub fn from_real(a: f64) -> Self {
        Quaternion::new(a, 0.0, 0.0, 0.0)
    }

    pub fn from_complex(z: C64) -> Self {
        Quaternion::new(z.re, z.im, 0.0, 0.0)
    }

    /// Split q = z1 + z2 j into its complex components (z1, z2).
    pub fn complex_parts(self) -> (C64, C64) {
        (C64::new(self.a, self.b), C64::new(self.c, self.d))
    }

    pub fn from_complex_parts(z1: C64, z2: C64) -> Self {
        Quaternion::new(z1.re, z1.im, z2.re, z2.im)
    }

    /// Quaternion conjugation: a - bi - cj - dk.
    pub fn conj(self) -> Self {
        Quaternion::new(self.a, -self.b, -self.c, -self.d)
    }

    /// Quaternion semiconjugation: a - bi + cj + dk.
    pub fn semiconj(self) -> Self {
        Quaternion::new(self.a, -self.b, self.c, self.d)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inv(self) -> Self {
        let n = self.norm_sqr();
        let c = self.conj();
        Quaternion::new(c.a / n, c.b / n, c.c / n, c.d / n)
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// True when the j, k components are negligible relative to `scale`.
    pub fn is_complex_within(self, tol: f64) -> bool {
        self.c.abs() <= tol && self.d.abs() <= tol
    }
}

impl std::ops::Add for Quaternion {
    type Output = Quaternion;
    fn add(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.a + r.a, self.b + r.b, self.c + r.c, self.d + r.d)
    }
}

impl std::ops::Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.a - r.a, self.b - r.b, self.c - r.c, self.d - r.d)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, r: Quaternion) -> Quaternion {
        // i^2 = j^2 = k^2 = ijk = -1
        Quaternion::new(
            self.a * r.a - self.b * r.b - self.c * r.c - self.d * r.d,
            self.a * r.b + self.b * r.a + self.c * r.d - self.d * r.c,
            self.a * r.c - self.b * r.d + self.c * r.a + self.d * r.b,
            self.a * r.d + self.b * r.c - self.c * r.b + self.d * r.a,
        )
    }
}

impl Scalar for Quaternion {
    fn zero() -> Self {
        Quaternion::ZERO
    }
    fn one() -> Self {
        Quaternion::ONE
    }
    fn from_f64(x: f64) -> Self {
        Quaternion::from_real(x)
    }
    fn norm_sqr(&self) -> f64 {
        Quaternion::norm_sqr(*self)
    }
    fn inv(&self) -> Self {
        Quaternion::inv(*self)
    }
    fn scale(&self, s: f64) -> Self {
        Quaternion::scale(*self, s)
    }
    fn involve(&self, inv: Involution) -> Self {
        match inv {
            Involution::Identity => *self,
            // restriction of either quaternion involution to C is conjugation
            Involution::ComplexConj => Quaternion::new(self.a, -self.b, self.c, self.d),
            Involution::QuatConj => self.conj(),
            Involution::QuatSemiconj => self.semiconj(),
        }
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn norm_sqr(&self) -> f64 {
        num_complex::Complex::norm_sqr(self)
    }
    fn inv(&self) -> Self {
        num_complex::Complex::inv(self)
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn involve(&self, inv: Involution) -> Self {
        match inv {
            Involution::Identity => *self,
            // both quaternion involutions restrict to conjugation on C
            _ => self.conj(),
        }
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn norm_sqr(&self) -> f64 {
        self * self
    }
    fn inv(&self) -> Self {
        1.0 / self
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn involve(&self, _inv: Involution) -> Self {
        *self
    }
}

/// Apply the involution to a scalar, rejecting illegal field/involution pairs.
pub fn involve_checked<T: Scalar>(x: T, field: Field, inv: Involution) -> Result<T> {
    if !inv.legal_for(field) {
        return Err(Error::Context(format!(
            "involution {} is not defined over {}",
            inv.label(),
            field.label()
        )));
    }
    Ok(x.involve(inv))
}

/// A^st = Ã^T: apply the involution entrywise, then transpose.
pub fn st_transpose<T: Scalar>(m: &Mat<T>, inv: Involution) -> Mat<T> {
    m.st(inv)
}

/// Realification of a complex scalar: a + bi -> [[a, -b], [b, a]].
pub fn realify(z: C64) -> Mat<f64> {
    Mat::from_rows(&[vec![z.re, -z.im], vec![z.im, z.re]])
}

/// Complex adjoint embedding of a quaternion matrix.
///
/// With Q = Z1 + Z2 j the image is the 2n x 2m block matrix
/// [[Z1, Z2], [-conj(Z2), conj(Z1)]]; it is unital and multiplicative.
pub fn adjoint_embed(q: &Mat<Quaternion>) -> Mat<C64> {
    let (n, m) = (q.rows(), q.cols());
    let mut out = Mat::zeros(2 * n, 2 * m);
    for i in 0..n {
        for j in 0..m {
            let (z1, z2) = q[(i, j)].complex_parts();
            out[(i, j)] = z1;
            out[(i, j + m)] = z2;
            out[(i + n, j)] = -z2.conj();
            out[(i + n, j + m)] = z1.conj();
        }
    }
    out
}

/// Inverse of the column map underlying [`adjoint_embed`]: a vector
/// x in C^{2n} pulls back to v in H^n with x = (v1, -conj(v2)).
pub fn pull_back_column(x: &[C64]) -> Vec<Quaternion> {
    let n = x.len() / 2;
    (0..n)
        .map(|i| Quaternion::from_complex_parts(x[i], -x[n + i].conj()))
        .collect()
}

/// Pull every column of a 2n x p complex matrix back to H^n.
pub fn pull_back_columns(x: &Mat<C64>) -> Mat<Quaternion> {
    let n = x.rows() / 2;
    let p = x.cols();
    let mut out = Mat::zeros(n, p);
    for j in 0..p {
        let col: Vec<C64> = (0..x.rows()).map(|i| x[(i, j)]).collect();
        let v = pull_back_column(&col);
        for i in 0..n {
            out[(i, j)] = v[i];
        }
    }
    out
}

/// View a real matrix as complex.
pub fn complexify(m: &Mat<f64>) -> Mat<C64> {
    m.map(|x| C64::new(*x, 0.0))
}

/// Take the real part of a complex matrix; the imaginary part must be noise.
pub fn realpart_checked(m: &Mat<C64>, tol: f64) -> Result<Mat<f64>> {
    let scale = m.frobenius().max(1.0);
    let mut imag = 0.0f64;
    for v in m.iter() {
        imag = imag.max(v.im.abs());
    }
    if imag > tol * scale {
        return Err(Error::Shape(format!(
            "matrix expected real but has imaginary residue {imag:.3e}"
        )));
    }
    Ok(m.map(|x| x.re))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn approx(x: Quaternion, y: Quaternion) -> bool {
        (x - y).abs() < 1e-12
    }

    #[test]
    fn quaternion_units() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * j, k);
        assert_eq!(j * i, -k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(i * i, -Quaternion::ONE);
        assert_eq!(j * j, -Quaternion::ONE);
        assert_eq!(k * k, -Quaternion::ONE);
        assert_eq!(i * j * k, -Quaternion::ONE);
    }

    #[test]
    fn norm_is_q_times_conj() {
        let x = q(1.0, -2.0, 0.5, 3.0);
        let p = x * x.conj();
        assert!((p.a - x.norm_sqr()).abs() < 1e-12);
        assert!(p.b.abs() + p.c.abs() + p.d.abs() < 1e-12);
    }

    #[test]
    fn involutions_fix_reals_and_flip_units() {
        // (yyb) and (ybb) on i + j
        let x = Quaternion::I + Quaternion::J;
        assert_eq!(x.conj(), q(0.0, -1.0, -1.0, 0.0));
        assert_eq!(x.semiconj(), q(0.0, -1.0, 1.0, 0.0));
        let five = Quaternion::from_real(5.0);
        for inv in [
            Involution::Identity,
            Involution::ComplexConj,
            Involution::QuatConj,
            Involution::QuatSemiconj,
        ] {
            assert_eq!(five.involve(inv), five);
        }
    }

    #[test]
    fn involutions_are_antimultiplicative_involutions() {
        let xs = [
            q(1.0, 2.0, -1.0, 0.5),
            q(-0.3, 0.0, 2.0, 1.0),
            q(0.0, 1.0, 1.0, 1.0),
        ];
        for inv in [Involution::QuatConj, Involution::QuatSemiconj] {
            for &x in &xs {
                assert!(approx(x.involve(inv).involve(inv), x));
                for &y in &xs {
                    let lhs = (x * y).involve(inv);
                    let rhs = y.involve(inv) * x.involve(inv);
                    assert!(approx(lhs, rhs), "{inv:?} not antimultiplicative");
                }
            }
        }
    }

    #[test]
    fn involve_checked_rejects_illegal_combo() {
        let r = involve_checked(1.0f64, Field::R, Involution::ComplexConj);
        assert!(matches!(r, Err(Error::Context(_))));
    }

    #[test]
    fn st_transpose_examples() {
        // [[i]] under conjugation
        let m = Mat::from_rows(&[vec![C64::new(0.0, 1.0)]]);
        let t = st_transpose(&m, Involution::ComplexConj);
        assert_eq!(t[(0, 0)], C64::new(0.0, -1.0));

        // plain transpose under the identity involution
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        let t = st_transpose(&m, Involution::Identity);
        assert_eq!(t, Mat::from_rows(&[vec![0.0, 2.0], vec![1.0, 0.0]]));

        // [[j, k], [0, i]] under quaternion conjugation, then transpose
        let m = Mat::from_rows(&[
            vec![Quaternion::J, Quaternion::K],
            vec![Quaternion::ZERO, Quaternion::I],
        ]);
        let t = st_transpose(&m, Involution::QuatConj);
        let want = Mat::from_rows(&[
            vec![-Quaternion::J, Quaternion::ZERO],
            vec![-Quaternion::K, -Quaternion::I],
        ]);
        assert_eq!(t, want);
        // (MN)^st = N^st M^st on a random-ish product
        let a = Mat::from_rows(&[
            vec![q(1.0, 2.0, 0.0, -1.0), q(0.5, 0.0, 1.0, 0.0)],
            vec![q(0.0, 1.0, 0.0, 0.0), q(2.0, -1.0, 0.5, 1.0)],
        ]);
        let b = Mat::from_rows(&[
            vec![q(0.0, 0.0, 1.0, 1.0), q(1.0, 1.0, 0.0, 0.0)],
            vec![q(-1.0, 0.5, 0.0, 2.0), q(0.0, 0.0, 0.0, 1.0)],
        ]);
        let lhs = st_transpose(&a.matmul(&b), Involution::QuatSemiconj);
        let rhs = st_transpose(&b, Involution::QuatSemiconj)
            .matmul(&st_transpose(&a, Involution::QuatSemiconj));
        assert!((lhs.sub(&rhs)).frobenius() < 1e-12);
    }

    #[test]
    fn realify_is_a_ring_homomorphism() {
        assert_eq!(realify(C64::new(1.0, 0.0)), Mat::identity(2));
        assert_eq!(
            realify(C64::new(0.0, 1.0)),
            Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]])
        );
        let z = C64::new(2.0, 1.0);
        let lhs = realify(z * z);
        let rhs = realify(z).matmul(&realify(z));
        assert!(lhs.sub(&rhs).frobenius() < 1e-12);
        let w = C64::new(-0.7, 0.3);
        let lhs = realify(z * w);
        let rhs = realify(z).matmul(&realify(w));
        assert!(lhs.sub(&rhs).frobenius() < 1e-12);
    }

    #[test]
    fn adjoint_embed_examples() {
        let one = Mat::from_rows(&[vec![Quaternion::ONE]]);
        assert_eq!(adjoint_embed(&one), Mat::identity(2));
        let j = Mat::from_rows(&[vec![Quaternion::J]]);
        let want = Mat::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0)],
        ]);
        assert_eq!(adjoint_embed(&j), want);
    }

    #[test]
    fn adjoint_embed_is_multiplicative() {
        let a = Mat::from_rows(&[
            vec![q(1.0, 0.5, -1.0, 0.0), q(0.0, 2.0, 0.0, 1.0)],
            vec![q(-1.0, 0.0, 0.0, 0.5), q(1.0, 1.0, 1.0, 1.0)],
        ]);
        let b = Mat::from_rows(&[
            vec![q(0.0, 1.0, 0.0, 0.0), q(2.0, 0.0, -0.5, 0.0)],
            vec![q(1.0, 0.0, 1.0, 0.0), q(0.0, 0.0, 0.0, -1.0)],
        ]);
        let lhs = adjoint_embed(&a.matmul(&b));
        let rhs = adjoint_embed(&a).matmul(&adjoint_embed(&b));
        assert!(lhs.sub(&rhs).frobenius() < 1e-12);
    }

    #[test]
    fn embeddings_commute_with_inversion() {
        let z = C64::new(0.7, -1.3);
        let lhs = realify(1.0 / z);
        let rhs = realify(z).inverse().unwrap();
        assert!(lhs.sub(&rhs).frobenius() < 1e-12);

        let q = Mat::from_rows(&[
            vec![Quaternion::new(1.0, 0.5, -0.25, 2.0), Quaternion::J],
            vec![Quaternion::I, Quaternion::new(0.0, 0.0, 1.0, -1.0)],
        ]);
        let lhs = adjoint_embed(&q.inverse().unwrap());
        let rhs = adjoint_embed(&q).inverse().unwrap();
        assert!(lhs.sub(&rhs).frobenius() < 1e-12);
    }

    #[test]
    fn pull_back_inverts_embedding_columns() {
        let a = Mat::from_rows(&[
            vec![q(1.0, 0.5, -1.0, 0.25)],
            vec![q(0.0, -2.0, 0.5, 1.0)],
        ]);
        let e = adjoint_embed(&a);
        let col: Vec<C64> = (0..4).map(|i| e[(i, 0)]).collect();
        let v = pull_back_column(&col);
        assert!(approx(v[0], a[(0, 0)]));
        assert!(approx(v[1], a[(1, 0)]));
    }
}
