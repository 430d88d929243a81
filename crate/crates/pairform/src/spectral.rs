//! Exact eigenvalue bookkeeping on Z/(r^2-1) and numeric eigenspace
//! extraction for diagonalizable matrices whose nonzero spectrum lies in the
//! (r^2-1)-th roots of unity.
//!
//! All numeric work happens on the complex working matrix: a complex input
//! as-is, a real input complexified, a quaternion input adjoint-embedded.

use crate::canon::CaseTag;
use crate::mat::{col_orthonormal_basis, rank, Mat};
use crate::scalars::{pull_back_columns, Field, Quaternion, C64};
use crate::{Error, Result};

/// Exact eigenvalue tag: Zero, or the residue k mod m standing for
/// e^{2 pi i k / m} with m = r^2 - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EigIndex {
    Zero,
    Root(u32),
}

impl EigIndex {
    pub fn is_real_valued(self, m: u32) -> bool {
        match self {
            EigIndex::Zero => true,
            EigIndex::Root(k) => k == 0 || 2 * k == m,
        }
    }

    /// Sort key: Zero first, then residues in increasing order.
    pub fn sort_key(self) -> (u8, u32) {
        match self {
            EigIndex::Zero => (0, 0),
            EigIndex::Root(k) => (1, k),
        }
    }
}

/// m = r^2 - 1. Requires |r| >= 2.
pub fn modulus(r: i64) -> Result<u32> {
    if !(2..=64).contains(&r.unsigned_abs()) {
        return Err(Error::Context(format!(
            "exponent r = {r} out of range (2 <= |r| <= 64)"
        )));
    }
    Ok((r * r - 1) as u32)
}

/// Numeric value of an index: e^{2 pi i k/m}, with the four axis points
/// (1, -1, i, -i) produced exactly.
pub fn value(x: EigIndex, m: u32) -> C64 {
    match x {
        EigIndex::Zero => C64::new(0.0, 0.0),
        EigIndex::Root(k) => {
            let k = k % m;
            if k == 0 {
                C64::new(1.0, 0.0)
            } else if 2 * k == m {
                C64::new(-1.0, 0.0)
            } else if 4 * k == m {
                C64::new(0.0, 1.0)
            } else if 4 * k == 3 * m {
                C64::new(0.0, -1.0)
            } else {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
                C64::new(theta.cos(), theta.sin())
            }
        }
    }
}

fn root_mod(k: i64, m: u32) -> u32 {
    (k.rem_euclid(m as i64)) as u32
}

/// lambda -> lambda^r on indices. Zero is rejected for negative r.
pub fn idx_pow_r(x: EigIndex, r: i64, m: u32) -> Result<EigIndex> {
    match x {
        EigIndex::Zero => {
            if r < 0 {
                Err(Error::Singular(
                    "zero eigenvalue has no negative power".into(),
                ))
            } else {
                Ok(EigIndex::Zero)
            }
        }
        EigIndex::Root(k) => Ok(EigIndex::Root(root_mod(r * k as i64, m))),
    }
}

/// lambda -> conj(lambda) on indices.
pub fn idx_conj(x: EigIndex, m: u32) -> EigIndex {
    match x {
        EigIndex::Zero => EigIndex::Zero,
        EigIndex::Root(k) => EigIndex::Root(root_mod(-(k as i64), m)),
    }
}

/// The eigenvalue pairing lambda -> lambda^r (bilinear cases) or
/// lambda -> conj(lambda)^r (sesquilinear cases) induced by F.
pub fn pairing_image(x: EigIndex, case: CaseTag, r: i64) -> Result<EigIndex> {
    let m = modulus(r)?;
    let p = idx_pow_r(x, r, m)?;
    if case.sesquilinear() {
        Ok(idx_conj(p, m))
    } else {
        Ok(p)
    }
}

/// Whether F couples the eigenspace of `x` to itself in the given case.
///
/// For the real cases b1/b2 the two subconditions lambda^r = lambda and
/// lambda^r = conj(lambda) matter separately; see [`self_paired_parts`].
pub fn self_paired(x: EigIndex, case: CaseTag, r: i64) -> Result<bool> {
    Ok(pairing_image(x, case, r)? == x)
}

/// (lambda^r = lambda, lambda^r = conj(lambda)) as index identities.
pub fn self_paired_parts(x: EigIndex, r: i64) -> Result<(bool, bool)> {
    let m = modulus(r)?;
    let p = idx_pow_r(x, r, m)?;
    Ok((p == x, p == idx_conj(x, m)))
}

/// Multiset of snapped eigenvalue indices with multiplicities.
///
/// Over R the report is closed under conjugation; over H indices are
/// standardized to the closed upper half-plane and multiplicities count
/// right-H-module dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrumReport {
    pub m: u32,
    pub entries: Vec<(EigIndex, usize)>,
}

impl SpectrumReport {
    pub fn multiplicity(&self, x: EigIndex) -> usize {
        self.entries
            .iter()
            .find(|(y, _)| *y == x)
            .map(|(_, d)| *d)
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|(_, d)| d).sum()
    }
}

/// Snapped spectrum of one working matrix, with cached spectral projectors.
pub struct Spectrum {
    pub field: Field,
    pub r: i64,
    pub m: u32,
    report: SpectrumReport,
    /// Working-space (complex) indices, multiplicities and projectors; over
    /// H these live in the adjoint embedding, keyed by the upper half-plane
    /// value.
    projectors: Vec<(EigIndex, usize, Mat<C64>)>,
}

impl Spectrum {
    pub fn report(&self) -> &SpectrumReport {
        &self.report
    }

    pub fn projector(&self, x: EigIndex) -> Option<&Mat<C64>> {
        self.projectors
            .iter()
            .find(|(y, _, _)| *y == x)
            .map(|(_, _, p)| p)
    }

    /// Multiplicity in the complex working space (over H this is the
    /// embedded multiplicity, not the H-module dimension).
    pub fn working_multiplicity(&self, x: EigIndex) -> Option<usize> {
        self.projectors
            .iter()
            .find(|(y, _, _)| *y == x)
            .map(|(_, d, _)| *d)
    }
}

/// Snap the spectrum of the complex working matrix `a` to the admissible set
/// {0} union mu_{r^2-1}, with geometric multiplicities.
///
/// `a` must already be complexified (field R) or adjoint-embedded (field H).
pub fn snap_spectrum(
    a: &Mat<C64>,
    r: i64,
    field: Field,
    tol: f64,
    eps_rank: f64,
) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::Shape("snap_spectrum needs a square matrix".into()));
    }
    let m = modulus(r)?;
    let n = a.rows();
    if n == 0 {
        return Err(Error::Shape("empty matrix".into()));
    }
    let scale = a.frobenius().max(1.0);

    // precondition: A^{r^2} = A, a consequence of the defining relation
    let ar2 = a.pow_int(r * r).ok_or_else(|| {
        Error::Singular("matrix is singular but r < 0 requires nonsingular A".into())
    })?;
    let pre = ar2.sub(a).frobenius() / scale.max(ar2.frobenius());
    if pre > tol {
        return Err(Error::Snap(format!(
            "A^(r^2) differs from A by relative residual {pre:.3e} (> {tol:.1e}); \
             spectrum cannot lie in the admissible set"
        )));
    }

    let rank_a = rank(a, eps_rank);
    let kernel_dim = n - rank_a;
    if r < 0 && kernel_dim > 0 {
        return Err(Error::Singular(
            "A is singular; the relation with r < 0 forces A nonsingular".into(),
        ));
    }

    // E = A^m projects onto the nonzero part for valid inputs
    let e = a.pow_int(m as i64).unwrap();
    let idem = e.matmul(&e).sub(&e).frobenius() / e.frobenius().max(1.0);
    if idem > tol * 10.0 {
        return Err(Error::Snap(format!(
            "A^m is not idempotent (relative defect {idem:.3e}); some eigenvalue \
             lies off the admissible root-of-unity set"
        )));
    }
    if rank(&e, eps_rank) != rank_a {
        return Err(Error::NotDiagonalizable(
            "rank A^m < rank A: nilpotent structure at the zero eigenvalue".into(),
        ));
    }

    // multiplicities of the m-th roots of unity from the trace DFT of A^{m+j}
    let mut traces = Vec::with_capacity(m as usize);
    let mut power = e.clone();
    traces.push(power.trace());
    for _ in 1..m {
        power = power.matmul(a);
        traces.push(power.trace());
    }
    let mut observed: Vec<(EigIndex, usize)> = Vec::new();
    for k in 0..m {
        let mut acc = C64::new(0.0, 0.0);
        for (j, t) in traces.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / (m as f64);
            acc += C64::new(theta.cos(), theta.sin()) * t;
        }
        acc /= m as f64;
        let mult = acc.re.round();
        if (acc - C64::new(mult, 0.0)).norm() > 0.2 {
            return Err(Error::Snap(format!(
                "non-integer multiplicity {acc} at root index {k}"
            )));
        }
        if mult < -0.5 {
            return Err(Error::Snap(format!(
                "negative multiplicity {acc} at root index {k}"
            )));
        }
        if mult >= 0.5 {
            observed.push((EigIndex::Root(k), mult as usize));
        }
    }
    if kernel_dim > 0 {
        observed.insert(0, (EigIndex::Zero, kernel_dim));
    }
    let total: usize = observed.iter().map(|(_, d)| d).sum();
    if total != n {
        return Err(Error::Snap(format!(
            "snapped multiplicities sum to {total}, dimension is {n}"
        )));
    }

    // Lagrange projectors over the observed values
    let values: Vec<(EigIndex, C64)> = observed.iter().map(|(x, _)| (*x, value(*x, m))).collect();
    let mut projectors = Vec::new();
    let mut recon = Mat::zeros(n, n);
    for (x, vx) in &values {
        let mut p = Mat::identity(n);
        for (y, vy) in &values {
            if y == x {
                continue;
            }
            let shifted = a.sub(&Mat::identity(n).scalar_mul_left(*vy));
            p = p.matmul(&shifted).scalar_mul_left((vx - vy).inv());
        }
        let d = observed.iter().find(|(z, _)| z == x).unwrap().1;
        let idemp = p.matmul(&p).sub(&p).frobenius() / p.frobenius().max(1.0);
        if idemp > 100.0 * tol {
            return Err(Error::NotDiagonalizable(format!(
                "spectral projector at {x:?} has idempotency defect {idemp:.3e}"
            )));
        }
        let rk = rank(&p, eps_rank);
        if rk != d {
            return Err(Error::NotDiagonalizable(format!(
                "geometric multiplicity {rk} at {x:?} differs from algebraic {d}"
            )));
        }
        recon = recon.add(&p.scalar_mul_left(*vx));
        projectors.push((*x, d, p));
    }
    let rec_resid = recon.sub(a).frobenius() / scale;
    if rec_resid > 10.0 * tol {
        return Err(Error::NotDiagonalizable(format!(
            "eigen-reconstruction residual {rec_resid:.3e} exceeds tolerance"
        )));
    }

    // field-specific standardization of the report
    let report = match field {
        Field::C => SpectrumReport {
            m,
            entries: observed,
        },
        Field::R => {
            for (x, d) in &observed {
                let xc = idx_conj(*x, m);
                let dc = observed
                    .iter()
                    .find(|(y, _)| *y == xc)
                    .map(|(_, e)| *e)
                    .unwrap_or(0);
                if dc != *d {
                    return Err(Error::PairingDimensionMismatch(format!(
                        "real matrix has conjugate-unbalanced multiplicities at {x:?}"
                    )));
                }
            }
            SpectrumReport {
                m,
                entries: observed,
            }
        }
        Field::H => {
            // embedding doubles dimension; standardize to upper half-plane
            let mut entries = Vec::new();
            for (x, d) in &observed {
                if x.is_real_valued(m) {
                    if d % 2 != 0 {
                        return Err(Error::Rank(format!(
                            "embedded multiplicity at real {x:?} is odd ({d})"
                        )));
                    }
                    entries.push((*x, d / 2));
                } else {
                    let EigIndex::Root(k) = *x else { unreachable!() };
                    if 2 * k > m {
                        continue; // lower half: image of the conjugate
                    }
                    let dc = observed
                        .iter()
                        .find(|(y, _)| *y == idx_conj(*x, m))
                        .map(|(_, e)| *e)
                        .unwrap_or(0);
                    if dc != *d {
                        return Err(Error::PairingDimensionMismatch(format!(
                            "embedded spectrum not closed under conjugation at {x:?}"
                        )));
                    }
                    entries.push((*x, *d));
                }
            }
            SpectrumReport { m, entries }
        }
    };

    Ok(Spectrum {
        field,
        r,
        m,
        report,
        projectors,
    })
}

/// Orthonormal basis of the eigenspace of `x` in the complex working space.
///
/// Over H, `x` must be the upper half-plane representative; the basis spans
/// the embedded eigenspace for that complex value.
pub fn eigenbasis_complex(
    a: &Mat<C64>,
    spectrum: &Spectrum,
    x: EigIndex,
    tol: f64,
    eps_rank: f64,
) -> Result<Mat<C64>> {
    let p = spectrum
        .projector(x)
        .ok_or_else(|| Error::Rank(format!("index {x:?} not present in the spectrum")))?;
    let (basis, rk) = col_orthonormal_basis(p, eps_rank);
    let expected = spectrum.working_multiplicity(x).unwrap_or(0);
    if rk != expected {
        return Err(Error::Rank(format!(
            "projector rank {rk} disagrees with multiplicity {expected} at {x:?}"
        )));
    }
    let v = value(x, spectrum.m);
    let resid = a
        .matmul(&basis)
        .sub(&basis.scalar_mul_left(v))
        .frobenius()
        / a.frobenius().max(1.0);
    if resid > 100.0 * tol {
        return Err(Error::Rank(format!(
            "eigenbasis residual {resid:.3e} at {x:?}"
        )));
    }
    Ok(basis)
}

/// Quaternion eigenbasis for the upper half-plane representative `x`:
/// columns b with A b = b * value(x), right-H-independent, count equal to
/// the reported multiplicity.
///
/// For a nonreal value the pulled-back complex basis is already
/// H-independent and is returned as-is: orthonormalizing it with general
/// quaternion coefficients would right-multiply columns by j-bearing
/// scalars, conjugating the eigenvalue. For a real value any quaternion
/// recombination is an eigenvector, so the doubled pullback is reduced to
/// an orthonormal H-basis.
pub fn eigenbasis_quaternion(
    a_embedded: &Mat<C64>,
    spectrum: &Spectrum,
    x: EigIndex,
    tol: f64,
    eps_rank: f64,
) -> Result<Mat<Quaternion>> {
    let complex_basis = eigenbasis_complex(a_embedded, spectrum, x, tol, eps_rank)?;
    let pulled = pull_back_columns(&complex_basis);
    let want = spectrum.report.multiplicity(x);
    if x.is_real_valued(spectrum.m) {
        let (basis, rk) = col_orthonormal_basis(&pulled, eps_rank);
        if rk != want {
            return Err(Error::Rank(format!(
                "quaternion eigenbasis rank {rk} at {x:?}, expected {want}"
            )));
        }
        Ok(basis)
    } else {
        if pulled.cols() != want {
            return Err(Error::Rank(format!(
                "quaternion eigenbasis has {} columns at {x:?}, expected {want}",
                pulled.cols()
            )));
        }
        Ok(pulled)
    }
}
