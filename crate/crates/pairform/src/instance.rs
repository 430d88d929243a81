//! Validation of raw pairs against the defining relation, random instance
//! generation from sampled canonical data, and the equivalence decision.

use rand::Rng;

use crate::canon::{
    block_matrices, canonicalize, classify_case, orbit_rep, CanonicalBlock, CanonicalForm,
    CaseTag, FormScalar, PartnerRule,
};
use crate::mat::{cond2, singular_values, Mat};
use crate::scalars::{adjoint_embed, complexify, Field, Involution, Quaternion, C64};
use crate::spectral::{idx_conj, idx_pow_r, modulus, EigIndex};
use crate::{Error, Result};

/// Numerical thresholds carried by a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative residual allowed in the defining relation.
    pub tol_relation: f64,
    /// Eigenvalue snapping tolerance.
    pub tol_snap: f64,
    /// Relative singular-value threshold for rank decisions.
    pub eps_rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_relation: 1e-8,
            tol_snap: 1e-6,
            eps_rank: 1e-9,
        }
    }
}

/// Field, involution, form sign and exponent of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Context {
    pub field: Field,
    pub involution: Involution,
    pub epsilon: i32,
    pub r: i64,
    pub tol: Tolerances,
}

impl Context {
    pub fn new(field: Field, involution: Involution, epsilon: i32, r: i64) -> Context {
        Context {
            field,
            involution,
            epsilon,
            r,
            tol: Tolerances::default(),
        }
    }

    pub fn for_case(case: CaseTag, r: i64) -> Context {
        Context::new(case.field(), case.involution(), case.epsilon(), r)
    }

    pub fn case(&self) -> Result<CaseTag> {
        modulus(self.r)?;
        classify_case(self.field, self.involution, self.epsilon)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Same classification data; tolerances may differ.
    pub fn compatible(&self, other: &Context) -> bool {
        self.field == other.field
            && self.involution == other.involution
            && self.epsilon == other.epsilon
            && self.r == other.r
    }
}

/// The matrices of a pair over the context field.
#[derive(Debug, Clone, PartialEq)]
pub enum PairData {
    Real { a: Mat<f64>, f: Mat<f64> },
    Complex { a: Mat<C64>, f: Mat<C64> },
    Quat { a: Mat<Quaternion>, f: Mat<Quaternion> },
}

impl PairData {
    pub fn field(&self) -> Field {
        match self {
            PairData::Real { .. } => Field::R,
            PairData::Complex { .. } => Field::C,
            PairData::Quat { .. } => Field::H,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PairData::Real { a, .. } => a.rows(),
            PairData::Complex { a, .. } => a.rows(),
            PairData::Quat { a, .. } => a.rows(),
        }
    }
}

/// A single matrix over one of the three fields.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldMat {
    Real(Mat<f64>),
    Complex(Mat<C64>),
    Quat(Mat<Quaternion>),
}

impl FieldMat {
    pub fn dim(&self) -> usize {
        match self {
            FieldMat::Real(m) => m.rows(),
            FieldMat::Complex(m) => m.rows(),
            FieldMat::Quat(m) => m.rows(),
        }
    }
}

/// The instance: matrices plus context.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    pub data: PairData,
    pub context: Context,
}

impl MatrixPair {
    pub fn new(data: PairData, context: Context) -> Result<MatrixPair> {
        if data.field() != context.field {
            return Err(Error::Context(format!(
                "matrix entries are over {} but the context says {}",
                data.field().label(),
                context.field.label()
            )));
        }
        let (ra, ca, rf, cf) = match &data {
            PairData::Real { a, f } => (a.rows(), a.cols(), f.rows(), f.cols()),
            PairData::Complex { a, f } => (a.rows(), a.cols(), f.rows(), f.cols()),
            PairData::Quat { a, f } => (a.rows(), a.cols(), f.rows(), f.cols()),
        };
        if ra != ca || rf != cf || ra != rf {
            return Err(Error::Shape(format!(
                "A is {ra}x{ca}, F is {rf}x{cf}; both must be square of equal size"
            )));
        }
        if ra == 0 {
            return Err(Error::Shape("empty matrices".into()));
        }
        context.case()?;
        Ok(MatrixPair { data, context })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }
}

/// One validation check with its relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Derived consistency check rather than a defining invariant.
    pub derived: bool,
}

/// Per-invariant report; overall pass iff every check passes.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        self.checks.iter().find(|c| !c.pass).map(|c| c.name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.residual)
    }
}

fn working_complex(data: &PairData) -> (Mat<C64>, Mat<C64>) {
    match data {
        PairData::Real { a, f } => (complexify(a), complexify(f)),
        PairData::Complex { a, f } => (a.clone(), f.clone()),
        PairData::Quat { a, f } => (adjoint_embed(a), adjoint_embed(f)),
    }
}

/// Check the defining invariants of a pair. Failures are carried in the
/// report, not returned as errors; only structurally impossible inputs
/// (illegal context, non-square matrices) error out.
pub fn validate_pair(pair: &MatrixPair) -> Result<ValidationReport> {
    pair.context.case()?;
    let r = pair.context.r;
    let eps = pair.context.epsilon as f64;
    let inv = pair.context.involution;
    let tol = pair.context.tol;
    let mut checks = Vec::new();

    macro_rules! relation_checks {
        ($a:expr, $f:expr) => {{
            let a = $a;
            let f = $f;
            let fnorm = f.frobenius().max(1e-300);
            let anorm = a.frobenius();

            let fst = f.st(inv);
            let sym_resid = fst.sub(&f.scale(eps)).frobenius() / fnorm;
            checks.push(CheckResult {
                name: "form_symmetry",
                residual: sym_resid,
                threshold: tol.tol_relation,
                pass: sym_resid <= tol.tol_relation,
                derived: false,
            });

            let denom = fnorm * anorm.max(1.0).powi(r.unsigned_abs() as i32);
            let (rel_resid, derived_resid) = match a.pow_int(r) {
                Some(ar) => {
                    let lhs = a.st(inv).matmul(&f);
                    let rhs = f.matmul(&ar);
                    let rel = lhs.sub(&rhs).frobenius() / denom;
                    let ar2 = a.pow_int(r * r).expect("r^2 > 0");
                    let der = ar2.sub(&a).frobenius() / anorm.max(1e-300);
                    (rel, der)
                }
                None => (f64::INFINITY, f64::INFINITY),
            };
            checks.push(CheckResult {
                name: "relation",
                residual: rel_resid,
                threshold: tol.tol_relation,
                pass: rel_resid <= tol.tol_relation,
                derived: false,
            });
            checks.push(CheckResult {
                name: "derived_a_pow_r2",
                residual: derived_resid,
                threshold: 10.0 * tol.tol_relation,
                pass: derived_resid <= 10.0 * tol.tol_relation,
                derived: true,
            });
        }};
    }

    // rank checks run on the complex working matrices
    let (wa, wf) = working_complex(&pair.data);
    let sv = singular_values(&wf);
    let f_ratio = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    };
    checks.push(CheckResult {
        name: "form_nonsingular",
        residual: f_ratio,
        threshold: tol.eps_rank,
        pass: f_ratio > tol.eps_rank,
        derived: false,
    });
    if r < 0 {
        let sva = singular_values(&wa);
        let a_ratio = match (sva.first(), sva.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        };
        checks.push(CheckResult {
            name: "a_nonsingular",
            residual: a_ratio,
            threshold: tol.eps_rank,
            pass: a_ratio > tol.eps_rank,
            derived: false,
        });
    }

    match &pair.data {
        PairData::Real { a, f } => relation_checks!(a, f),
        PairData::Complex { a, f } => relation_checks!(a, f),
        PairData::Quat { a, f } => relation_checks!(a, f),
    }

    Ok(ValidationReport { checks })
}

/// Decide equivalence under (A, F) -> (S^-1 A S, S^st F S) by comparing
/// canonical multisets.
pub fn equivalent(p1: &MatrixPair, p2: &MatrixPair) -> Result<bool> {
    if !p1.context.compatible(&p2.context) {
        return Err(Error::ContextMismatch(
            "pairs live in different contexts (field/involution/form/r)".into(),
        ));
    }
    let (f1, _) = canonicalize(p1)?;
    let (f2, _) = canonicalize(p2)?;
    Ok(f1 == f2)
}

// ---------------------------------------------------------------------------
// catalog of admissible block templates
// ---------------------------------------------------------------------------

fn one(index: EigIndex, scalar: FormScalar) -> CanonicalBlock {
    CanonicalBlock::One { index, scalar }
}

fn two(case: CaseTag, index: EigIndex, realified: bool) -> CanonicalBlock {
    CanonicalBlock::Two {
        index,
        partner: if case.sesquilinear() {
            PartnerRule::ConjPowR
        } else {
            PartnerRule::PowR
        },
        off_sign: case.off_sign(),
        realified,
    }
}

/// The complete finite list of admissible block templates for a case and
/// exponent, one entry per orbit representative.
pub fn catalog(case: CaseTag, r: i64) -> Result<Vec<CanonicalBlock>> {
    let m = modulus(r)?;
    let mut out = Vec::new();

    if r > 0 {
        // zero eigenvalue blocks
        match case {
            CaseTag::A1 => out.push(one(EigIndex::Zero, FormScalar::PlusOne)),
            CaseTag::A2 | CaseTag::B1 | CaseTag::C1 => {
                out.push(one(EigIndex::Zero, FormScalar::PlusOne));
                out.push(one(EigIndex::Zero, FormScalar::MinusOne));
            }
            CaseTag::A3 | CaseTag::B2 => out.push(two(case, EigIndex::Zero, false)),
            CaseTag::C2 => out.push(one(EigIndex::Zero, FormScalar::PlusOne)),
            CaseTag::C3 => out.push(one(EigIndex::Zero, FormScalar::PlusI)),
            CaseTag::C4 => {
                out.push(one(EigIndex::Zero, FormScalar::PlusI));
                out.push(one(EigIndex::Zero, FormScalar::MinusI));
            }
        }
    }

    for k in 0..m {
        let x = EigIndex::Root(k);
        let p = idx_pow_r(x, r, m)?;
        let pc = idx_conj(p, m);
        let is_real = x.is_real_valued(m);
        let rep_is_self = orbit_rep(x, case, r)? == x;
        match case {
            CaseTag::A1 => {
                if p == x {
                    out.push(one(x, FormScalar::PlusOne));
                } else if rep_is_self {
                    out.push(two(case, x, false));
                }
            }
            CaseTag::A2 => {
                if pc == x {
                    out.push(one(x, FormScalar::PlusOne));
                    out.push(one(x, FormScalar::MinusOne));
                } else if rep_is_self {
                    out.push(two(case, x, false));
                }
            }
            CaseTag::A3 => {
                if rep_is_self {
                    out.push(two(case, x, false));
                }
            }
            CaseTag::B1 => {
                if is_real {
                    out.push(one(x, FormScalar::PlusOne));
                    out.push(one(x, FormScalar::MinusOne));
                } else if rep_is_self {
                    if pc == x {
                        // (mu^R, +/- I2)
                        out.push(one(x, FormScalar::PlusOne));
                        out.push(one(x, FormScalar::MinusOne));
                    } else {
                        // (lambda^R, Z) when lambda^r = lambda, else 4x4
                        out.push(two(case, x, true));
                    }
                }
            }
            CaseTag::B2 => {
                if is_real {
                    out.push(two(case, x, false));
                } else if rep_is_self {
                    // covers the rigid 2x2 species (both half-planes) and 4x4
                    out.push(two(case, x, true));
                }
            }
            CaseTag::C1 | CaseTag::C4 => {
                let signs = if case == CaseTag::C1 {
                    (FormScalar::PlusOne, FormScalar::MinusOne)
                } else {
                    (FormScalar::PlusI, FormScalar::MinusI)
                };
                if !rep_is_self {
                    continue;
                }
                if pc == x {
                    out.push(one(x, signs.0));
                    out.push(one(x, signs.1));
                } else {
                    out.push(two(case, x, false));
                }
            }
            CaseTag::C2 | CaseTag::C3 => {
                if !rep_is_self {
                    continue;
                }
                if pc == x {
                    if is_real {
                        out.push(one(
                            x,
                            if case == CaseTag::C2 {
                                FormScalar::PlusOne
                            } else {
                                FormScalar::PlusI
                            },
                        ));
                    } else if case == CaseTag::C2 {
                        out.push(one(x, FormScalar::PlusOne));
                        out.push(one(x, FormScalar::MinusOne));
                    } else {
                        out.push(one(x, FormScalar::PlusI));
                        out.push(one(x, FormScalar::MinusI));
                    }
                } else if p == x && !is_real {
                    out.push(one(x, FormScalar::PlusJ));
                } else {
                    out.push(two(case, x, false));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// random instances
// ---------------------------------------------------------------------------

/// Block content of a generated instance.
#[derive(Debug, Clone)]
pub enum BlockRequest {
    /// Explicit catalog blocks.
    Explicit(Vec<CanonicalBlock>),
    /// Sample admissible blocks until the dimension budget is filled.
    Budget { dim: usize },
}

/// Recipe for one random instance.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub case: CaseTag,
    pub r: i64,
    pub request: BlockRequest,
    /// Reject scrambles with 2-norm condition number above this bound.
    pub cond_bound: f64,
}

impl GeneratorSpec {
    pub fn new(case: CaseTag, r: i64, request: BlockRequest) -> GeneratorSpec {
        GeneratorSpec {
            case,
            r,
            request,
            cond_bound: 100.0,
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_scramble(
    field: Field,
    n: usize,
    cond_bound: f64,
    rng: &mut impl Rng,
) -> Result<FieldMat> {
    for _ in 0..500 {
        let (s, cond) = match field {
            Field::R => {
                let s = Mat::from_fn(n, n, |_, _| gaussian(rng));
                let c = cond2(&complexify(&s));
                (FieldMat::Real(s), c)
            }
            Field::C => {
                let s = Mat::from_fn(n, n, |_, _| C64::new(gaussian(rng), gaussian(rng)));
                let c = cond2(&s);
                (FieldMat::Complex(s), c)
            }
            Field::H => {
                let s = Mat::from_fn(n, n, |_, _| {
                    Quaternion::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng))
                });
                let c = cond2(&adjoint_embed(&s));
                (FieldMat::Quat(s), c)
            }
        };
        if cond <= cond_bound {
            return Ok(s);
        }
    }
    Err(Error::Admissibility(format!(
        "could not sample a scramble with condition number <= {cond_bound}"
    )))
}

fn resolve_blocks(spec: &GeneratorSpec, rng: &mut impl Rng) -> Result<Vec<CanonicalBlock>> {
    let templates = catalog(spec.case, spec.r)?;
    match &spec.request {
        BlockRequest::Explicit(blocks) => {
            for b in blocks {
                if !templates.contains(b) {
                    return Err(Error::Admissibility(format!(
                        "block {b:?} is not in the catalog for case {} with r = {}",
                        spec.case.label(),
                        spec.r
                    )));
                }
            }
            if blocks.is_empty() {
                return Err(Error::Admissibility("no blocks requested".into()));
            }
            Ok(blocks.clone())
        }
        BlockRequest::Budget { dim } => {
            if *dim == 0 {
                return Err(Error::Admissibility("dimension budget is zero".into()));
            }
            let mut remaining = *dim;
            let mut blocks = Vec::new();
            while remaining > 0 {
                let fits: Vec<&CanonicalBlock> = templates
                    .iter()
                    .filter(|b| b.dim(spec.case, spec.r) <= remaining)
                    .collect();
                if fits.is_empty() {
                    return Err(Error::Admissibility(format!(
                        "no admissible block fits the remaining dimension {remaining} \
                         (case {}, r = {})",
                        spec.case.label(),
                        spec.r
                    )));
                }
                let b = *fits[rng.gen_range(0..fits.len())];
                remaining -= b.dim(spec.case, spec.r);
                blocks.push(b);
            }
            Ok(blocks)
        }
    }
}

/// Generate (S^-1 A_can S, S^st F_can S) for sampled canonical data and a
/// random well-conditioned S. Returns the pair, the ground-truth form, and
/// the scramble used.
pub fn random_instance(
    spec: &GeneratorSpec,
    rng: &mut impl Rng,
) -> Result<(MatrixPair, CanonicalForm, FieldMat)> {
    let blocks = resolve_blocks(spec, rng)?;
    let form = CanonicalForm::new(spec.case, spec.r, blocks);
    let canonical = block_matrices(&form);
    let n = canonical.dim();
    let s = random_scramble(spec.case.field(), n, spec.cond_bound, rng)?;
    let inv = spec.case.involution();

    let data = match (&canonical, &s) {
        (PairData::Real { a, f }, FieldMat::Real(s)) => {
            let a2 = s.solve(&a.matmul(s)).expect("scramble is nonsingular");
            let f2 = s.st(inv).matmul(f).matmul(s);
            PairData::Real { a: a2, f: f2 }
        }
        (PairData::Complex { a, f }, FieldMat::Complex(s)) => {
            let a2 = s.solve(&a.matmul(s)).expect("scramble is nonsingular");
            let f2 = s.st(inv).matmul(f).matmul(s);
            PairData::Complex { a: a2, f: f2 }
        }
        (PairData::Quat { a, f }, FieldMat::Quat(s)) => {
            let a2 = s.solve(&a.matmul(s)).expect("scramble is nonsingular");
            let f2 = s.st(inv).matmul(f).matmul(s);
            PairData::Quat { a: a2, f: f2 }
        }
        _ => unreachable!("field mismatch between canonical pair and scramble"),
    };

    let pair = MatrixPair::new(data, Context::for_case(spec.case, spec.r))?;
    Ok((pair, form, s))
}
