//! Command-line front end and JSON interchange for pairs, canonical forms,
//! catalogs and validation reports.
//!
//! Exit codes are a stable contract: 0 success/equivalent, 1 semantic
//! failure, 2 I/O-or-context error, 3 inequivalent.

use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::canon::{
    canonicalize, CanonicalBlock, CanonicalForm, CaseTag, FormScalar, PartnerRule,
    TransformWitness,
};
use crate::instance::{
    catalog, random_instance, validate_pair, BlockRequest, Context, FieldMat, GeneratorSpec,
    MatrixPair, PairData, Tolerances, ValidationReport,
};
use crate::mat::Mat;
use crate::scalars::{Field, Involution, Quaternion, C64};
use crate::spectral::{idx_conj, idx_pow_r, modulus, EigIndex};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SEMANTIC: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INEQUIVALENT: i32 = 3;

// ---------------------------------------------------------------------------
// documents
// ---------------------------------------------------------------------------

fn field_from_str(s: &str) -> Result<Field> {
    match s {
        "C" => Ok(Field::C),
        "R" => Ok(Field::R),
        "H" => Ok(Field::H),
        _ => Err(Error::Shape(format!("unknown field {s:?}"))),
    }
}

fn involution_from_str(s: &str) -> Result<Involution> {
    match s {
        "identity" => Ok(Involution::Identity),
        "conj" => Ok(Involution::ComplexConj),
        "quatconj" => Ok(Involution::QuatConj),
        "quatsemiconj" => Ok(Involution::QuatSemiconj),
        _ => Err(Error::Shape(format!("unknown involution {s:?}"))),
    }
}

fn form_name(inv: Involution, epsilon: i32) -> &'static str {
    match (inv, epsilon) {
        (Involution::Identity, 1) => "symmetric",
        (Involution::Identity, _) => "skew",
        (_, 1) => "hermitian",
        (_, _) => "skewhermitian",
    }
}

fn epsilon_from_form(s: &str, inv: Involution) -> Result<i32> {
    let (eps, needs_conj) = match s {
        "symmetric" => (1, false),
        "skew" => (-1, false),
        "hermitian" => (1, true),
        "skewhermitian" => (-1, true),
        _ => return Err(Error::Shape(format!("unknown form {s:?}"))),
    };
    let has_conj = inv != Involution::Identity;
    if needs_conj != has_conj {
        return Err(Error::Shape(format!(
            "form {s:?} is inconsistent with involution {:?}",
            inv.label()
        )));
    }
    Ok(eps)
}

fn num(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Shape(format!("{what}: expected a number, got {v}")))
}

fn entry_real(v: &Value) -> Result<f64> {
    num(v, "real entry")
}

fn entry_complex(v: &Value) -> Result<C64> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Shape(format!("complex entry must be [re, im], got {v}")))?;
    if arr.len() != 2 {
        return Err(Error::Shape(format!("complex entry must be [re, im], got {v}")));
    }
    Ok(C64::new(num(&arr[0], "re")?, num(&arr[1], "im")?))
}

fn entry_quat(v: &Value) -> Result<Quaternion> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Shape(format!("quaternion entry must be [a,b,c,d], got {v}")))?;
    if arr.len() != 4 {
        return Err(Error::Shape(format!("quaternion entry must be [a,b,c,d], got {v}")));
    }
    Ok(Quaternion::new(
        num(&arr[0], "a")?,
        num(&arr[1], "b")?,
        num(&arr[2], "c")?,
        num(&arr[3], "d")?,
    ))
}

fn parse_matrix<T>(v: &Value, parse: impl Fn(&Value) -> Result<T>) -> Result<Vec<Vec<T>>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Shape("matrix must be an array of rows".into()))?;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let cells = row
            .as_array()
            .ok_or_else(|| Error::Shape("matrix row must be an array".into()))?;
        let mut r = Vec::with_capacity(cells.len());
        for c in cells {
            r.push(parse(c)?);
        }
        out.push(r);
    }
    if out.is_empty() || out.iter().any(|r| r.len() != out[0].len()) {
        return Err(Error::Shape("matrix must be rectangular and nonempty".into()));
    }
    Ok(out)
}

fn real_value(x: f64) -> Value {
    json!(x)
}

fn complex_value(z: C64) -> Value {
    json!([z.re, z.im])
}

fn quat_value(q: Quaternion) -> Value {
    json!([q.a, q.b, q.c, q.d])
}

fn matrix_value<T: Copy>(m: &[Vec<T>], emit: impl Fn(T) -> Value) -> Value {
    Value::Array(
        m.iter()
            .map(|row| Value::Array(row.iter().map(|&x| emit(x)).collect()))
            .collect(),
    )
}

fn mat_rows<T: crate::mat::Scalar>(m: &Mat<T>) -> Vec<Vec<T>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn fieldmat_value(m: &FieldMat) -> Value {
    match m {
        FieldMat::Real(m) => matrix_value(&mat_rows(m), real_value),
        FieldMat::Complex(m) => matrix_value(&mat_rows(m), complex_value),
        FieldMat::Quat(m) => matrix_value(&mat_rows(m), quat_value),
    }
}

/// Parse a PairDocument into a [`MatrixPair`].
pub fn parse_pair_document(text: &str) -> Result<MatrixPair> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Shape(format!("invalid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Shape("pair document must be a JSON object".into()))?;
    let get = |k: &str| -> Result<&Value> {
        obj.get(k)
            .ok_or_else(|| Error::Shape(format!("missing field {k:?}")))
    };
    let field = field_from_str(
        get("field")?
            .as_str()
            .ok_or_else(|| Error::Shape("field must be a string".into()))?,
    )?;
    let inv = involution_from_str(
        get("involution")?
            .as_str()
            .ok_or_else(|| Error::Shape("involution must be a string".into()))?,
    )?;
    let eps = epsilon_from_form(
        get("form")?
            .as_str()
            .ok_or_else(|| Error::Shape("form must be a string".into()))?,
        inv,
    )?;
    let r = get("r")?
        .as_i64()
        .ok_or_else(|| Error::Shape("r must be an integer".into()))?;
    let mut context = Context::new(field, inv, eps, r);
    if let Some(t) = obj.get("tolerances") {
        let t = t
            .as_object()
            .ok_or_else(|| Error::Shape("tolerances must be an object".into()))?;
        let mut tol = Tolerances::default();
        if let Some(x) = t.get("tol_relation") {
            tol.tol_relation = num(x, "tol_relation")?;
        }
        if let Some(x) = t.get("tol_snap") {
            tol.tol_snap = num(x, "tol_snap")?;
        }
        if let Some(x) = t.get("eps_rank") {
            tol.eps_rank = num(x, "eps_rank")?;
        }
        context.tol = tol;
    }
    let data = match field {
        Field::R => PairData::Real {
            a: Mat::from_rows(&parse_matrix(get("A")?, entry_real)?),
            f: Mat::from_rows(&parse_matrix(get("F")?, entry_real)?),
        },
        Field::C => PairData::Complex {
            a: Mat::from_rows(&parse_matrix(get("A")?, entry_complex)?),
            f: Mat::from_rows(&parse_matrix(get("F")?, entry_complex)?),
        },
        Field::H => PairData::Quat {
            a: Mat::from_rows(&parse_matrix(get("A")?, entry_quat)?),
            f: Mat::from_rows(&parse_matrix(get("F")?, entry_quat)?),
        },
    };
    MatrixPair::new(data, context)
}

/// Emit a pair as a PairDocument.
pub fn emit_pair_document(pair: &MatrixPair) -> String {
    let ctx = &pair.context;
    let mut obj = Map::new();
    obj.insert("field".into(), json!(ctx.field.label()));
    obj.insert("involution".into(), json!(ctx.involution.label()));
    obj.insert("form".into(), json!(form_name(ctx.involution, ctx.epsilon)));
    obj.insert("r".into(), json!(ctx.r));
    let (a, f) = match &pair.data {
        PairData::Real { a, f } => (
            matrix_value(&mat_rows(a), real_value),
            matrix_value(&mat_rows(f), real_value),
        ),
        PairData::Complex { a, f } => (
            matrix_value(&mat_rows(a), complex_value),
            matrix_value(&mat_rows(f), complex_value),
        ),
        PairData::Quat { a, f } => (
            matrix_value(&mat_rows(a), quat_value),
            matrix_value(&mat_rows(f), quat_value),
        ),
    };
    obj.insert("A".into(), a);
    obj.insert("F".into(), f);
    obj.insert(
        "tolerances".into(),
        json!({
            "tol_relation": ctx.tol.tol_relation,
            "tol_snap": ctx.tol.tol_snap,
            "eps_rank": ctx.tol.eps_rank,
        }),
    );
    Value::Object(obj).to_string()
}

fn index_value(x: EigIndex) -> Value {
    match x {
        EigIndex::Zero => json!("zero"),
        EigIndex::Root(k) => json!(k),
    }
}

fn block_value(b: &CanonicalBlock, case: CaseTag, r: i64) -> Value {
    let m = modulus(r).expect("legal r");
    match b {
        CanonicalBlock::One { index, scalar } => json!({
            "kind": "one",
            "index": index_value(*index),
            "scalar": scalar.label(),
            // over R a nonreal index denotes the realified (x^R, s*I2) block
            "realified": case.field() == Field::R && !index.is_real_valued(m),
        }),
        CanonicalBlock::Two {
            index,
            partner,
            off_sign,
            realified,
        } => {
            let partner_idx = match index {
                EigIndex::Zero => EigIndex::Zero,
                EigIndex::Root(_) => {
                    let p = idx_pow_r(*index, r, m).expect("nonzero index");
                    match partner {
                        PartnerRule::PowR => p,
                        PartnerRule::ConjPowR => idx_conj(p, m),
                    }
                }
            };
            json!({
                "kind": "two",
                "index": index_value(*index),
                "partner": index_value(partner_idx),
                "partner_rule": match partner {
                    PartnerRule::PowR => "pow_r",
                    PartnerRule::ConjPowR => "conj_pow_r",
                },
                "off_sign": off_sign,
                "realified": realified,
            })
        }
    }
}

/// Emit a canonical form (plus optional witness) as a CanonDocument.
pub fn emit_canon_document(form: &CanonicalForm, witness: Option<&TransformWitness>) -> String {
    let m = modulus(form.r).expect("legal r");
    let mut obj = Map::new();
    obj.insert("case".into(), json!(form.case.label()));
    obj.insert("r".into(), json!(form.r));
    obj.insert("m".into(), json!(m));
    obj.insert("n".into(), json!(form.dim()));
    obj.insert(
        "blocks".into(),
        Value::Array(
            form.blocks
                .iter()
                .map(|b| block_value(b, form.case, form.r))
                .collect(),
        ),
    );
    if let Some(w) = witness {
        obj.insert(
            "witness".into(),
            json!({
                "S": fieldmat_value(&w.s),
                "residual_similarity": finite(w.residual_similarity),
                "residual_congruence": finite(w.residual_congruence),
            }),
        );
    }
    Value::Object(obj).to_string()
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

/// Parse the blocks of a CanonDocument (or a bare block list) into catalog
/// templates. Indices may be given as residues, as "zero", or through a
/// "value" shortcut for the exact real eigenvalues 0, 1, -1.
pub fn parse_blocks(text: &str, case: CaseTag, r: i64) -> Result<Vec<CanonicalBlock>> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Shape(format!("invalid JSON: {e}")))?;
    let list = match &v {
        Value::Array(a) => a.clone(),
        Value::Object(o) => o
            .get("blocks")
            .and_then(|b| b.as_array())
            .cloned()
            .ok_or_else(|| Error::Shape("expected a block list or a document with one".into()))?,
        _ => return Err(Error::Shape("expected a block list".into())),
    };
    let m = modulus(r)?;
    let templates = catalog(case, r)?;
    let mut out = Vec::new();
    for item in &list {
        let obj = item
            .as_object()
            .ok_or_else(|| Error::Shape("block must be an object".into()))?;
        let index = parse_index(obj, m)?;
        let kind = obj
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::Shape("block needs kind \"one\" or \"two\"".into()))?;
        let scalar = match obj.get("scalar").and_then(|s| s.as_str()) {
            Some(s) => Some(
                FormScalar::from_label(s)
                    .ok_or_else(|| Error::Shape(format!("unknown scalar {s:?}")))?,
            ),
            None => None,
        };
        let found = templates.iter().find(|t| match (kind, t) {
            ("one", CanonicalBlock::One { index: ti, scalar: ts }) => {
                *ti == index && (scalar == Some(*ts))
            }
            ("two", CanonicalBlock::Two { index: ti, .. }) => *ti == index,
            _ => false,
        });
        match found {
            Some(t) => out.push(*t),
            None => {
                return Err(Error::Admissibility(format!(
                    "block kind={kind} index={index:?} scalar={scalar:?} is not admissible \
                     for case {} with r = {r}",
                    case.label()
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Admissibility("no blocks requested".into()));
    }
    Ok(out)
}

fn parse_index(obj: &Map<String, Value>, m: u32) -> Result<EigIndex> {
    if let Some(v) = obj.get("value") {
        let x = num(v, "value")?;
        return if x == 0.0 {
            Ok(EigIndex::Zero)
        } else if x == 1.0 {
            Ok(EigIndex::Root(0))
        } else if x == -1.0 {
            if m.is_multiple_of(2) {
                Ok(EigIndex::Root(m / 2))
            } else {
                Err(Error::Admissibility(
                    "eigenvalue -1 exists only for odd r (even m)".into(),
                ))
            }
        } else {
            Err(Error::Shape(format!(
                "value shortcut supports 0, 1, -1 only, got {x}"
            )))
        };
    }
    match obj.get("index") {
        Some(Value::String(s)) if s == "zero" => Ok(EigIndex::Zero),
        Some(v) => {
            let k = v
                .as_u64()
                .ok_or_else(|| Error::Shape(format!("index must be \"zero\" or 0..m-1, got {v}")))?;
            if k >= m as u64 {
                return Err(Error::Shape(format!("index {k} out of range mod {m}")));
            }
            Ok(EigIndex::Root(k as u32))
        }
        None => Err(Error::Shape("block needs an index or a value".into())),
    }
}

fn report_value(rep: &ValidationReport) -> Value {
    json!({
        "pass": rep.pass(),
        "checks": rep.checks.iter().map(|c| json!({
            "name": c.name,
            "residual": finite(c.residual),
            "threshold": c.threshold,
            "pass": c.pass,
            "derived": c.derived,
        })).collect::<Vec<_>>(),
    })
}

// ---------------------------------------------------------------------------
// argument handling
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
struct Args {
    positional: Vec<String>,
    options: Vec<(String, String)>,
    flags: Vec<String>,
}

impl Args {
    fn parse(argv: &[String]) -> Result<Args> {
        let mut out = Args::default();
        let mut i = 0;
        while i < argv.len() {
            let a = &argv[i];
            if let Some(name) = a.strip_prefix("--") {
                if matches!(name, "json" | "quiet") {
                    out.flags.push(name.to_string());
                    i += 1;
                } else {
                    let val = argv
                        .get(i + 1)
                        .ok_or_else(|| Error::Shape(format!("option --{name} needs a value")))?;
                    out.options.push((name.to_string(), val.clone()));
                    i += 2;
                }
            } else {
                out.positional.push(a.clone());
                i += 1;
            }
        }
        Ok(out)
    }

    fn opt(&self, name: &str) -> Option<&str> {
        self.options
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn flag(&self, name: &str) -> bool {
        self.flags.iter().any(|f| f == name)
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        match self.opt(name) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Shape(format!("--{name} expects a number, got {s:?}"))),
        }
    }

    fn opt_i64(&self, name: &str) -> Result<Option<i64>> {
        match self.opt(name) {
            None => Ok(None),
            Some(s) => s
                .parse::<i64>()
                .map(Some)
                .map_err(|_| Error::Shape(format!("--{name} expects an integer, got {s:?}"))),
        }
    }
}

fn read_file(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Shape(format!("cannot read {path}: {e}")))
}

fn write_output(path: Option<&str>, text: &str, quiet: bool) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Shape(format!("cannot write {p}: {e}"))),
        None => {
            if !quiet {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn load_pair(args: &Args) -> Result<MatrixPair> {
    let input = args
        .opt("input")
        .ok_or_else(|| Error::Shape("--input FILE is required".into()))?;
    let mut pair = parse_pair_document(&read_file(input)?)?;
    if let Some(t) = args.opt_f64("tol")? {
        pair.context.tol.tol_relation = t;
    }
    Ok(pair)
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn cmd_validate(args: &Args) -> Result<i32> {
    let pair = load_pair(args)?;
    let rep = validate_pair(&pair)?;
    if args.flag("json") {
        println!("{}", report_value(&rep));
    } else if !args.flag("quiet") {
        for c in &rep.checks {
            println!(
                "{:<22} residual {:>12.4e}  threshold {:>8.1e}  {}{}",
                c.name,
                c.residual,
                c.threshold,
                if c.pass { "PASS" } else { "FAIL" },
                if c.derived { " (derived)" } else { "" },
            );
        }
        println!("overall: {}", if rep.pass() { "PASS" } else { "FAIL" });
    }
    Ok(if rep.pass() { EXIT_OK } else { EXIT_SEMANTIC })
}

fn cmd_canonicalize(args: &Args) -> Result<i32> {
    let pair = load_pair(args)?;
    match canonicalize(&pair) {
        Ok((form, witness)) => {
            let doc = emit_canon_document(&form, Some(&witness));
            write_output(args.opt("output"), &doc, args.flag("quiet"))?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(EXIT_SEMANTIC)
        }
    }
}

fn cmd_generate(args: &Args) -> Result<i32> {
    let case = args
        .opt("case")
        .and_then(CaseTag::from_label)
        .ok_or_else(|| Error::Shape("--case TAG is required (a1..c4)".into()))?;
    let r = args
        .opt_i64("r")?
        .ok_or_else(|| Error::Shape("--r N is required".into()))?;
    modulus(r)?;
    let request = match (args.opt("blocks"), args.opt_i64("dim")?) {
        (Some(path), None) => {
            match parse_blocks(&read_file(path)?, case, r) {
                Ok(blocks) => BlockRequest::Explicit(blocks),
                Err(e @ Error::Admissibility(_)) => {
                    eprintln!("error: {e}");
                    return Ok(EXIT_SEMANTIC);
                }
                Err(e) => return Err(e),
            }
        }
        (None, Some(dim)) => {
            if dim <= 0 {
                return Err(Error::Shape("--dim must be positive".into()));
            }
            BlockRequest::Budget { dim: dim as usize }
        }
        _ => {
            return Err(Error::Shape(
                "exactly one of --blocks FILE or --dim N is required".into(),
            ))
        }
    };
    let seed = args.opt_i64("seed")?.unwrap_or(0) as u64;
    let mut spec = GeneratorSpec::new(case, r, request);
    if let Some(b) = args.opt_f64("cond")? {
        spec.cond_bound = b;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match random_instance(&spec, &mut rng) {
        Ok((mut pair, truth, s_used)) => {
            if let Some(mag) = args.opt_f64("corrupt")? {
                corrupt_pair(&mut pair, mag, &mut rng);
            }
            let out = args
                .opt("output")
                .ok_or_else(|| Error::Shape("--output FILE is required".into()))?;
            write_output(Some(out), &emit_pair_document(&pair), false)?;
            if let Some(truth_path) = args.opt("truth") {
                let witness = truth_witness(&s_used);
                write_output(
                    Some(truth_path),
                    &emit_canon_document(&truth, witness.as_ref()),
                    false,
                )?;
            }
            Ok(EXIT_OK)
        }
        Err(e @ Error::Admissibility(_)) => {
            eprintln!("error: {e}");
            Ok(EXIT_SEMANTIC)
        }
        Err(e) => Err(e),
    }
}

/// The witness for the emitted pair is the inverse of the scramble:
/// with (A, F) = (S^-1 A_can S, S^st F_can S), W = S^-1 carries the pair
/// back onto the canonical matrices.
fn truth_witness(s_used: &FieldMat) -> Option<TransformWitness> {
    let w = match s_used {
        FieldMat::Real(s) => FieldMat::Real(s.inverse()?),
        FieldMat::Complex(s) => FieldMat::Complex(s.inverse()?),
        FieldMat::Quat(s) => FieldMat::Quat(s.inverse()?),
    };
    Some(TransformWitness {
        s: w,
        residual_similarity: 0.0,
        residual_congruence: 0.0,
    })
}

fn corrupt_pair(pair: &mut MatrixPair, mag: f64, rng: &mut ChaCha8Rng) {
    let n = pair.dim();
    let i = rng.gen_range(0..n);
    let j = rng.gen_range(0..n);
    match &mut pair.data {
        PairData::Real { a, .. } => a[(i, j)] += mag,
        PairData::Complex { a, .. } => a[(i, j)] += C64::new(mag, 0.0),
        PairData::Quat { a, .. } => {
            a[(i, j)] = a[(i, j)] + Quaternion::from_real(mag);
        }
    }
}

fn cmd_equiv(args: &Args) -> Result<i32> {
    if args.positional.len() != 3 {
        return Err(Error::Shape("equiv needs exactly two pair files".into()));
    }
    let p1 = parse_pair_document(&read_file(&args.positional[1])?)?;
    let p2 = parse_pair_document(&read_file(&args.positional[2])?)?;
    if !p1.context.compatible(&p2.context) {
        return Err(Error::ContextMismatch(
            "pairs live in different contexts (field/involution/form/r)".into(),
        ));
    }
    match (canonicalize(&p1), canonicalize(&p2)) {
        (Ok((f1, _)), Ok((f2, _))) => {
            let verdict = f1 == f2;
            if args.flag("json") {
                println!(
                    "{}",
                    json!({
                        "equivalent": verdict,
                        "first": serde_json::from_str::<Value>(&emit_canon_document(&f1, None))
                            .unwrap(),
                        "second": serde_json::from_str::<Value>(&emit_canon_document(&f2, None))
                            .unwrap(),
                    })
                );
            } else if !args.flag("quiet") {
                println!("first:  {}", emit_canon_document(&f1, None));
                println!("second: {}", emit_canon_document(&f2, None));
                println!(
                    "verdict: {}",
                    if verdict { "equivalent" } else { "inequivalent" }
                );
            }
            Ok(if verdict { EXIT_OK } else { EXIT_INEQUIVALENT })
        }
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            Ok(EXIT_SEMANTIC)
        }
    }
}

fn cmd_catalog(args: &Args) -> Result<i32> {
    let case = args
        .opt("case")
        .and_then(CaseTag::from_label)
        .ok_or_else(|| Error::Shape("--case TAG is required (a1..c4)".into()))?;
    let r = args
        .opt_i64("r")?
        .ok_or_else(|| Error::Shape("--r N is required".into()))?;
    let templates = catalog(case, r)?;
    if args.flag("json") {
        println!(
            "{}",
            json!({
                "case": case.label(),
                "r": r,
                "m": modulus(r)?,
                "templates": templates.iter().map(|b| block_value(b, case, r)).collect::<Vec<_>>(),
            })
        );
    } else if !args.flag("quiet") {
        for b in &templates {
            println!("{} dim={}", block_value(b, case, r), b.dim(case, r));
        }
        println!("{} templates", templates.len());
    }
    Ok(EXIT_OK)
}

const USAGE: &str = "\
pairform: canonical forms of matrix pairs A^st F = F A^r over C, R, H

usage:
  pairform validate --input FILE [--tol X] [--json] [--quiet]
  pairform canonicalize --input FILE [--output FILE] [--tol X] [--quiet]
  pairform generate --case TAG --r N (--blocks FILE | --dim N)
                    [--seed K] [--cond B] [--corrupt MAG]
                    --output FILE [--truth FILE]
  pairform equiv FILE1 FILE2 [--json] [--quiet]
  pairform catalog --case TAG --r N [--json] [--quiet]

exit codes: 0 success/equivalent, 1 semantic failure, 2 I/O or context
error, 3 inequivalent.";

/// Entry point shared by the binary and the tests.
pub fn run(argv: &[String]) -> i32 {
    let result = (|| -> Result<i32> {
        if argv.is_empty() {
            eprintln!("{USAGE}");
            return Ok(EXIT_IO);
        }
        let args = Args::parse(argv)?;
        match argv[0].as_str() {
            "validate" => cmd_validate(&args),
            "canonicalize" => cmd_canonicalize(&args),
            "generate" => cmd_generate(&args),
            "equiv" => cmd_equiv(&args),
            "catalog" => cmd_catalog(&args),
            "--help" | "help" | "-h" => {
                println!("{USAGE}");
                Ok(EXIT_OK)
            }
            other => Err(Error::Shape(format!("unknown subcommand {other:?}"))),
        }
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}
