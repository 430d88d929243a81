//! Generator/canonicalizer round trips and the equivalence-relation
//! properties that make invariant comparison a decision procedure.

use pairform::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// canonicalize(block_matrices(cf)) returns cf exactly, with the identity
/// witness, for every single template and every pair of templates of every
/// case and exponent.
#[test]
fn idempotence_over_catalogs() {
    for case in CaseTag::ALL {
        for r in [2i64, 3, -2, -3] {
            let templates = catalog(case, r).unwrap();
            let mut combos: Vec<Vec<CanonicalBlock>> =
                templates.iter().map(|b| vec![*b]).collect();
            for b1 in &templates {
                for b2 in &templates {
                    combos.push(vec![*b1, *b2]);
                }
            }
            for blocks in combos {
                let form = CanonicalForm::new(case, r, blocks.clone());
                let data = block_matrices(&form);
                let pair = MatrixPair::new(data, Context::for_case(case, r)).unwrap();
                let (got, w) = canonicalize(&pair)
                    .unwrap_or_else(|e| panic!("{case:?} r={r} {blocks:?}: {e}"));
                assert_eq!(got, form, "{case:?} r={r}");
                assert_eq!(w.residual_similarity, 0.0, "{case:?} r={r} {blocks:?}");
                assert_eq!(w.residual_congruence, 0.0, "{case:?} r={r} {blocks:?}");
            }
        }
    }
}

/// Random canonical multisets up to dimension 8 (beyond the pairwise
/// enumeration above) also come back exactly.
#[test]
fn idempotence_on_random_multisets() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D);
    for case in CaseTag::ALL {
        for r in [2i64, 3, -2, -3] {
            let templates = catalog(case, r).unwrap();
            for _ in 0..40 {
                let mut blocks = Vec::new();
                let mut budget = 8usize;
                loop {
                    let fits: Vec<&CanonicalBlock> = templates
                        .iter()
                        .filter(|b| b.dim(case, r) <= budget)
                        .collect();
                    if fits.is_empty() {
                        break;
                    }
                    let b = *fits[rng.gen_range(0..fits.len())];
                    budget -= b.dim(case, r);
                    blocks.push(b);
                    if budget == 0 || rng.gen_bool(0.3) {
                        break;
                    }
                }
                let form = CanonicalForm::new(case, r, blocks);
                let pair =
                    MatrixPair::new(block_matrices(&form), Context::for_case(case, r)).unwrap();
                let (got, w) = canonicalize(&pair).unwrap();
                assert_eq!(got, form, "{case:?} r={r}");
                assert_eq!(w.residual_similarity, 0.0);
            }
        }
    }
}

/// Two independent scrambles of the same canonical data are equivalent, and
/// equivalence is symmetric and transitive across a random triple.
#[test]
fn equivalence_is_an_equivalence_relation() {
    for case in CaseTag::ALL {
        for r in [2i64, -3] {
            let mut rng = ChaCha8Rng::seed_from_u64(0xEA + case as u64 + r.unsigned_abs());
            let dim = if matches!(case, CaseTag::A3 | CaseTag::B2) { 6 } else { 5 };
            let spec = GeneratorSpec::new(case, r, BlockRequest::Budget { dim });
            let (p1, truth, _) = random_instance(&spec, &mut rng).unwrap();
            // same blocks, fresh scrambles
            let spec2 = GeneratorSpec::new(
                case,
                r,
                BlockRequest::Explicit(truth.blocks.clone()),
            );
            let (p2, _, _) = random_instance(&spec2, &mut rng).unwrap();
            let (p3, _, _) = random_instance(&spec2, &mut rng).unwrap();

            assert!(equivalent(&p1, &p1).unwrap(), "reflexive {case:?} r={r}");
            assert!(equivalent(&p1, &p2).unwrap(), "scramble-invariant {case:?} r={r}");
            assert!(equivalent(&p2, &p1).unwrap(), "symmetric {case:?} r={r}");
            assert!(
                equivalent(&p2, &p3).unwrap() && equivalent(&p1, &p3).unwrap(),
                "transitive {case:?} r={r}"
            );
        }
    }
}

/// A dimension budget that no admissible block can fill is rejected.
#[test]
fn unfillable_budget_is_inadmissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // every a3 block has dimension 2, so an odd budget cannot be met
    let spec = GeneratorSpec::new(CaseTag::A3, 2, BlockRequest::Budget { dim: 3 });
    assert!(matches!(
        random_instance(&spec, &mut rng),
        Err(Error::Admissibility(_))
    ));
}

/// Generated instances validate tightly before any corruption.
#[test]
fn generated_instances_validate() {
    for case in CaseTag::ALL {
        for r in [3i64, -2] {
            let mut rng = ChaCha8Rng::seed_from_u64(0x6E + case as u64);
            let dim = if matches!(case, CaseTag::A3 | CaseTag::B2) { 4 } else { 3 };
            let spec = GeneratorSpec::new(case, r, BlockRequest::Budget { dim });
            let (pair, _, _) = random_instance(&spec, &mut rng).unwrap();
            let rep = validate_pair(&pair).unwrap();
            assert!(rep.pass(), "{case:?} r={r}: {rep:?}");
            assert!(
                rep.residual("relation").unwrap() < 1e-10,
                "{case:?} r={r}: {rep:?}"
            );
        }
    }
}

/// Catalogs are closed under the case's identification group: applying the
/// orbit map to any template index lands back on a template index.
#[test]
fn catalog_closed_under_orbit_identifications() {
    for case in CaseTag::ALL {
        for r in [2i64, 3, -2, -3] {
            let templates = catalog(case, r).unwrap();
            for b in &templates {
                let rep = orbit_rep(b.index(), case, r).unwrap();
                assert_eq!(
                    rep,
                    b.index(),
                    "{case:?} r={r}: template index is not its own orbit representative"
                );
            }
        }
    }
}
