//! Per-template coverage: every catalog entry of every case, across an
//! exponent range wide enough to realize all block species (the [j]-scalar
//! and within-class hyperbolic species over H need |r| >= 4), round-trips
//! under a random scramble, alone and with multiplicity two.

use pairform::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_template_round_trips_under_scramble() {
    let mut j_species_seen = 0usize;
    let mut hyperbolic_class_seen = 0usize;
    for case in CaseTag::ALL {
        for r in [2i64, 3, 4, 5, -2, -3, -4, -5] {
            let templates = catalog(case, r).unwrap();
            for (t_idx, b) in templates.iter().enumerate() {
                if matches!(
                    b,
                    CanonicalBlock::One {
                        scalar: FormScalar::PlusJ,
                        ..
                    }
                ) {
                    j_species_seen += 1;
                }
                if matches!(case, CaseTag::C1 | CaseTag::C4) {
                    if let CanonicalBlock::Two { index, .. } = b {
                        let m = (r * r - 1) as u32;
                        if let EigIndex::Root(k) = index {
                            if (r * *k as i64).rem_euclid(m as i64) as u32 == *k {
                                hyperbolic_class_seen += 1;
                            }
                        }
                    }
                }
                for copies in [1usize, 2] {
                    let mut rng = ChaCha8Rng::seed_from_u64(
                        (case as u64) << 40
                            | (r.unsigned_abs()) << 32
                            | (t_idx as u64) << 8
                            | copies as u64,
                    );
                    let spec = GeneratorSpec::new(
                        case,
                        r,
                        BlockRequest::Explicit(vec![*b; copies]),
                    );
                    let (pair, truth, _) = random_instance(&spec, &mut rng)
                        .unwrap_or_else(|e| panic!("{case:?} r={r} {b:?} x{copies}: {e}"));
                    let (form, w) = canonicalize(&pair)
                        .unwrap_or_else(|e| panic!("{case:?} r={r} {b:?} x{copies}: {e}"));
                    assert_eq!(form, truth, "{case:?} r={r} {b:?} x{copies}");
                    assert!(
                        w.residual_similarity < 1e-6 && w.residual_congruence < 1e-6,
                        "{case:?} r={r} {b:?} x{copies}: residuals {} {}",
                        w.residual_similarity,
                        w.residual_congruence
                    );
                }
            }
        }
    }
    // the exponent range really does reach the H-only species
    assert!(j_species_seen > 0, "no [j]-scalar template was exercised");
    assert!(
        hyperbolic_class_seen > 0,
        "no within-class hyperbolic template was exercised"
    );
}
