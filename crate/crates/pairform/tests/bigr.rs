use pairform::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn larger_exponents_round_trip() {
    let mut failures = Vec::new();
    for case in CaseTag::ALL {
        for r in [4i64, 5, -5, 8, -13] {
            for seed in 0..3u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed + case as u64 * 7 + r.unsigned_abs());
                let dim = if matches!(case, CaseTag::A3 | CaseTag::B2) { 6 } else { 5 };
                let spec = GeneratorSpec::new(case, r, BlockRequest::Budget { dim });
                let (pair, truth, _) = match random_instance(&spec, &mut rng) {
                    Ok(x) => x,
                    Err(e) => { failures.push(format!("{case:?} r={r} s={seed}: GEN {e}")); continue; }
                };
                match canonicalize(&pair) {
                    Ok((form, w)) => {
                        if form != truth { failures.push(format!("{case:?} r={r} s={seed}: MISMATCH")); }
                        if w.residual_similarity > 1e-6 || w.residual_congruence > 1e-6 {
                            failures.push(format!("{case:?} r={r} s={seed}: RESID {} {}", w.residual_similarity, w.residual_congruence));
                        }
                    }
                    Err(e) => failures.push(format!("{case:?} r={r} s={seed}: CANON {e}")),
                }
            }
        }
    }
    assert!(failures.is_empty(), "{}:\n{}", failures.len(), failures.join("\n"));
}
