//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

use std::time::Instant;

use pairform::canon::NormalizeConstraint;
use pairform::scalars::{adjoint_embed, complexify};
use pairform::spectral::{
    eigenbasis_complex, eigenbasis_quaternion, modulus, pairing_image, snap_spectrum, value,
};
use pairform::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALL_R: [i64; 4] = [2, 3, -2, -3];

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn budget_specs(case: CaseTag, r: i64, seed: u64) -> GeneratorSpec {
    // dimensions cycle through 1..8; skew cases need even dimensions
    let mut dim = 1 + (seed as usize % 8);
    if matches!(case, CaseTag::A3 | CaseTag::B2) && dim % 2 == 1 {
        dim += 1;
    }
    GeneratorSpec::new(case, r, BlockRequest::Budget { dim })
}

fn seeded(case: CaseTag, r: i64, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(1_000_003) ^ (case as u64) << 8 ^ (r as u64 & 0xff),
    )
}

// -------------------------------------------------------------------------
// 1. round-trip recovery
// -------------------------------------------------------------------------

#[test]
fn criterion_1_round_trip_recovery() {
    let start = Instant::now();
    let mut count = 0usize;
    let mut worst = 0.0f64;
    for case in CaseTag::ALL {
        for r in ALL_R {
            for seed in 0..50u64 {
                let mut rng = seeded(case, r, seed);
                let spec = budget_specs(case, r, seed);
                let (pair, truth, _) =
                    random_instance(&spec, &mut rng).expect("admissible budget");
                let (form, witness) = match canonicalize(&pair) {
                    Ok(ok) => ok,
                    Err(e) => {
                        report(
                            "1 (round-trip recovery)",
                            false,
                            &format!("{case:?} r={r} seed={seed}: {e}"),
                        );
                        return;
                    }
                };
                if form != truth {
                    report(
                        "1 (round-trip recovery)",
                        false,
                        &format!("{case:?} r={r} seed={seed}: multiset mismatch"),
                    );
                    return;
                }
                worst = worst
                    .max(witness.residual_similarity)
                    .max(witness.residual_congruence);
                count += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 (round-trip recovery)",
        worst < 1e-6 && elapsed < 60.0,
        &format!("{count} instances, worst residual {worst:.3e}, {elapsed:.1}s"),
    );
}

// -------------------------------------------------------------------------
// 2. catalog counts against a brute-force residue oracle
// -------------------------------------------------------------------------

#[test]
fn criterion_2_catalog_counts() {
    // independent enumeration over k in Z/m
    let orbit_a1 = |k: u32, m: u32, r: i64| -> u32 {
        let rk = (r * k as i64).rem_euclid(m as i64) as u32;
        k.min(rk)
    };

    // a1, r = 2 (m = 3): zero block, fixed points of k -> 2k, and orbits
    let m = 3u32;
    let fixed: Vec<u32> = (0..m).filter(|&k| (2 * k) % m == k).collect();
    let orbits: Vec<u32> = (0..m)
        .filter(|&k| (2 * k) % m != k && orbit_a1(k, m, 2) == k)
        .collect();
    let expect_a1 = 1 + fixed.len() + orbits.len();
    let got_a1 = catalog(CaseTag::A1, 2).unwrap().len();

    // a2, r = 2: every residue satisfies 2k = -k mod 3, two signs each,
    // plus the zero block with two signs
    let self_paired: Vec<u32> = (0..m).filter(|&k| (3 * k) % m == 0).collect();
    let expect_a2 = 2 * (1 + self_paired.len());
    let got_a2 = catalog(CaseTag::A2, 2).unwrap().len();

    // a2, r = 3 (m = 8): self-paired residues are exactly {0, 2, 4, 6}
    let m8 = 8u32;
    let sp8: Vec<u32> = (0..m8).filter(|&k| (4 * k) % m8 == 0).collect();
    let got_sp8: Vec<u32> = catalog(CaseTag::A2, 3)
        .unwrap()
        .iter()
        .filter_map(|b| match b {
            CanonicalBlock::One {
                index: EigIndex::Root(k),
                scalar: FormScalar::PlusOne,
            } => Some(*k),
            _ => None,
        })
        .collect();

    // b1: ([-1], +/-1) absent for r = 2, present for r = 3
    let minus_one_blocks = |r: i64| -> usize {
        let m = modulus(r).unwrap();
        catalog(CaseTag::B1, r)
            .unwrap()
            .iter()
            .filter(|b| value(b.index(), m) == C64::new(-1.0, 0.0))
            .count()
    };

    let pass = got_a1 == 3
        && expect_a1 == 3
        && got_a2 == 8
        && expect_a2 == 8
        && got_sp8 == sp8
        && sp8 == vec![0, 2, 4, 6]
        && minus_one_blocks(2) == 0
        && minus_one_blocks(3) == 2;
    report(
        "2 (catalog counts)",
        pass,
        &format!(
            "a1/r2: {got_a1} (want 3), a2/r2: {got_a2} (want 8), a2/r3 self-paired {got_sp8:?}, \
             b1 minus-one blocks r2/r3: {}/{}",
            minus_one_blocks(2),
            minus_one_blocks(3)
        ),
    );
}

// -------------------------------------------------------------------------
// 3. quaternion rigidity triple
// -------------------------------------------------------------------------

fn quat_pair_1x1(case: CaseTag, r: i64, a: Quaternion, f: Quaternion) -> MatrixPair {
    MatrixPair::new(
        PairData::Quat {
            a: Mat::from_rows(&[vec![a]]),
            f: Mat::from_rows(&[vec![f]]),
        },
        Context::for_case(case, r),
    )
    .unwrap()
}

#[test]
fn criterion_3_rigidity_triple() {
    let i = Quaternion::I;
    let one = Quaternion::ONE;

    let c1_rigid = !equivalent(
        &quat_pair_1x1(CaseTag::C1, 3, i, one),
        &quat_pair_1x1(CaseTag::C1, 3, i, -one),
    )
    .unwrap();
    let c2_absorbs = equivalent(
        &quat_pair_1x1(CaseTag::C2, 3, one, one),
        &quat_pair_1x1(CaseTag::C2, 3, one, -one),
    )
    .unwrap();
    let c2_rigid = !equivalent(
        &quat_pair_1x1(CaseTag::C2, 3, i, one),
        &quat_pair_1x1(CaseTag::C2, 3, i, -one),
    )
    .unwrap();

    report(
        "3 (rigidity triple over H)",
        c1_rigid && c2_absorbs && c2_rigid,
        &format!(
            "c1 ([i],+-1) inequivalent: {c1_rigid}, c2 ([1],+-1) equivalent: {c2_absorbs}, \
             c2 ([i],+-1) inequivalent: {c2_rigid}"
        ),
    );
}

// -------------------------------------------------------------------------
// 4. real rigidity
// -------------------------------------------------------------------------

fn real_pair(case: CaseTag, r: i64, a: &Mat<f64>, f: &Mat<f64>) -> MatrixPair {
    MatrixPair::new(
        PairData::Real {
            a: a.clone(),
            f: f.clone(),
        },
        Context::for_case(case, r),
    )
    .unwrap()
}

#[test]
fn criterion_4_real_rigidity() {
    // r = 2: mu = omega satisfies mu^2 = conj(mu); (mu^R, I2) vs (mu^R, -I2)
    let omega_r = {
        let th = 2.0 * std::f64::consts::PI / 3.0;
        Mat::from_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]])
    };
    let id2 = Mat::<f64>::identity(2);
    let p = real_pair(CaseTag::B1, 2, &omega_r, &id2);
    let q = real_pair(CaseTag::B1, 2, &omega_r, &id2.scale(-1.0));
    assert!(validate_pair(&p).unwrap().pass());
    let i2_rigid = !equivalent(&p, &q).unwrap();

    // lambda^r = lambda with lambda nonreal needs a negative exponent in
    // the acceptance set: r = -2 fixes omega, r = -3 fixes i
    let z = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    let mut z_absorbs = true;
    for (r, lam_r) in [
        (-2i64, omega_r.clone()),
        (-3i64, Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]])),
    ] {
        let p = real_pair(CaseTag::B1, r, &lam_r, &z);
        let q = real_pair(CaseTag::B1, r, &lam_r, &z.scale(-1.0));
        assert!(
            validate_pair(&p).unwrap().pass(),
            "lambda^r = lambda instance must validate at r = {r}"
        );
        z_absorbs &= equivalent(&p, &q).unwrap();
    }

    report(
        "4 (real rigidity)",
        i2_rigid && z_absorbs,
        &format!("(mu^R, +-I2) inequivalent: {i2_rigid}, (lambda^R, +-Z) equivalent: {z_absorbs}"),
    );
}

// -------------------------------------------------------------------------
// 5. derived identity A^(r^2) = A on 1000 random validated instances
// -------------------------------------------------------------------------

#[test]
fn criterion_5_derived_identity() {
    let mut count = 0usize;
    let mut worst = 0.0f64;
    'outer: for seed in 0..28u64 {
        for case in CaseTag::ALL {
            for r in ALL_R {
                let mut rng = seeded(case, r, 0xD0 + seed);
                let spec = budget_specs(case, r, seed);
                let (pair, _, _) = random_instance(&spec, &mut rng).expect("admissible");
                let rep = validate_pair(&pair).unwrap();
                assert!(rep.pass(), "{case:?} r={r} seed={seed}: {rep:?}");
                let resid = rep.residual("derived_a_pow_r2").unwrap();
                worst = worst.max(resid);
                count += 1;
                if count >= 1000 {
                    break 'outer;
                }
            }
        }
    }
    report(
        "5 (derived identity)",
        count >= 1000 && worst < 1e-7,
        &format!("{count} instances, worst ||A^(r^2) - A||/||A|| = {worst:.3e}"),
    );
}

// -------------------------------------------------------------------------
// 6. eigenspace orthogonality oracle
// -------------------------------------------------------------------------

#[test]
fn criterion_6_eigenspace_orthogonality() {
    let tol = 1e-6;
    let eps_rank = 1e-9;
    let mut count = 0usize;
    let mut worst = 0.0f64;
    'outer: for seed in 0..6u64 {
        for case in CaseTag::ALL {
            for r in ALL_R {
                let mut rng = seeded(case, r, 0xE0 + seed);
                let spec = budget_specs(case, r, seed + 2);
                let (pair, _, _) = random_instance(&spec, &mut rng).expect("admissible");
                let inv = pair.context.involution;
                let m = modulus(r).unwrap();

                match &pair.data {
                    PairData::Complex { a, f } => {
                        let fnorm = f.frobenius();
                        let spectrum = snap_spectrum(a, r, Field::C, tol, eps_rank).unwrap();
                        let entries = spectrum.report().entries.clone();
                        for (x, _) in &entries {
                            let bx = eigenbasis_complex(a, &spectrum, *x, tol, eps_rank).unwrap();
                            let px = pairing_image(*x, case, r).unwrap();
                            for (y, _) in &entries {
                                if *y == px {
                                    continue;
                                }
                                let by =
                                    eigenbasis_complex(a, &spectrum, *y, tol, eps_rank).unwrap();
                                let g = bx.st(inv).matmul(f).matmul(&by).frobenius();
                                worst = worst.max(g / fnorm);
                            }
                        }
                    }
                    PairData::Real { a, f } => {
                        let ac = complexify(a);
                        let fc = complexify(f);
                        let fnorm = fc.frobenius();
                        let spectrum = snap_spectrum(&ac, r, Field::R, tol, eps_rank).unwrap();
                        let entries = spectrum.report().entries.clone();
                        for (x, _) in &entries {
                            let bx = eigenbasis_complex(&ac, &spectrum, *x, tol, eps_rank).unwrap();
                            let px = pairing_image(*x, case, r).unwrap();
                            for (y, _) in &entries {
                                if *y == px {
                                    continue;
                                }
                                let by =
                                    eigenbasis_complex(&ac, &spectrum, *y, tol, eps_rank).unwrap();
                                let g = bx.st(inv).matmul(&fc).matmul(&by).frobenius();
                                worst = worst.max(g / fnorm);
                            }
                        }
                    }
                    PairData::Quat { a, f } => {
                        let ae = adjoint_embed(a);
                        let fnorm = f.frobenius();
                        let spectrum = snap_spectrum(&ae, r, Field::H, tol, eps_rank).unwrap();
                        let entries = spectrum.report().entries.clone();
                        let std_upper = |x: EigIndex| match x {
                            EigIndex::Root(k) if 2 * k > m => EigIndex::Root(m - k),
                            other => other,
                        };
                        for (x, _) in &entries {
                            let bx =
                                eigenbasis_quaternion(&ae, &spectrum, *x, tol, eps_rank).unwrap();
                            let px = std_upper(pairing_image(*x, case, r).unwrap());
                            for (y, _) in &entries {
                                if *y == px {
                                    continue;
                                }
                                let by = eigenbasis_quaternion(&ae, &spectrum, *y, tol, eps_rank)
                                    .unwrap();
                                let g = bx.st(inv).matmul(f).matmul(&by).frobenius();
                                worst = worst.max(g / fnorm);
                            }
                        }
                    }
                }
                count += 1;
                if count >= 200 {
                    break 'outer;
                }
            }
        }
    }
    report(
        "6 (eigenspace orthogonality)",
        count >= 200 && worst < 1e-7,
        &format!("{count} instances, worst ||Bx^st F By||/||F|| = {worst:.3e}"),
    );
}

// -------------------------------------------------------------------------
// 7. Sylvester property
// -------------------------------------------------------------------------

#[test]
fn criterion_7_sylvester() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51);
    let mut gauss = move || -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut checked = 0usize;
    let mut pass = true;

    for trial in 0..100usize {
        let n = 1 + trial % 8;
        let field = [Field::R, Field::C, Field::H][trial % 3];
        let (g, inv): (FieldMat, Involution) = match field {
            Field::R => {
                let m = Mat::from_fn(n, n, |_, _| gauss());
                (
                    FieldMat::Real(m.add(&m.transpose()).scale(0.5)),
                    Involution::Identity,
                )
            }
            Field::C => {
                let m = Mat::from_fn(n, n, |_, _| C64::new(gauss(), gauss()));
                (
                    FieldMat::Complex(m.add(&m.st(Involution::ComplexConj)).scale(0.5)),
                    Involution::ComplexConj,
                )
            }
            Field::H => {
                let m = Mat::from_fn(n, n, |_, _| {
                    Quaternion::new(gauss(), gauss(), gauss(), gauss())
                });
                (
                    FieldMat::Quat(m.add(&m.st(Involution::QuatConj)).scale(0.5)),
                    Involution::QuatConj,
                )
            }
        };
        let base = match inertia(&g, inv) {
            Ok(pq) => pq,
            Err(_) => continue, // near-singular sample: skip
        };
        // a random congruence must preserve the inertia
        let congruent = match &g {
            FieldMat::Real(gm) => {
                let x = Mat::from_fn(n, n, |_, _| gauss());
                FieldMat::Real(x.st(inv).matmul(gm).matmul(&x))
            }
            FieldMat::Complex(gm) => {
                let x = Mat::from_fn(n, n, |_, _| C64::new(gauss(), gauss()));
                FieldMat::Complex(x.st(inv).matmul(gm).matmul(&x))
            }
            FieldMat::Quat(gm) => {
                let x = Mat::from_fn(n, n, |_, _| {
                    Quaternion::new(gauss(), gauss(), gauss(), gauss())
                });
                FieldMat::Quat(x.st(inv).matmul(gm).matmul(&x))
            }
        };
        match inertia(&congruent, inv) {
            Ok(pq) => {
                checked += 1;
                if pq != base {
                    pass = false;
                }
            }
            Err(_) => continue, // congruence landed near-singular: skip
        }
    }
    report(
        "7 (Sylvester property)",
        pass && checked >= 80,
        &format!("{checked} congruences checked, all inertia-invariant: {pass}"),
    );
}

// -------------------------------------------------------------------------
// 8. scalar-orbit reachability oracle
// -------------------------------------------------------------------------

fn involve_case(c: Quaternion, case: CaseTag) -> Quaternion {
    match case.involution() {
        Involution::QuatConj => c.conj(),
        Involution::QuatSemiconj => c.semiconj(),
        _ => c,
    }
}

fn orbit_point(q: Quaternion, c: Quaternion, case: CaseTag) -> Quaternion {
    involve_case(q, case) * c * q
}

fn random_unit(rng: &mut ChaCha8Rng, constraint: NormalizeConstraint) -> Quaternion {
    let gauss = |rng: &mut ChaCha8Rng| -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let q = match constraint {
        NormalizeConstraint::ComplexOnly => Quaternion::new(gauss(rng), gauss(rng), 0.0, 0.0),
        NormalizeConstraint::FullH => {
            Quaternion::new(gauss(rng), gauss(rng), gauss(rng), gauss(rng))
        }
    };
    if q.abs() < 1e-6 {
        Quaternion::ONE
    } else {
        q.scale(1.0 / q.abs())
    }
}

/// Distance from the orbit {q~ c q : |q| = 1} to `target`, by dense random
/// search followed by a shrinking local walk. Independent of the
/// closed-form normalizer.
fn orbit_distance(
    c_unit: Quaternion,
    case: CaseTag,
    constraint: NormalizeConstraint,
    target: Quaternion,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut best_q = Quaternion::ONE;
    let mut best = (orbit_point(best_q, c_unit, case) - target).abs();
    for _ in 0..100_000 {
        let q = random_unit(rng, constraint);
        let d = (orbit_point(q, c_unit, case) - target).abs();
        if d < best {
            best = d;
            best_q = q;
        }
    }
    let mut step = 0.1;
    for _ in 0..400 {
        let delta = random_unit(rng, constraint).scale(step);
        let q = {
            let s = best_q + delta;
            let (c1, c2) = s.complex_parts();
            let cand = match constraint {
                NormalizeConstraint::ComplexOnly => Quaternion::from_complex_parts(
                    c1,
                    C64::new(0.0, 0.0),
                ),
                NormalizeConstraint::FullH => Quaternion::from_complex_parts(c1, c2),
            };
            if cand.abs() < 1e-9 {
                best_q
            } else {
                cand.scale(1.0 / cand.abs())
            }
        };
        let d = (orbit_point(q, c_unit, case) - target).abs();
        if d < best {
            best = d;
            best_q = q;
        } else {
            step *= 0.97;
        }
    }
    best
}

#[test]
fn criterion_8_scalar_orbit_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c);
    let catalog_scalars = [
        FormScalar::PlusOne,
        FormScalar::MinusOne,
        FormScalar::PlusI,
        FormScalar::MinusI,
        FormScalar::PlusJ,
    ];

    // admissible scalar samplers per case/constraint species
    let mut samples: Vec<(CaseTag, NormalizeConstraint, Vec<Quaternion>)> = Vec::new();
    let spread = |rng: &mut ChaCha8Rng| -> f64 {
        let mag: f64 = rng.gen_range(0.5..2.0);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    let mut reals = Vec::new();
    let mut imags = Vec::new();
    let mut c2_full = Vec::new();
    let mut c3_full = Vec::new();
    let mut wj = Vec::new();
    for _ in 0..20 {
        reals.push(Quaternion::from_real(spread(&mut rng)));
        imags.push(Quaternion::new(0.0, spread(&mut rng), 0.0, 0.0));
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mag: f64 = rng.gen_range(0.5..2.0);
        wj.push(Quaternion::new(0.0, 0.0, mag * theta.cos(), mag * theta.sin()));
        // unit directions in the semiconjugation-fixed space R + Rj + Rk
        let v = Quaternion::new(spread(&mut rng), 0.0, spread(&mut rng), spread(&mut rng));
        c2_full.push(v);
        // purely imaginary quaternions for c3
        let v = Quaternion::new(0.0, spread(&mut rng), spread(&mut rng), spread(&mut rng));
        c3_full.push(v);
    }
    samples.push((CaseTag::C1, NormalizeConstraint::ComplexOnly, reals.clone()));
    samples.push((CaseTag::C1, NormalizeConstraint::FullH, reals.clone()));
    samples.push((CaseTag::C2, NormalizeConstraint::ComplexOnly, reals.clone()));
    samples.push((CaseTag::C2, NormalizeConstraint::ComplexOnly, wj.clone()));
    samples.push((CaseTag::C2, NormalizeConstraint::FullH, c2_full));
    samples.push((CaseTag::C3, NormalizeConstraint::ComplexOnly, imags.clone()));
    samples.push((CaseTag::C3, NormalizeConstraint::ComplexOnly, wj.clone()));
    samples.push((CaseTag::C3, NormalizeConstraint::FullH, c3_full));
    samples.push((CaseTag::C4, NormalizeConstraint::ComplexOnly, imags.clone()));
    samples.push((CaseTag::C4, NormalizeConstraint::FullH, imags.clone()));

    let mut tested = 0usize;
    for (case, constraint, cs) in samples {
        for c in cs {
            let claimed = canon::reachable_scalars(c, constraint, case).unwrap();
            let c_unit = c.scale(1.0 / c.abs());
            let mut oracle = Vec::new();
            for s in catalog_scalars {
                let d = orbit_distance(c_unit, case, constraint, s.quat(), &mut rng);
                if d < 1e-3 {
                    oracle.push(s);
                } else if d < 1e-1 {
                    report(
                        "8 (scalar-orbit reachability)",
                        false,
                        &format!(
                            "{case:?} {constraint:?} c={c:?}: scalar {s:?} ambiguous at {d:.2e}"
                        ),
                    );
                    return;
                }
            }
            if oracle != claimed {
                report(
                    "8 (scalar-orbit reachability)",
                    false,
                    &format!(
                        "{case:?} {constraint:?} c={c:?}: oracle {oracle:?} vs table {claimed:?}"
                    ),
                );
                return;
            }
            // the closed-form normalizer must land on a reachable target
            let (target, q) = scalar_orbit_normalize(c, constraint, case).unwrap();
            let res = involve_case(q, case) * c * q;
            let err = (res - target.quat()).abs();
            if err > 1e-9 || !claimed.contains(&target) {
                report(
                    "8 (scalar-orbit reachability)",
                    false,
                    &format!("{case:?} {constraint:?} c={c:?}: normalizer residual {err:.2e}"),
                );
                return;
            }
            tested += 1;
        }
    }
    report(
        "8 (scalar-orbit reachability)",
        tested == 200,
        &format!("{tested} sampled scalars agree with the search oracle"),
    );
}
