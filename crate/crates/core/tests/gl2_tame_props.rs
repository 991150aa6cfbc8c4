use galdef_core::gl2::{
    adjoint_act, adjoint_matrix, exp_adjust, geometric_sum, top_level_twist, AdjointVector, AdjustmentClass, GroupElem,
};
use galdef_core::linalg::{kernel, span_length, ZModMatrix};
use galdef_core::tame::{is_special, normalize_special, ramification_level, RamificationLevel, TameGroup, TameRep};
use galdef_core::Zpn;
use proptest::prelude::*;

fn random_gl2(ring: Zpn, e: [u64; 4]) -> GroupElem {
    // force a unit determinant by nudging the diagonal
    let m = ring.modulus() as i64;
    for shift in 0..ring.p() as i64 {
        let entries = [[e[0] as i64 + shift, e[1] as i64], [e[2] as i64, e[3] as i64 + 1]];
        if let Ok(g) = GroupElem::gl2(ring, [[entries[0][0] % m, entries[0][1] % m], [entries[1][0] % m, entries[1][1] % m]]) {
            return g;
        }
    }
    GroupElem::identity(ring)
}

fn nice_q(p: u64, raw: u64, modulus: u64) -> u64 {
    let mut q = raw % modulus;
    while q % p == 0 || q % p == 1 || q % p == p - 1 {
        q = (q + 1) % modulus;
    }
    q
}

/// Random valid rep: a special normal form with a torus scalar, conjugated.
fn random_rep(p: u64, n: u32, seed: &[u64]) -> TameRep {
    let ring = Zpn::new(p, n).unwrap();
    let q = nice_q(p, seed[0], ring.modulus());
    let g = TameGroup::over(ring, q as i64).unwrap();
    let e = 1 + (seed[1] % n as u64) as u32;
    let u = 1 + seed[2] % (p - 1);
    let base = TameRep::special(g, e, u).unwrap();
    let c0 = 1 + seed[3] % (p - 1);
    let shift = ring.mul(ring.p_pow((n - e).max(1)), seed[8] % p);
    let scalar = GroupElem::diag(ring, ring.mul(c0, 1 + shift), c0).unwrap();
    let rep = TameRep::new(g, base.sigma.mul(&scalar), base.tau.clone()).unwrap();
    let c = random_gl2(ring, [seed[4], seed[5], seed[6], seed[7]]);
    rep.conjugate(&c)
}

fn mod_p_cocycles(rep: &TameRep) -> Vec<Vec<u64>> {
    let k = rep.group.ring().residue_field();
    let ms = adjoint_matrix(&rep.sigma.reduce_to(k));
    let mt = adjoint_matrix(&rep.tau.reduce_to(k));
    let q = rep.group.q();
    let a_part = ZModMatrix::identity(k, 3).sub(&mt.pow(q));
    let b_part = geometric_sum(&mt, q).sub(&ms).scale(k.neg(1));
    kernel(&a_part.hstack(&b_part))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn adjustment_preserves_relation(
        p in prop::sample::select(vec![5u64, 7]),
        m in 2u32..=4,
        seed in prop::collection::vec(0u64..10_000, 12),
    ) {
        let rep = random_rep(p, m, &seed);
        let k = rep.group.ring().residue_field();
        let z = mod_p_cocycles(&rep);
        prop_assert!(!z.is_empty());
        let mut v = vec![0u64; 6];
        for (i, g) in z.iter().enumerate() {
            let c = seed[8 + i % 4] % p;
            for j in 0..6 {
                v[j] = k.add(v[j], k.mul(c, g[j]));
            }
        }
        let f = AdjustmentClass::new(AdjointVector::from_coords(k, &v[..3]), AdjointVector::from_coords(k, &v[3..]));
        let (s, t) = exp_adjust(&rep.sigma, &rep.tau, rep.group.q(), &f, m).unwrap();
        let adjusted = TameRep::new(rep.group, s.clone(), t.clone());
        prop_assert!(adjusted.is_ok());
        let adjusted = adjusted.unwrap();
        prop_assert_eq!(s.det(), rep.sigma.det());
        prop_assert_eq!(t.det(), rep.tau.det());
        // congruent below the top level
        prop_assert_eq!(adjusted.reduce_to(m - 1).unwrap(), rep.reduce_to(m - 1).unwrap());
        // ramification only changes at levels >= m - 1
        let before = ramification_level(&rep).unwrap();
        let after = ramification_level(&adjusted).unwrap();
        let low = |l: RamificationLevel| match l { RamificationLevel::Unramified => m, RamificationLevel::Level(e) => e };
        if low(before) < m - 1 {
            prop_assert_eq!(before, after);
        } else {
            prop_assert!(low(after) >= m - 1);
        }
    }

    #[test]
    fn normal_form_idempotent_and_invariant(
        p in prop::sample::select(vec![5u64, 7]),
        n in 2u32..=4,
        seed in prop::collection::vec(0u64..10_000, 12),
    ) {
        let rep = random_rep(p, n, &seed);
        let nf = normalize_special(&rep).unwrap();
        prop_assert_eq!(rep.conjugate(&nf.conjugator), nf.rep.clone());
        let again = normalize_special(&nf.rep).unwrap();
        prop_assert!(again.conjugator.is_identity());
        prop_assert_eq!(again.rep, nf.rep.clone());
        let c = random_gl2(rep.group.ring(), [seed[8], seed[9], seed[10], seed[11]]);
        let moved = rep.conjugate(&c);
        let v1 = is_special(&rep).unwrap();
        let v2 = is_special(&moved).unwrap();
        prop_assert_eq!(v1, v2);
        // conjugator composition law
        let nf2 = normalize_special(&moved).unwrap();
        prop_assert_eq!(moved.conjugate(&nf2.conjugator), rep.conjugate(&nf2.conjugator.mul(&c)));
    }
}

#[test]
fn twist_flips_specialness_only_at_top_level() {
    for p in [5u64, 7] {
        for n in 2u32..=4 {
            let ring = Zpn::new(p, n).unwrap();
            for q in 2..p - 1 {
                let g = TameGroup::over(ring, q as i64 + p as i64).unwrap();
                for e in 1..=n {
                    let rep = TameRep::special(g, e, 1).unwrap();
                    assert!(is_special(&rep).unwrap().special);
                    let twisted = TameRep::new(g, rep.sigma.mul(&top_level_twist(ring)), rep.tau.clone()).unwrap();
                    assert!(!is_special(&twisted).unwrap().special, "p={p} n={n} q={q} e={e}");
                    assert!(is_special(&twisted.reduce_to(n - 1).unwrap()).unwrap().special);
                }
            }
        }
    }
}

#[test]
fn sl2_orbits_span_adjoint_module() {
    for p in [5u64, 7, 11] {
        let k = Zpn::new(p, 1).unwrap();
        let gens = [
            GroupElem::sl2(k, [[1, 1], [0, 1]]).unwrap(),
            GroupElem::sl2(k, [[1, 0], [1, 1]]).unwrap(),
        ];
        for start in [AdjointVector::h_basis(k), AdjointVector::e_basis(k), AdjointVector::f_basis(k)] {
            // closure of the orbit under the generators
            let mut orbit = vec![start];
            let mut i = 0;
            while i < orbit.len() && orbit.len() < 10_000 {
                for g in &gens {
                    let w = adjoint_act(g, &orbit[i]);
                    if !orbit.contains(&w) {
                        orbit.push(w);
                    }
                }
                i += 1;
            }
            let vecs: Vec<Vec<u64>> = orbit.iter().map(|v| v.coords().to_vec()).collect();
            assert_eq!(span_length(k, 3, &vecs), 3, "p={p}");
        }
    }
}

#[test]
fn nonsplit_witness_for_t_two() {
    let p = 5u64;
    let k = Zpn::new(p, 1).unwrap();
    let a = GroupElem::sl2(k, [[1, 1], [0, 1]]).unwrap();
    assert_eq!(a.order(100), Some(p));
    let ring = Zpn::new(p, 2).unwrap();
    let mut fiber = 0;
    for x in 0..p {
        for y in 0..p {
            for z in 0..p {
                for w in 0..p {
                    let m = [[1 + p * x, 1 + p * y], [p * z, 1 + p * w]];
                    let Ok(g) = GroupElem::sl2(ring, [[m[0][0] as i64, m[0][1] as i64], [m[1][0] as i64, m[1][1] as i64]]) else {
                        continue;
                    };
                    fiber += 1;
                    assert_ne!(g.order(p), Some(p), "found a lift of order p: {:?}", g.matrix());
                }
            }
        }
    }
    assert_eq!(fiber, p.pow(3));
}
