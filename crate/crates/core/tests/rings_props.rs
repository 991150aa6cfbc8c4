use galdef_core::rings::{
    annihilator_of_augmentation, ci_criterion, cotangent_phi, eta, fitting, fixtures, gor_factorization,
    isom_criterion, random_congruence_ring, AlgebraError, AugmentedRing, CiVerdict, Congruence, RingMap,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Brute-force oracle for the fiber product: enumerate ker π = {(0, v)} mod p^N and
/// the square of its generators, returning (ℓΦ, e with η = (p^e)).
fn fiber_product_by_enumeration(p: i64, d: u32, n: u32) -> (u32, u32) {
    let m = p.pow(n);
    let pd = p.pow(d);
    let kernel: Vec<i64> = (0..m).filter(|v| v % pd == 0).collect();
    // (ker π)² is the O-span of the products, a cyclic subgroup of the second coordinate
    let step = kernel
        .iter()
        .flat_map(|&v| kernel.iter().map(move |&w| (v * w) % m))
        .map(|v| if v == 0 { m } else { gcd(v, m) })
        .min()
        .unwrap_or(m);
    let phi = valuation(step / pd, p);
    // (a, b) annihilates every (0, v) iff b v ≡ 0 for all v in the kernel
    let eta = (0..m)
        .flat_map(|a| (0..m).step_by((m / pd) as usize).map(move |b| (a, b)))
        .filter(|&(a, b)| (a - b).rem_euclid(pd) == 0 && kernel.iter().all(|&v| (b * v) % m == 0))
        .map(|(a, _)| if a == 0 { n } else { valuation(a, p) })
        .min()
        .unwrap_or(n);
    (phi, eta)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn valuation(mut a: i64, p: i64) -> u32 {
    let mut v = 0;
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

#[test]
fn fiber_product_family() {
    for d in 1..=3 {
        let (phi_oracle, eta_oracle) = fiber_product_by_enumeration(5, d, 2 * d + 1);
        assert_eq!((phi_oracle, eta_oracle), (d, d));
        let a = AugmentedRing::fiber_product(5, d).unwrap();
        assert_eq!(cotangent_phi(&a).unwrap().length, d);
        assert_eq!(eta(&a).unwrap(), Some(d));
        let fit = fitting(&a).unwrap();
        assert_eq!(fit.pi_exponent, Some(d));
        assert!(fit.contained_in_annihilator);
        let ci = ci_criterion(&a, None).unwrap();
        assert_eq!(ci.verdict, CiVerdict::CompleteIntersection);
        assert_eq!(ci.length_gap, Some(0));
    }
}

#[test]
fn three_copy_ring() {
    let a = AugmentedRing::three_copies(5).unwrap();
    assert_eq!(cotangent_phi(&a).unwrap().exponents, vec![1, 1]);
    assert_eq!(eta(&a).unwrap(), Some(1));
    let ci = ci_criterion(&a, None).unwrap();
    assert_eq!(ci.verdict, CiVerdict::NotCompleteIntersection);
    assert_eq!((ci.phi_length, ci.eta_length), (2, Some(1)));
    let fit = fitting(&a).unwrap();
    // π(Fitt) strictly inside π(Ann)
    assert!(fit.pi_exponent.map_or(true, |e| e > 1), "{:?}", fit.pi_exponent);
    assert!(fit.contained_in_annihilator);
}

#[test]
fn annihilator_of_fiber_product_is_first_coordinate() {
    let a = AugmentedRing::fiber_product(5, 2).unwrap();
    let ann = annihilator_of_augmentation(&a).unwrap();
    // {(u, 0) : 25 | u} = 25·(1,1) − (0,25): a single free generator
    assert_eq!(ann.exponents, vec![a.precision]);
}

#[test]
fn isomorphism_criterion() {
    let fp = AugmentedRing::fiber_product(5, 2).unwrap();
    let id = isom_criterion(&RingMap::identity(fp)).unwrap();
    assert!(id.certified);
    assert_eq!(id.kernel_length, Some(0));

    let proj = isom_criterion(&fixtures::projection(5, 2).unwrap()).unwrap();
    assert_eq!((proj.phi_source, proj.eta_target), (2, Some(0)));
    assert!(!proj.certified);
    assert_eq!(proj.kernel_length, None);

    for d in 1..=3 {
        let r = isom_criterion(&fixtures::quadratic_to_fiber(5, d).unwrap()).unwrap();
        assert!(r.certified, "{r:?}");
        assert_eq!(r.kernel_length, Some(0));
    }
}

#[test]
fn augmentation_mismatch_rejected() {
    let a = AugmentedRing::fiber_product(5, 1).unwrap();
    // sending (1,1) ↦ 1 and (0,5) ↦ 5 is multiplicative but π_A((0,5)) = 0
    let e = RingMap::new(a, fixtures::base(5).unwrap(), vec![vec![1], vec![5]]).unwrap_err();
    assert_eq!(e, AlgebraError::NotAugCompatible);
}

#[test]
fn gorenstein_factorization() {
    for d in 1..=3 {
        let r = gor_factorization(&fixtures::projection(5, d).unwrap()).unwrap();
        assert_eq!((r.lhs, r.kernel_factor, r.target_factor), (Some(d), Some(d), Some(0)));
        assert!(r.equal);
        let fp = AugmentedRing::fiber_product(5, d).unwrap();
        assert!(gor_factorization(&RingMap::identity(fp)).unwrap().equal);
    }
    let e = gor_factorization(&fixtures::drop_third(5).unwrap()).unwrap_err();
    assert!(matches!(e, AlgebraError::WitnessMissing(_)));
}

#[test]
fn quadratic_table_matches_fiber_product() {
    for d in 1..=3 {
        let q = fixtures::quadratic_ci(5, d).unwrap();
        let fp = AugmentedRing::fiber_product(5, d).unwrap();
        assert_eq!(ci_criterion(&q, None).unwrap(), ci_criterion(&fp, None).unwrap());
    }
}

#[test]
fn invalid_tables_rejected() {
    // X² = X + 1 is not local over Z_5 (discriminant 5 gives one place, but π(X)² ≠ π(X) + 1 for π(X) = 0)
    let structure = vec![vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![1, 1]]];
    let e = AugmentedRing::from_table(5, vec![None, None], structure, vec![1, 0], vec![1, 0], Default::default(), None);
    assert!(e.is_err());
    // non-associative table
    let structure = vec![
        vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        vec![vec![0, 1, 0], vec![0, 0, 5], vec![0, 0, 0]],
        vec![vec![0, 0, 1], vec![0, 0, 0], vec![0, 5, 0]],
    ];
    let e = AugmentedRing::from_table(5, vec![None; 3], structure, vec![1, 0, 0], vec![1, 0, 0], Default::default(), None);
    assert!(matches!(e, Err(AlgebraError::InvalidRing(_))));
    // disconnected congruences split the ring
    let c = Congruence { i: 0, j: 1, exponent: 1 };
    assert_eq!(AugmentedRing::congruence_subring(5, 3, &[c], 0, None).unwrap_err(), AlgebraError::NotLocal);
}

#[test]
fn generated_family_satisfies_the_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut count = 0;
    for _ in 0..120 {
        let a = random_congruence_ring(5, &mut rng).unwrap();
        let ci = ci_criterion(&a, None).unwrap();
        let eta_len = ci.eta_length.expect("η nonzero on a connected congruence ring");
        assert!(ci.phi_length >= eta_len, "{a:?}");
        let fit = fitting(&a).unwrap();
        assert!(fit.contained_in_annihilator);
        assert!(fit.pi_exponent.map_or(true, |e| e >= eta_len));
        count += 1;
    }
    assert!(count >= 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inequality_holds_for_any_seed(seed: u64, p in prop::sample::select(vec![3u64, 5, 7])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_congruence_ring(p, &mut rng).unwrap();
        let ci = ci_criterion(&a, None).unwrap();
        prop_assert!(ci.length_gap.unwrap() >= 0);
        prop_assert!(ci.verdict != CiVerdict::Inconclusive);
    }

    #[test]
    fn fiber_products_are_ci(d in 1u32..=3, p in prop::sample::select(vec![3u64, 5, 7, 11])) {
        let a = AugmentedRing::fiber_product(p, d).unwrap();
        let ci = ci_criterion(&a, None).unwrap();
        prop_assert_eq!(ci.verdict, CiVerdict::CompleteIntersection);
        prop_assert_eq!(ci.phi_length, d);
    }
}
