use galdef_core::cohomology::{
    annihilator, check_pairing, class_in_subspace, coboundaries, cohomology_dims, cup_form, cup_inv, full_subspace,
    h1_basis, subspace_length, unramified_subspace, zero_subspace,
};
use galdef_core::linalg::{dot, vec_add};
use galdef_core::tame::{CharSumModule, TameGroup};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_setup(p: u64, n: u32, seed: u64) -> CharSumModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modulus = p.pow(n);
    let q = loop {
        let q = rand::Rng::gen_range(&mut rng, 2..modulus);
        if q % p != 0 {
            break q;
        }
    };
    let group = TameGroup::new(p, n, q as i64).unwrap();
    CharSumModule::random(group, 4, &mut rng)
}

fn setup_strategy() -> impl Strategy<Value = (u64, u32, u64)> {
    (prop::sample::select(vec![5u64, 7]), 1u32..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euler_characteristic_vanishes((p, n, seed) in setup_strategy()) {
        let m = random_setup(p, n, seed);
        let d = cohomology_dims(&m);
        prop_assert_eq!(d.euler_characteristic(), 0, "{:?}", d);
        prop_assert_eq!(subspace_length(&m, &unramified_subspace(&m)), d.h0);
    }

    #[test]
    fn pairing_is_perfect((p, n, seed) in setup_strategy()) {
        let m = random_setup(p, n, seed);
        let md = m.tate_dual().unwrap();
        let r = check_pairing(&m, &md).unwrap();
        prop_assert!(r.perfect, "{:?}", r);
        // complementary exponents: both sides have the same invariant factors
        prop_assert_eq!(r.exponents, r.dual_exponents);
    }

    #[test]
    fn annihilators_are_complementary((p, n, seed) in setup_strategy()) {
        let m = random_setup(p, n, seed);
        let md = m.tate_dual().unwrap();
        let h1 = cohomology_dims(&m).h1;
        let nr = unramified_subspace(&m);
        let perp = annihilator(&m, &md, &nr).unwrap();
        prop_assert_eq!(subspace_length(&m, &nr) + subspace_length(&md, &perp), h1);
        // the unramified subspaces annihilate each other exactly
        let nr_dual = unramified_subspace(&md);
        prop_assert_eq!(subspace_length(&md, &perp), subspace_length(&md, &nr_dual));
        for g in &nr_dual.generators {
            prop_assert!(class_in_subspace(&md, &perp, g));
        }
        prop_assert_eq!(subspace_length(&md, &annihilator(&m, &md, &full_subspace(&m)).unwrap()), 0);
        prop_assert_eq!(subspace_length(&md, &annihilator(&m, &md, &zero_subspace()).unwrap()), h1);
    }

    #[test]
    fn cup_is_well_defined_on_classes((p, n, seed) in setup_strategy()) {
        let m = random_setup(p, n, seed);
        let md = m.tate_dual().unwrap();
        let ring = m.ring();
        let b = cup_form(&m, &md).unwrap();
        let left = h1_basis(&m);
        let right = h1_basis(&md);
        for x in &left {
            for y in coboundaries(&md) {
                prop_assert_eq!(dot(ring, &x.generator, &b.mul_vec(&y)), 0);
            }
            for y in &right {
                let v = cup_inv(&m, &md, &x.generator, &y.generator).unwrap();
                let shifted = vec_add(ring, &x.generator, &coboundaries(&m)[0]);
                prop_assert_eq!(cup_inv(&m, &md, &shifted, &y.generator).unwrap(), v);
            }
        }
    }
}
