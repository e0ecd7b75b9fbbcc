use std::sync::Arc;

use hamsym::exterior::{lie_bracket, KForm, VectorField};
use hamsym::sample::{random_expr, random_field, random_form};
use hamsym::symexpr::{PhaseSpace, ProbeConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn space() -> Arc<PhaseSpace> {
    Arc::new(PhaseSpace::canonical(2, &[("a", 1.0)]).unwrap())
}

fn cfg() -> ProbeConfig {
    ProbeConfig {
        count: 16,
        ..ProbeConfig::default()
    }
}

fn zero_form(k: &KForm) -> bool {
    k.zero_verdict(&cfg()).unwrap().is_zero()
}

fn zero_field(v: &VectorField) -> bool {
    v.zero_verdict(&cfg()).unwrap().is_zero()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), degree in 0usize..4) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &s, degree, 3, 2);
        prop_assert!(zero_form(&a.d().d()));
    }

    #[test]
    fn cartan_on_functions(seed in any::<u64>()) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = KForm::scalar(s.clone(), random_expr(&mut rng, &s, 3));
        let x = random_field(&mut rng, &s, 2);
        let lhs = f.lie(&x).unwrap();
        let rhs = KForm::scalar(s.clone(), f.d().interior(&x).unwrap().as_scalar().unwrap());
        prop_assert!(zero_form(&lhs.sub(&rhs).unwrap()));
    }

    #[test]
    fn lie_commutes_with_d(seed in any::<u64>(), degree in 0usize..3) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &s, degree, 2, 2);
        let x = random_field(&mut rng, &s, 1);
        let lhs = a.d().lie(&x).unwrap();
        let rhs = a.lie(&x).unwrap().d();
        prop_assert!(zero_form(&lhs.sub(&rhs).unwrap()));
    }

    #[test]
    fn jacobi_identity(seed in any::<u64>()) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_field(&mut rng, &s, 1);
        let y = random_field(&mut rng, &s, 1);
        let z = random_field(&mut rng, &s, 1);
        let t1 = lie_bracket(&lie_bracket(&x, &y).unwrap(), &z).unwrap();
        let t2 = lie_bracket(&lie_bracket(&y, &z).unwrap(), &x).unwrap();
        let t3 = lie_bracket(&lie_bracket(&z, &x).unwrap(), &y).unwrap();
        let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
        prop_assert!(zero_field(&sum));
    }

    #[test]
    fn wedge_graded_antisymmetry(seed in any::<u64>(), ka in 1usize..3, kb in 1usize..3) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &s, ka, 2, 2);
        let b = random_form(&mut rng, &s, kb, 2, 2);
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let sign = if (ka * kb) % 2 == 0 { 1 } else { -1 };
        let diff = ab.sub(&ba.scale(&hamsym::symexpr::Expr::int(sign))).unwrap();
        prop_assert!(diff.is_zero());
    }

    #[test]
    fn interior_is_an_antiderivation(seed in any::<u64>(), ka in 1usize..3, kb in 1usize..3) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &s, ka, 2, 1);
        let b = random_form(&mut rng, &s, kb, 2, 1);
        let x = random_field(&mut rng, &s, 1);
        let lhs = a.wedge(&b).unwrap().interior(&x).unwrap();
        let sign = if ka % 2 == 0 { 1 } else { -1 };
        let rhs = a
            .interior(&x)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.interior(&x).unwrap()).unwrap().scale(&hamsym::symexpr::Expr::int(sign)))
            .unwrap();
        prop_assert!(zero_form(&lhs.sub(&rhs).unwrap()));
    }

    #[test]
    fn double_contraction_vanishes(seed in any::<u64>(), degree in 2usize..4) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &s, degree, 3, 1);
        let x = random_field(&mut rng, &s, 1);
        prop_assert!(zero_form(&a.interior(&x).unwrap().interior(&x).unwrap()));
    }

    #[test]
    fn self_bracket_vanishes(seed in any::<u64>()) {
        let s = space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_field(&mut rng, &s, 2);
        prop_assert!(lie_bracket(&x, &x).unwrap().is_zero());
    }
}
