mod common;

use std::sync::Arc;

use hamsym::exterior::KForm;
use hamsym::hamiltonian::{
    cotangent_lift, is_bihamiltonian_pair, make_system, poincare_potential, HamiltonianError,
    Potential, SymplecticForm,
};
use hamsym::symexpr::{expr, is_zero, Expr, PhaseSpace, ProbeConfig};

#[test]
fn system_invariants_on_bundled_examples() {
    for (name, sys, _) in common::all_systems() {
        let cfg = sys.probe_config();
        let w = sys.omega().form();
        let contraction = w.interior(sys.x_h()).unwrap();
        assert!(contraction.sub(&sys.dh()).unwrap().zero_verdict(cfg).unwrap().is_zero(), "{name}");
        assert!(is_zero(&sys.x_h().apply(sys.h()), sys.space(), cfg).unwrap().is_zero(), "{name}");
        assert!(w.lie(sys.x_h()).unwrap().zero_verdict(cfg).unwrap().is_zero(), "{name}");
        let space = sys.space();
        for (i, (lhs, rhs)) in sys.hamilton_equations().into_iter().enumerate() {
            let n = space.n();
            let expected = if i < n {
                sys.h().diff(&space.momenta()[i])
            } else {
                sys.h().diff(&space.positions()[i - n]).neg()
            };
            assert_eq!(rhs, expected, "{name}: {lhs}");
        }
    }
}

#[test]
fn pendulum_field_matches_closed_form() {
    let p = common::pendulum();
    let expected = common::field(
        &p,
        &[
            "p_theta",
            "p_phi*(1 + tan(theta)^2)",
            "-(p_phi^2*tan(theta)*(1 + tan(theta)^2) + Omega^2*cos(theta))",
            "0",
        ],
    );
    let diff = p.x_h().sub(&expected).unwrap();
    assert!(diff.zero_verdict(p.probe_config()).unwrap().is_zero(), "{}", p.x_h());
}

#[test]
fn cotangent_lifts_preserve_the_canonical_one_form() {
    let space = Arc::new(PhaseSpace::canonical(2, &[("a", 1.0)]).unwrap());
    let cfg = ProbeConfig::default();
    let theta = KForm::canonical_one_form(space.clone());
    let w = KForm::canonical_symplectic(space.clone());
    for z in [
        ["q2", "-q1"],
        ["q1^2 + a*q2", "sin(q1)"],
        ["exp(q2)", "q1*q2^3"],
        ["1", "0"],
    ] {
        let z: Vec<Expr> = z.iter().map(|t| expr(t, &space).unwrap()).collect();
        let lift = cotangent_lift(&space, &z).unwrap();
        assert!(theta.lie(&lift).unwrap().zero_verdict(&cfg).unwrap().is_zero(), "{lift}");
        assert!(w.lie(&lift).unwrap().zero_verdict(&cfg).unwrap().is_zero(), "{lift}");
    }
    let bad = vec![expr("p1", &space).unwrap(), Expr::zero()];
    assert!(matches!(
        cotangent_lift(&space, &bad),
        Err(HamiltonianError::LiftDependsOnMomenta { component: 0, .. })
    ));
}

#[test]
fn potential_round_trips() {
    let space = Arc::new(PhaseSpace::canonical(2, &[("w", 1.0)]).unwrap());
    let cfg = ProbeConfig::default();
    let base = space.box_center();
    for f in [
        "q1*p2 + q2*p1",
        "w*q1^3*p2 - p1^2",
        "sin(q1)*exp(p2)",
        "(p1^2 + w^2*q1^2)/2",
        "q1*q2*p1*p2 + 5",
    ] {
        let f = expr(f, &space).unwrap();
        let a = KForm::scalar(space.clone(), f.clone()).d();
        let pot = poincare_potential(&a, &base, &cfg).unwrap();
        match &pot {
            Potential::Symbolic(g) => {
                let back = KForm::scalar(space.clone(), g.clone()).d();
                assert!(back.sub(&a).unwrap().zero_verdict(&cfg).unwrap().is_zero(), "{f}");
            }
            Potential::Numeric(_) => {
                // Compare against f - f(base) at a few points.
                let fc = hamsym::symexpr::compile(&f, &space).unwrap();
                let f0 = fc.eval(&space.slots_at(&base)).unwrap();
                for x in [[0.3, -0.2, 0.5, 0.1], [-0.9, 0.4, 0.0, 0.7]] {
                    let s = space.slots_at(&x);
                    let got = pot.eval(&space, &s).unwrap();
                    assert!((got - (fc.eval(&s).unwrap() - f0)).abs() < 1e-8, "{f}");
                }
            }
        }
    }
}

#[test]
fn potential_of_the_symmetric_one_form() {
    let space = Arc::new(PhaseSpace::canonical(2, &[]).unwrap());
    let cfg = ProbeConfig::default();
    let e = |t: &str| expr(t, &space).unwrap();
    let a = KForm::from_terms(
        space.clone(),
        1,
        vec![(vec![0], e("p2")), (vec![1], e("p1")), (vec![2], e("q2")), (vec![3], e("q1"))],
    )
    .unwrap();
    let pot = poincare_potential(&a, &space.box_center(), &cfg).unwrap();
    assert_eq!(pot.as_expr(), Some(&e("q1*p2 + q2*p1")));
    let not_closed = KForm::from_terms(space.clone(), 1, vec![(vec![0], e("p1"))]).unwrap();
    assert!(matches!(
        poincare_potential(&not_closed, &space.box_center(), &cfg),
        Err(HamiltonianError::NotClosed { .. })
    ));
}

#[test]
fn degenerate_and_non_closed_forms_are_rejected() {
    let space = Arc::new(PhaseSpace::canonical(2, &[]).unwrap());
    let cfg = ProbeConfig::default();
    let e = |t: &str| expr(t, &space).unwrap();
    let degenerate = KForm::from_terms(space.clone(), 2, vec![(vec![0, 1], e("1"))]).unwrap();
    assert!(matches!(
        SymplecticForm::new(degenerate, &cfg),
        Err(HamiltonianError::Degenerate { .. })
    ));
    let open = KForm::from_terms(
        space.clone(),
        2,
        vec![(vec![0, 2], e("1 + q2")), (vec![1, 3], e("1"))],
    )
    .unwrap();
    assert!(matches!(
        SymplecticForm::new(open, &cfg),
        Err(HamiltonianError::NotClosed { .. })
    ));
}

#[test]
fn non_canonical_form_gives_consistent_field() {
    let space = Arc::new(PhaseSpace::canonical(1, &[]).unwrap());
    let cfg = ProbeConfig::default();
    let e = |t: &str| expr(t, &space).unwrap();
    let w = KForm::from_terms(space.clone(), 2, vec![(vec![0, 1], e("1 + q1^2"))]).unwrap();
    let sys = make_system(space.clone(), SymplecticForm::new(w, &cfg).unwrap(), e("p1^2/2 + q1^2/2"), cfg.clone())
        .unwrap();
    let contraction = sys.omega().form().interior(sys.x_h()).unwrap();
    assert!(contraction.sub(&sys.dh()).unwrap().zero_verdict(&cfg).unwrap().is_zero());
    assert!(is_zero(&sys.x_h().apply(sys.h()), &space, &cfg).unwrap().is_zero());
}

#[test]
fn bihamiltonian_pairs() {
    let iso = common::iso();
    let y = common::field(&iso, &["q2", "q1", "p2", "p1"]);
    let w1 = iso.omega().form().lie(&y).unwrap();
    let a1 = KForm::scalar(iso.space().clone(), y.apply(iso.h())).d();
    assert!(is_bihamiltonian_pair(&iso, &w1, &a1).unwrap());
    assert!(!is_bihamiltonian_pair(&iso, iso.omega().form(), &iso.dh()).unwrap());
    let space = iso.space().clone();
    let open = KForm::from_terms(space.clone(), 2, vec![(vec![0, 2], common::e(&iso, "q2"))]).unwrap();
    assert!(!is_bihamiltonian_pair(&iso, &open, &a1).unwrap());
}
