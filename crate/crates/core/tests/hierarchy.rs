//! Identities of the forms theta_(j) = L^j(Y) i(Y) w and soundness of classifier output.

mod common;

use hamsym::classifier::{
    classify, generate_from_conserved, is_infinitesimal_symmetry, theta_form, ClassificationLabel,
    ClassifyConfig,
};
use hamsym::exterior::KForm;
use hamsym::hamiltonian::HamiltonianSystem;
use hamsym::symexpr::is_zero;

const MAX_J: usize = 3;

fn assert_same(sys: &HamiltonianSystem, a: &KForm, b: &KForm, what: &str) {
    let v = a.sub(b).unwrap().zero_verdict(sys.probe_config()).unwrap();
    assert!(v.is_zero(), "{what}: {v:?}");
}

fn symmetric_pairs() -> Vec<(String, HamiltonianSystem, hamsym::classifier::SymmetryCandidate)> {
    let mut out = Vec::new();
    for (name, sys, cands) in common::all_systems() {
        for c in cands {
            if is_infinitesimal_symmetry(&c.field, &sys).unwrap().is_zero() {
                out.push((format!("{name}/{}", c.name), sys.clone(), c));
            }
        }
    }
    out
}

#[test]
fn theta_hierarchy_identities() {
    let pairs = symmetric_pairs();
    assert!(pairs.len() >= 9, "{}", pairs.len());
    for (label, sys, c) in &pairs {
        let y = &c.field;
        let w = sys.omega().form();
        let thetas: Vec<KForm> = (0..=MAX_J + 1).map(|j| theta_form(y, sys, j).unwrap()).collect();
        let mut w_pow = vec![w.clone()];
        let mut h_pow = vec![sys.h().clone()];
        for j in 0..=MAX_J + 1 {
            w_pow.push(w_pow[j].lie(y).unwrap());
            h_pow.push(y.apply(&h_pow[j]));
        }
        for j in 0..=MAX_J {
            let t = &thetas[j];
            let tag = |s: &str| format!("{label} j={j}: {s}");
            let contraction = t.interior(y).unwrap();
            assert_same(sys, &contraction, &KForm::zero(sys.space().clone(), 0), &tag("i(Y)theta = 0"));
            assert_same(sys, &thetas[j + 1], &t.lie(y).unwrap(), &tag("theta_(j+1) = L(Y)theta_(j)"));
            for r in 1..=j + 1 {
                let mut lifted = thetas[j + 1 - r].clone();
                for _ in 0..r {
                    lifted = lifted.lie(y).unwrap();
                }
                assert_same(sys, &thetas[j + 1], &lifted, &tag(&format!("theta_(j+1) = L^{r}(Y)theta")));
            }
            assert_same(sys, &thetas[j + 1], &t.d().interior(y).unwrap(), &tag("theta_(j+1) = i(Y)d theta"));
            assert_same(sys, &t.d(), &w_pow[j + 1], &tag("d theta = L^(j+1)(Y)w"));

            let xh = sys.x_h();
            assert_same(
                sys,
                &t.lie(xh).unwrap(),
                &KForm::zero(sys.space().clone(), 1),
                &tag("L(X_h)theta = 0"),
            );
            assert_same(
                sys,
                &t.interior(xh).unwrap(),
                &KForm::scalar(sys.space().clone(), h_pow[j + 1].neg()),
                &tag("i(X_h)theta = -L^(j+1)(Y)h"),
            );
            assert_same(
                sys,
                &t.d().interior(xh).unwrap(),
                &KForm::scalar(sys.space().clone(), h_pow[j + 1].clone()).d(),
                &tag("i(X_h)d theta = d L^(j+1)(Y)h"),
            );
        }
    }
}

#[test]
fn every_emitted_quantity_is_conserved_and_noether_round_trips() {
    let cfg = ClassifyConfig::default();
    let mut noether = 0;
    for (name, sys, cands) in common::all_systems() {
        for c in &cands {
            let r = classify(c, &sys, &cfg).unwrap();
            for (q, f) in r.symbolic_conserved() {
                let rate = sys.x_h().apply(f);
                let v = is_zero(&rate, sys.space(), sys.probe_config()).unwrap();
                assert!(v.is_zero(), "{name}/{}/{}: {v:?}", c.name, q.name);
            }
            if matches!(r.label, ClassificationLabel::Noether | ClassificationLabel::HigherOrderNoether { .. }) {
                for (q, f) in r.symbolic_conserved() {
                    let inv = is_zero(&c.field.apply(f), sys.space(), sys.probe_config()).unwrap();
                    assert!(inv.is_zero(), "{name}/{}/{}: L(Y)f = {inv:?}", c.name, q.name);
                }
            }
            if r.label == ClassificationLabel::Noether {
                noether += 1;
                let (_, f) = r.symbolic_conserved().next().expect("Noether output has a closed form");
                let back = generate_from_conserved(f, &sys).unwrap();
                let diff = back.field.sub(&c.field).unwrap();
                assert!(
                    diff.zero_verdict(sys.probe_config()).unwrap().is_zero(),
                    "{name}/{}: Y_f = {}",
                    c.name,
                    back.field
                );
            }
        }
    }
    assert!(noether >= 3, "{noether}");
}

#[test]
fn planted_symmetries_in_random_polynomial_systems() {
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let space = Arc::new(hamsym::symexpr::PhaseSpace::canonical(2, &[]).unwrap());
    for round in 0..12 {
        // h depends on q2 only through the rotation invariants, so rotations in (q1, q2) are symmetries
        let a: i64 = rng.gen_range(1..4);
        let b: i64 = rng.gen_range(-3..4);
        let c: i64 = rng.gen_range(-2..3);
        let text = format!(
            "(p1^2 + p2^2)/2 + {a}*(q1^2 + q2^2) + ({b})*(q1^2 + q2^2)^2 + ({c})*(q1*p2 - q2*p1)^2"
        );
        let h = hamsym::symexpr::expr(&text, &space).unwrap();
        let sys = hamsym::hamiltonian::make_system(
            space.clone(),
            hamsym::hamiltonian::SymplecticForm::canonical(space.clone()),
            h,
            Default::default(),
        )
        .unwrap();
        let rot = common::candidate(&sys, "R", &["-q2", "q1", "-p2", "p1"]);
        let r = classify(&rot, &sys, &cfg_default()).unwrap();
        assert_eq!(r.label, ClassificationLabel::Noether, "round {round}: {text}");
        let (_, f) = r.symbolic_conserved().next().unwrap();
        assert!(is_zero(&sys.x_h().apply(f), &space, sys.probe_config()).unwrap().is_zero());
        let expected = hamsym::symexpr::expr("q1*p2 - q2*p1", &space).unwrap();
        assert!(is_zero(&f.sub(&expected), &space, sys.probe_config()).unwrap().is_zero(), "{f}");
    }
}

fn cfg_default() -> ClassifyConfig {
    ClassifyConfig::default()
}
