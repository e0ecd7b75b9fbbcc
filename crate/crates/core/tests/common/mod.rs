#![allow(dead_code)]

use std::sync::Arc;

use hamsym::classifier::SymmetryCandidate;
use hamsym::exterior::VectorField;
use hamsym::hamiltonian::{make_system, HamiltonianSystem, SymplecticForm};
use hamsym::symexpr::{expr, Expr, PhaseSpace, ProbeConfig};

pub fn system(space: PhaseSpace, h: &str) -> HamiltonianSystem {
    let s = Arc::new(space);
    let h = expr(h, &s).unwrap();
    make_system(s.clone(), SymplecticForm::canonical(s), h, ProbeConfig::default()).unwrap()
}

pub fn e(sys: &HamiltonianSystem, text: &str) -> Expr {
    expr(text, sys.space()).unwrap()
}

pub fn field(sys: &HamiltonianSystem, comps: &[&str]) -> VectorField {
    VectorField::new(sys.space().clone(), comps.iter().map(|c| e(sys, c)).collect()).unwrap()
}

pub fn candidate(sys: &HamiltonianSystem, name: &str, comps: &[&str]) -> SymmetryCandidate {
    SymmetryCandidate {
        name: name.into(),
        field: field(sys, comps),
    }
}

pub fn pendulum() -> HamiltonianSystem {
    let space = PhaseSpace::new(&["theta", "phi", "p_theta", "p_phi"], &[("Omega", 1.0)])
        .unwrap()
        .with_box("theta", -1.2, 1.2)
        .unwrap();
    system(
        space,
        "p_theta^2/2 + p_phi^2*(1+tan(theta)^2)/2 + Omega^2*(1+sin(theta))",
    )
}

pub fn pendulum_candidates(sys: &HamiltonianSystem) -> Vec<SymmetryCandidate> {
    vec![candidate(sys, "Y", &["0", "1", "0", "0"])]
}

pub fn aniso() -> HamiltonianSystem {
    let space =
        PhaseSpace::canonical(2, &[("Omega1", 1.0), ("Omega2", 1.0)]).unwrap();
    system(space, "(p1^2 + p2^2 + Omega1^2*q1^2 + Omega2^2*q2^2)/2")
}

pub fn aniso_candidates(sys: &HamiltonianSystem) -> Vec<SymmetryCandidate> {
    vec![
        candidate(
            sys,
            "Y1",
            &[
                "Omega1*q1/(Omega1^2*q1^2 + p1^2)",
                "0",
                "Omega1*p1/(Omega1^2*q1^2 + p1^2)",
                "0",
            ],
        ),
        candidate(
            sys,
            "Y2",
            &[
                "0",
                "Omega2*q2/(Omega2^2*q2^2 + p2^2)",
                "0",
                "Omega2*p2/(Omega2^2*q2^2 + p2^2)",
            ],
        ),
    ]
}

pub fn iso() -> HamiltonianSystem {
    let space = PhaseSpace::canonical(2, &[("Omega", 1.0)]).unwrap();
    system(space, "(p1^2 + p2^2 + Omega^2*q1^2 + Omega^2*q2^2)/2")
}

pub fn iso_candidates(sys: &HamiltonianSystem) -> Vec<SymmetryCandidate> {
    vec![
        candidate(sys, "Y", &["q2", "q1", "p2", "p1"]),
        candidate(sys, "Y1", &["q2", "0", "p2", "0"]),
        candidate(sys, "Y2", &["0", "q1", "0", "p1"]),
        candidate(sys, "Xh1", &["p1", "0", "-Omega^2*q1", "0"]),
        candidate(sys, "Xh2", &["0", "p2", "0", "-Omega^2*q2"]),
        candidate(
            sys,
            "Z1",
            &["(p2^2 + Omega^2*q2^2)*q2", "0", "(p2^2 + Omega^2*q2^2)*p2", "0"],
        ),
        candidate(
            sys,
            "Z2",
            &["0", "(p1^2 + Omega^2*q1^2)*q1", "0", "(p1^2 + Omega^2*q1^2)*p1"],
        ),
        candidate(
            sys,
            "Z",
            &[
                "(q1*p2 - q2*p1)*p1",
                "-(q1*p2 - q2*p1)*p2",
                "-(q1*p2 - q2*p1)*q1",
                "(q1*p2 - q2*p1)*q2",
            ],
        ),
    ]
}

pub fn all_systems() -> Vec<(&'static str, HamiltonianSystem, Vec<SymmetryCandidate>)> {
    let p = pendulum();
    let a = aniso();
    let i = iso();
    let pc = pendulum_candidates(&p);
    let ac = aniso_candidates(&a);
    let ic = iso_candidates(&i);
    vec![("pendulum", p, pc), ("aniso", a, ac), ("iso", i, ic)]
}
