mod common;

use hamsym::exterior::VectorField;
use hamsym::hamiltonian::Potential;
use hamsym::symexpr::{expr, PhaseSpace};
use hamsym::verify::{check_conserved, check_symmetry_numeric, integrate, Method, DRIFT_THRESHOLD};

fn unit_iso() -> hamsym::hamiltonian::HamiltonianSystem {
    let space = PhaseSpace::canonical(2, &[("Omega", 1.0)]).unwrap();
    common::system(space, "(p1^2 + p2^2 + Omega^2*q1^2 + Omega^2*q2^2)/2")
}

fn h_drift(sys: &hamsym::hamiltonian::HamiltonianSystem, x0: &[f64], t: f64, dt: f64, m: Method) -> f64 {
    let traj = integrate(sys, x0, t, dt, m).unwrap();
    check_conserved("h", &Potential::Symbolic(sys.h().clone()), sys.space(), &traj)
        .unwrap()
        .max_abs_drift
}

#[test]
fn iso_matches_the_harmonic_solution() {
    let sys = unit_iso();
    let traj = integrate(&sys, &[1.0, 0.0, 0.0, 1.0], 10.0, 1e-3, Method::Rk4).unwrap();
    let t = 10.0f64;
    let exact = [t.cos(), t.sin(), -t.sin(), t.cos()];
    for (a, b) in traj.last().iter().zip(exact) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    let rel = h_drift(&sys, &[1.0, 0.0, 0.0, 1.0], 10.0, 1e-3, Method::Rk4) / 1.0;
    assert!(rel < 1e-9, "{rel}");
}

#[test]
fn free_particle_moves_linearly() {
    let space = PhaseSpace::canonical(2, &[]).unwrap();
    let sys = common::system(space, "p1^2/2");
    let traj = integrate(&sys, &[0.0, 0.0, 1.0, 0.0], 2.5, 1e-2, Method::Rk4).unwrap();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        assert!((x[0] - t).abs() < 1e-12);
    }
    let q1 = Potential::Symbolic(expr("q1", sys.space()).unwrap());
    let report = check_conserved("q1", &q1, sys.space(), &traj).unwrap();
    assert!(!report.passes(DRIFT_THRESHOLD));
    assert!((report.final_drift - 2.5).abs() < 1e-9);
}

#[test]
fn rk4_step_halving_is_fourth_order() {
    let sys = unit_iso();
    let x0 = [1.0, 0.5, 0.3, 0.8];
    let coarse = h_drift(&sys, &x0, 10.0, 0.1, Method::Rk4);
    let fine = h_drift(&sys, &x0, 10.0, 0.05, Method::Rk4);
    let ratio = coarse / fine;
    assert!((8.0..=32.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn midpoint_preserves_quadratic_energy() {
    let sys = unit_iso();
    let x0 = [1.0, 0.5, 0.3, 0.8];
    let drift = h_drift(&sys, &x0, 100.0, 1e-2, Method::ImplicitMidpoint);
    assert!(drift < 1e-10, "{drift}");
}

#[test]
fn pendulum_momentum_and_energy_drift() {
    let p = common::pendulum();
    let x0 = [0.3, 0.0, 0.0, 0.5];
    let traj = integrate(&p, &x0, 10.0, 1e-3, Method::Rk4).unwrap();
    assert!(traj.diagnostic.is_none());
    let pphi = Potential::Symbolic(expr("p_phi", p.space()).unwrap());
    let r = check_conserved("p_phi", &pphi, p.space(), &traj).unwrap();
    assert!(r.max_rel_drift < 1e-8, "{r:?}");
    let h = Potential::Symbolic(p.h().clone());
    let r = check_conserved("h", &h, p.space(), &traj).unwrap();
    assert!(r.passes(DRIFT_THRESHOLD), "{r:?}");
}

#[test]
fn numeric_symmetry_check() {
    let p = common::pendulum();
    let y = common::field(&p, &["0", "1", "0", "0"]);
    let r = check_symmetry_numeric(&y, &p, &[0.3, 0.0, 0.0, 0.5], 1e-5, 1.0, 1e-3).unwrap();
    assert!(r.passed, "{r:?}");
    let iso = unit_iso();
    let dilation = common::field(&iso, &["q1", "0", "0", "0"]);
    let r = check_symmetry_numeric(&dilation, &iso, &[1.0, 0.5, 0.3, 0.8], 1e-5, 1.0, 1e-3).unwrap();
    assert!(!r.passed && r.residual > 0.1, "{r:?}");
    let zero = VectorField::zero(iso.space().clone());
    let r = check_symmetry_numeric(&zero, &iso, &[1.0, 0.5, 0.3, 0.8], 1e-5, 1.0, 1e-3).unwrap();
    assert_eq!(r.residual, 0.0);
}

#[test]
fn trajectory_table_layout() {
    let sys = unit_iso();
    let traj = integrate(&sys, &[1.0, 0.0, 0.0, 1.0], 0.03, 1e-2, Method::Rk4).unwrap();
    let mut out = Vec::new();
    traj.write_table(sys.space(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t q1 q2 p1 p2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let cols: Vec<f64> = row.split_whitespace().map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
    }
}
