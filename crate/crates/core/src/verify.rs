//! Numerical cross-checks: fixed-step integration of Hamilton's equations,
//! drift of conserved quantities and a flow-commutation test for symmetries.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::exterior::VectorField;
use crate::hamiltonian::{compile_field, HamiltonianSystem, Potential};
use crate::symexpr::{Compiled, EvalError, PhaseSpace};

/// Stage-equation tolerance for the implicit midpoint rule.
pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITER: usize = 50;
/// Floor of the denominator in relative drift.
pub const DRIFT_FLOOR: f64 = 1e-12;
/// Default pass threshold for relative drift.
pub const DRIFT_THRESHOLD: f64 = 1e-6;
/// Default pass threshold for the normalized symmetry defect.
pub const SYMMETRY_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    ImplicitMidpoint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::ImplicitMidpoint => "implicit_midpoint",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Method, String> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "implicit_midpoint" => Ok(Method::ImplicitMidpoint),
            other => Err(format!("unknown method `{other}` (expected rk4 or implicit_midpoint)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("initial state has {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("step size and final time must be positive and finite")]
    BadStep,
    #[error("implicit midpoint stage did not converge at t = {t}")]
    NonConvergent { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub method: Method,
    pub dt: f64,
    pub x0: Vec<f64>,
    /// Set when integration stopped early, e.g. on leaving the chart domain.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    /// Plain-text table: `t` then the coordinates, 17 significant digits.
    pub fn write_table<W: Write>(&self, space: &PhaseSpace, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for c in space.coords() {
            write!(w, " {c}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in x {
                write!(w, " {v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectories hold the initial state")
    }
}

struct Rhs {
    comps: Vec<Compiled>,
    params: Vec<f64>,
    slots: Vec<f64>,
}

impl Rhs {
    fn new(field: &VectorField) -> Result<Rhs, EvalError> {
        let space = field.space();
        let params: Vec<f64> = space.params().values().copied().collect();
        Ok(Rhs {
            comps: compile_field(field)?,
            slots: vec![0.0; space.num_slots()],
            params,
        })
    }

    fn eval(&mut self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let dim = x.len();
        self.slots[..dim].copy_from_slice(x);
        self.slots[dim..].copy_from_slice(&self.params);
        self.comps.iter().map(|c| c.eval(&self.slots)).collect()
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

fn rk4_step(f: &mut Rhs, x: &[f64], h: f64) -> Result<Vec<f64>, EvalError> {
    let k1 = f.eval(x)?;
    let k2 = f.eval(&axpy(x, 0.5 * h, &k1))?;
    let k3 = f.eval(&axpy(x, 0.5 * h, &k2))?;
    let k4 = f.eval(&axpy(x, h, &k3))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

enum StepError {
    Eval(EvalError),
    NonConvergent,
}

fn midpoint_step(f: &mut Rhs, x: &[f64], h: f64) -> Result<Vec<f64>, StepError> {
    let mut next = axpy(x, h, &f.eval(x).map_err(StepError::Eval)?);
    for _ in 0..MIDPOINT_MAX_ITER {
        let mid: Vec<f64> = x.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let k = f.eval(&mid).map_err(StepError::Eval)?;
        let candidate = axpy(x, h, &k);
        let change = candidate
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        next = candidate;
        if change <= MIDPOINT_TOL {
            return Ok(next);
        }
    }
    Err(StepError::NonConvergent)
}

/// Fixed-step integration of `X_h` from `x0` to `t_final`.
pub fn integrate(
    sys: &HamiltonianSystem,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, VerifyError> {
    integrate_field(sys.x_h(), x0, t_final, dt, method)
}

/// Fixed-step integration of an arbitrary field.
pub fn integrate_field(
    field: &VectorField,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, VerifyError> {
    let dim = field.space().dim();
    if x0.len() != dim {
        return Err(VerifyError::Dimension {
            expected: dim,
            found: x0.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite() && t_final > 0.0 && t_final.is_finite()) {
        return Err(VerifyError::BadStep);
    }
    let mut f = Rhs::new(field)?;
    f.eval(x0)?;
    let steps = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        method,
        dt,
        x0: x0.to_vec(),
        diagnostic: None,
    };
    traj.times.push(0.0);
    traj.states.push(x0.to_vec());
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * dt;
        let t1 = if k == steps { t_final } else { k as f64 * dt };
        let h = t1 - t0;
        let x = traj.states.last().expect("nonempty");
        let next = match method {
            Method::Rk4 => rk4_step(&mut f, x, h).map_err(StepError::Eval),
            Method::ImplicitMidpoint => midpoint_step(&mut f, x, h),
        };
        match next {
            Ok(v) if v.iter().all(|c| c.is_finite()) => {
                traj.times.push(t1);
                traj.states.push(v);
            }
            Ok(_) => {
                traj.diagnostic = Some(format!("state became non-finite after t = {t0}"));
                break;
            }
            Err(StepError::Eval(e)) => {
                traj.diagnostic = Some(format!("stopped at t = {t0}: {e}"));
                break;
            }
            Err(StepError::NonConvergent) => return Err(VerifyError::NonConvergent { t: t0 }),
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub quantity: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max_abs_drift / max(|f(x0)|, DRIFT_FLOOR)`.
    pub max_rel_drift: f64,
    pub final_drift: f64,
    pub mean_abs_drift: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl DriftReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.diagnostic.is_none() && self.max_rel_drift < threshold
    }
}

/// Drift statistics of `f` along `traj`.
pub fn check_conserved(
    name: &str,
    f: &Potential,
    space: &PhaseSpace,
    traj: &Trajectory,
) -> Result<DriftReport, VerifyError> {
    let params: Vec<f64> = space.params().values().copied().collect();
    let mut slots = vec![0.0; space.num_slots()];
    let mut value = |x: &[f64]| -> Result<f64, EvalError> {
        slots[..x.len()].copy_from_slice(x);
        slots[x.len()..].copy_from_slice(&params);
        f.eval(space, &slots)
    };
    let initial = value(&traj.states[0])?;
    let (mut max_abs, mut sum, mut last) = (0.0f64, 0.0, 0.0);
    for x in &traj.states {
        let d = (value(x)? - initial).abs();
        max_abs = max_abs.max(d);
        sum += d;
        last = d;
    }
    Ok(DriftReport {
        quantity: name.to_string(),
        initial,
        max_abs_drift: max_abs,
        max_rel_drift: max_abs / initial.abs().max(DRIFT_FLOOR),
        final_drift: last,
        mean_abs_drift: sum / traj.states.len() as f64,
        samples: traj.states.len(),
        diagnostic: traj.diagnostic.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryResidual {
    pub epsilon: f64,
    /// `|flow-then-integrate - integrate-then-flow| / epsilon` at `t_final`.
    pub residual: f64,
    pub passed: bool,
}

const FLOW_STEPS: usize = 16;

fn flow(field: &mut Rhs, x: &[f64], epsilon: f64) -> Result<Vec<f64>, EvalError> {
    let h = epsilon / FLOW_STEPS as f64;
    let mut x = x.to_vec();
    for _ in 0..FLOW_STEPS {
        let v = field.eval(&x)?;
        x = axpy(&x, h, &v);
    }
    Ok(x)
}

/// Compares moving along `Y` by `epsilon` before and after integrating `X_h`.
pub fn check_symmetry_numeric(
    y: &VectorField,
    sys: &HamiltonianSystem,
    x0: &[f64],
    epsilon: f64,
    t_final: f64,
    dt: f64,
) -> Result<SymmetryResidual, VerifyError> {
    let mut yf = Rhs::new(y)?;
    let shifted = flow(&mut yf, x0, epsilon)?;
    let a = integrate(sys, &shifted, t_final, dt, Method::Rk4)?;
    let b = integrate(sys, x0, t_final, dt, Method::Rk4)?;
    for t in [&a, &b] {
        if let Some(d) = &t.diagnostic {
            return Err(VerifyError::Eval(EvalError::Domain {
                expr: d.clone(),
                reason: "trajectory left the domain",
            }));
        }
    }
    let b_shifted = flow(&mut yf, b.last(), epsilon)?;
    let defect = a
        .last()
        .iter()
        .zip(&b_shifted)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let residual = defect / epsilon;
    Ok(SymmetryResidual {
        epsilon,
        residual,
        passed: residual < SYMMETRY_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hamiltonian::{make_system, SymplecticForm};
    use crate::symexpr::{expr, ProbeConfig};

    fn system(n: usize, h: &str) -> HamiltonianSystem {
        let s = Arc::new(PhaseSpace::canonical(n, &[]).unwrap());
        let h = expr(h, &s).unwrap();
        make_system(s.clone(), SymplecticForm::canonical(s), h, ProbeConfig::default()).unwrap()
    }

    #[test]
    fn free_particle_moves_linearly() {
        let sys = system(1, "p1^2/2");
        let traj = integrate(&sys, &[0.0, 1.0], 2.0, 0.1, Method::Rk4).unwrap();
        assert_eq!(traj.times.len(), 21);
        assert!((traj.last()[0] - 2.0).abs() < 1e-12);
        let q = Potential::Symbolic(expr("q1", sys.space()).unwrap());
        let drift = check_conserved("q1", &q, sys.space(), &traj).unwrap();
        assert!(!drift.passes(DRIFT_THRESHOLD));
    }

    #[test]
    fn harmonic_oscillator_matches_cosine() {
        let sys = system(1, "(p1^2 + q1^2)/2");
        let traj = integrate(&sys, &[1.0, 0.0], 10.0, 1e-3, Method::Rk4).unwrap();
        let x = traj.last();
        assert!((x[0] - 10f64.cos()).abs() < 1e-10);
        assert!((x[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn domain_error_truncates() {
        // the force -(ln(q1) + 1) is undefined once q1 reaches 0
        let sys = system(1, "p1^2/2 + q1*ln(q1)");
        let traj = integrate(&sys, &[0.5, -2.0], 5.0, 1e-2, Method::Rk4).unwrap();
        assert!(traj.diagnostic.is_some());
        assert!(*traj.times.last().unwrap() < 5.0);
    }

    #[test]
    fn table_has_seventeen_digits() {
        let sys = system(1, "p1^2/2");
        let traj = integrate(&sys, &[0.0, 1.0], 0.1, 0.1, Method::Rk4).unwrap();
        let mut out = Vec::new();
        traj.write_table(sys.space(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t q1 p1"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0 0.0000000000000000e0 1.0000000000000000e0"));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Rk4, Method::ImplicitMidpoint] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("euler".parse::<Method>().is_err());
    }
}
