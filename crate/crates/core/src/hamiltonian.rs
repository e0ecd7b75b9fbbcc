//! Symplectic forms, Hamiltonian vector fields, cotangent lifts and potentials of closed 1-forms.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::exterior::{ExteriorError, KForm, VectorField};
use crate::linsolve::{self, SolveError};
use crate::symexpr::{
    compile, Compiled, EvalError, Expr, PhaseSpace, ProbeConfig, Prober, Rational, Witness,
    ZeroTestError, ZeroVerdict,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Probe(#[from] ZeroTestError),
    #[error("symplectic form must have degree 2, got {0}")]
    NotTwoForm(usize),
    #[error("form is not closed: d-coefficient {component} is {} at {:?}", witness.value, witness.point)]
    NotClosed { component: String, witness: Witness },
    #[error("symplectic form is degenerate at all {probes} probes")]
    Degenerate { probes: usize },
    #[error("cannot solve for the Hamiltonian vector field: {0}")]
    Unsolvable(#[from] SolveError),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("base field component {component} depends on momentum `{momentum}`")]
    LiftDependsOnMomenta { component: usize, momentum: String },
    #[error("base field needs {expected} components, got {found}")]
    LiftComponentCount { expected: usize, found: usize },
    #[error("potential requested for a {0}-form; only 1-forms have function potentials")]
    PotentialDegree(usize),
}

fn nonzero_component(
    form: &KForm,
    cfg: &ProbeConfig,
) -> Result<Option<(String, Witness)>, ZeroTestError> {
    let coords = form.space().coords();
    for (idx, c) in form.terms() {
        if let ZeroVerdict::NonZero { witness } = crate::symexpr::is_zero(c, form.space(), cfg)? {
            let name = idx.iter().map(|&i| format!("d{}", coords[i])).collect::<Vec<_>>().join("^");
            return Ok(Some((name, witness)));
        }
    }
    Ok(None)
}

/// A closed, nondegenerate 2-form together with its antisymmetric coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    form: KForm,
    matrix: Vec<Vec<Expr>>,
    canonical: bool,
    closed: ZeroVerdict,
}

impl SymplecticForm {
    pub fn canonical(space: Arc<PhaseSpace>) -> SymplecticForm {
        let form = KForm::canonical_symplectic(space);
        SymplecticForm {
            matrix: matrix_of(&form),
            form,
            canonical: true,
            closed: ZeroVerdict::SymbolicZero,
        }
    }

    /// Validates closedness and nondegeneracy at the probes.
    pub fn new(form: KForm, cfg: &ProbeConfig) -> Result<SymplecticForm, HamiltonianError> {
        if form.degree() != 2 {
            return Err(HamiltonianError::NotTwoForm(form.degree()));
        }
        let space = form.space().clone();
        if form == KForm::canonical_symplectic(space.clone()) {
            return Ok(SymplecticForm::canonical(space));
        }
        let d = form.d();
        if let Some((component, witness)) = nonzero_component(&d, cfg)? {
            return Err(HamiltonianError::NotClosed { component, witness });
        }
        let closed = d.zero_verdict(cfg)?;
        let matrix = matrix_of(&form);
        check_nondegenerate(&matrix, &space, cfg)?;
        Ok(SymplecticForm {
            form,
            matrix,
            canonical: false,
            closed,
        })
    }

    pub fn form(&self) -> &KForm {
        &self.form
    }

    /// `matrix()[i][j]` is the coefficient of `dx_i ^ dx_j` for `i < j`, antisymmetrically extended.
    pub fn matrix(&self) -> &[Vec<Expr>] {
        &self.matrix
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn closedness(&self) -> &ZeroVerdict {
        &self.closed
    }
}

fn matrix_of(form: &KForm) -> Vec<Vec<Expr>> {
    let dim = form.space().dim();
    let mut m = vec![vec![Expr::zero(); dim]; dim];
    for (idx, c) in form.terms() {
        m[idx[0]][idx[1]] = c.clone();
        m[idx[1]][idx[0]] = c.neg();
    }
    m
}

fn check_nondegenerate(
    matrix: &[Vec<Expr>],
    space: &PhaseSpace,
    cfg: &ProbeConfig,
) -> Result<(), HamiltonianError> {
    let dim = space.dim();
    let compiled = matrix
        .iter()
        .flatten()
        .map(|e| compile(e, space))
        .collect::<Result<Vec<Compiled>, EvalError>>()
        .map_err(ZeroTestError::Eval)?;
    let mut prober = Prober::new(space, cfg.seed);
    let dets = prober.valid_points(cfg.count, |p| {
        let vals = compiled.iter().map(|c| c.eval(p)).collect::<Result<Vec<f64>, _>>()?;
        Ok(DMatrix::from_row_slice(dim, dim, &vals).determinant())
    })?;
    if dets.iter().any(|(_, d)| d.abs() > cfg.tol) {
        Ok(())
    } else {
        Err(HamiltonianError::Degenerate { probes: dets.len() })
    }
}

/// Results of the invariant checks run when a system is built.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SystemChecks {
    /// `i(X_h)w - dh`.
    pub hamilton_equation: ZeroVerdict,
    /// `L(X_h)h`.
    pub energy: ZeroVerdict,
}

#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    space: Arc<PhaseSpace>,
    omega: SymplecticForm,
    h: Expr,
    x_h: VectorField,
    cfg: ProbeConfig,
    checks: SystemChecks,
}

/// Builds the system and solves `i(X_h)w = dh`.
pub fn make_system(
    space: Arc<PhaseSpace>,
    omega: SymplecticForm,
    h: Expr,
    cfg: ProbeConfig,
) -> Result<HamiltonianSystem, HamiltonianError> {
    let x_h = solve_field(&space, &omega, &h, &cfg)?;
    let residual = omega.form.interior(&x_h)?.sub(&KForm::scalar(space.clone(), h.clone()).d())?;
    let hamilton_equation = residual.zero_verdict(&cfg)?;
    if !hamilton_equation.is_zero() {
        return Err(HamiltonianError::Inconsistent(format!(
            "i(X_h)w - dh does not vanish: {residual}"
        )));
    }
    let energy = crate::symexpr::is_zero(&x_h.apply(&h), &space, &cfg)?;
    if !energy.is_zero() {
        return Err(HamiltonianError::Inconsistent("L(X_h)h does not vanish".into()));
    }
    Ok(HamiltonianSystem {
        space,
        omega,
        h,
        x_h,
        cfg,
        checks: SystemChecks {
            hamilton_equation,
            energy,
        },
    })
}

fn solve_field(
    space: &Arc<PhaseSpace>,
    omega: &SymplecticForm,
    f: &Expr,
    cfg: &ProbeConfig,
) -> Result<VectorField, HamiltonianError> {
    let grad: Vec<Expr> = space.coords().iter().map(|c| f.diff(c)).collect();
    let n = space.n();
    let comps = if omega.canonical {
        let mut comps = grad[n..].to_vec();
        comps.extend(grad[..n].iter().map(Expr::neg));
        comps
    } else {
        // Component k of i(X)w is sum_i X^i w_ik.
        let dim = space.dim();
        let a = (0..dim)
            .map(|k| (0..dim).map(|i| omega.matrix[i][k].clone()).collect())
            .collect();
        linsolve::solve(a, grad, space, cfg)?
    };
    Ok(VectorField::new(space.clone(), comps)?)
}

impl HamiltonianSystem {
    pub fn space(&self) -> &Arc<PhaseSpace> {
        &self.space
    }

    pub fn omega(&self) -> &SymplecticForm {
        &self.omega
    }

    pub fn h(&self) -> &Expr {
        &self.h
    }

    pub fn x_h(&self) -> &VectorField {
        &self.x_h
    }

    pub fn probe_config(&self) -> &ProbeConfig {
        &self.cfg
    }

    pub fn checks(&self) -> &SystemChecks {
        &self.checks
    }

    /// The field `Y_f` with `i(Y_f)w = df`.
    pub fn hamiltonian_field(&self, f: &Expr) -> Result<VectorField, HamiltonianError> {
        solve_field(&self.space, &self.omega, f, &self.cfg)
    }

    /// `dh` as a 1-form.
    pub fn dh(&self) -> KForm {
        KForm::scalar(self.space.clone(), self.h.clone()).d()
    }

    /// Right-hand sides of the equations of motion, in coordinate order.
    pub fn hamilton_equations(&self) -> Vec<(String, Expr)> {
        self.space
            .coords()
            .iter()
            .cloned()
            .zip(self.x_h.components().iter().cloned())
            .collect()
    }
}

/// Lifts a base field `Z^i(q) d/dq^i` to `Z^i d/dq^i - p_j dZ^j/dq^i d/dp_i`.
pub fn cotangent_lift(
    space: &Arc<PhaseSpace>,
    z: &[Expr],
) -> Result<VectorField, HamiltonianError> {
    let n = space.n();
    if z.len() != n {
        return Err(HamiltonianError::LiftComponentCount {
            expected: n,
            found: z.len(),
        });
    }
    for (component, zi) in z.iter().enumerate() {
        if let Some(momentum) = space.momenta().iter().find(|p| zi.depends_on(p)) {
            return Err(HamiltonianError::LiftDependsOnMomenta {
                component,
                momentum: momentum.clone(),
            });
        }
    }
    let mut comps = z.to_vec();
    for q in space.positions() {
        let mut c = Expr::zero();
        for (zj, p) in z.iter().zip(space.momenta()) {
            c = c.sub(&Expr::symbol(p).mul(&zj.diff(q)));
        }
        comps.push(c);
    }
    Ok(VectorField::new(space.clone(), comps)?)
}

/// Quadrature-backed potential used when the homotopy integrand is not polynomial in `t`.
#[derive(Clone, Debug)]
pub struct NumericPotential {
    comps: Vec<Compiled>,
    base: Vec<f64>,
    dim: usize,
}

impl NumericPotential {
    /// Line integral from the base point to the coordinates in `slots` (coordinates then parameters).
    pub fn eval(&self, slots: &[f64]) -> Result<f64, EvalError> {
        let x = &slots[..self.dim];
        let mut probe = slots.to_vec();
        let mut integrand = |t: f64| -> Result<f64, EvalError> {
            for i in 0..self.dim {
                probe[i] = self.base[i] + t * (x[i] - self.base[i]);
            }
            let mut s = 0.0;
            for (i, c) in self.comps.iter().enumerate() {
                let dx = x[i] - self.base[i];
                if dx != 0.0 {
                    s += c.eval(&probe)? * dx;
                }
            }
            Ok(s)
        };
        adaptive_simpson(&mut integrand, 0.0, 1.0, 1e-10)
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }
}

fn adaptive_simpson(
    f: &mut dyn FnMut(f64) -> Result<f64, EvalError>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, EvalError> {
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut dyn FnMut(f64) -> Result<f64, EvalError>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, EvalError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[derive(Clone, Debug)]
pub enum Potential {
    Symbolic(Expr),
    Numeric(NumericPotential),
}

impl Potential {
    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            Potential::Symbolic(e) => Some(e),
            Potential::Numeric(_) => None,
        }
    }

    pub fn eval(&self, space: &PhaseSpace, slots: &[f64]) -> Result<f64, EvalError> {
        match self {
            Potential::Symbolic(e) => compile(e, space)?.eval(slots),
            Potential::Numeric(n) => n.eval(slots),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Symbolic(e) => write!(f, "{e}"),
            Potential::Numeric(n) => write!(f, "<line integral from {:?}>", n.base),
        }
    }
}

/// Name of the homotopy parameter; not a valid identifier, so it cannot clash with declared names.
const HOMOTOPY_T: &str = "t'";

/// Potential `f` of a closed 1-form with `df = a` and `f(base) = 0`.
pub fn poincare_potential(
    a: &KForm,
    base: &[f64],
    cfg: &ProbeConfig,
) -> Result<Potential, HamiltonianError> {
    if a.degree() != 1 {
        return Err(HamiltonianError::PotentialDegree(a.degree()));
    }
    let space = a.space().clone();
    if let Some((component, witness)) = nonzero_component(&a.d(), cfg)? {
        return Err(HamiltonianError::NotClosed { component, witness });
    }
    let coords = space.coords();
    let base_exprs: Vec<Expr> = base
        .iter()
        .map(|&b| {
            Rational::from_float(b)
                .map(Expr::constant)
                .ok_or_else(|| HamiltonianError::Inconsistent(format!("non-finite base point {b}")))
        })
        .collect::<Result<_, _>>()?;
    let t = Expr::symbol(HOMOTOPY_T);
    let shift: BTreeMap<String, Expr> = coords
        .iter()
        .zip(&base_exprs)
        .map(|(c, b)| (c.clone(), b.add(&t.mul(&Expr::symbol(c).sub(b)))))
        .collect();
    let mut integrand = Expr::zero();
    for (idx, c) in a.terms() {
        let i = idx[0];
        let moved = c
            .substitute(&shift)
            .map_err(|e| HamiltonianError::Inconsistent(e.to_string()))?;
        integrand = integrand.add(&moved.mul(&Expr::symbol(&coords[i]).sub(&base_exprs[i])));
    }
    if let Some(poly) = integrand.polynomial_coefficients(HOMOTOPY_T) {
        let mut f = Expr::zero();
        for (k, c) in poly {
            f = f.add(&c.scale(&Rational::new(1.into(), (k as i64 + 1).into())));
        }
        let check = KForm::scalar(space.clone(), f.clone()).d().sub(a)?;
        if !check.zero_verdict(cfg)?.is_zero() {
            return Err(HamiltonianError::Inconsistent(format!(
                "potential {f} does not reproduce the form"
            )));
        }
        return Ok(Potential::Symbolic(f));
    }
    let comps = (0..space.dim())
        .map(|i| compile(&a.coeff(&[i]), &space))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ZeroTestError::Eval)?;
    Ok(Potential::Numeric(NumericPotential {
        comps,
        base: base.to_vec(),
        dim: space.dim(),
    }))
}

/// True when `(w2, a2)` is a second closed pair, distinct from `(w, dh)`, with `i(X_h)w2 = a2`.
pub fn is_bihamiltonian_pair(
    sys: &HamiltonianSystem,
    omega2: &KForm,
    alpha2: &KForm,
) -> Result<bool, HamiltonianError> {
    let cfg = &sys.cfg;
    if omega2.degree() != 2 || alpha2.degree() != 1 {
        return Ok(false);
    }
    let zero = |k: &KForm| -> Result<bool, HamiltonianError> { Ok(k.zero_verdict(cfg)?.is_zero()) };
    if !zero(&omega2.d())? || !zero(&alpha2.d())? {
        return Ok(false);
    }
    if zero(&omega2.sub(sys.omega.form())?)? || zero(&alpha2.sub(&sys.dh())?)? {
        return Ok(false);
    }
    zero(&omega2.interior(&sys.x_h)?.sub(alpha2)?)
}

/// Compiles every component of a field for numeric use.
pub fn compile_field(v: &VectorField) -> Result<Vec<Compiled>, EvalError> {
    v.components().iter().map(|c| compile(c, v.space())).collect()
}
