//! Symmetry classification and the conserved quantities each class yields.
//!
//! The walk starts from `[Y, X_h]`, then inspects `L(Y)w` and `L(Y)h` and
//! climbs the tower `L^N(Y)w` until the top form vanishes or depends on the
//! forms below it.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::exterior::{lie_bracket, ExteriorError, KForm, VectorField};
use crate::hamiltonian::{
    is_bihamiltonian_pair, poincare_potential, HamiltonianError, HamiltonianSystem, Potential,
};
use crate::linsolve::{self, SolveError};
use crate::ser;
use crate::symexpr::{
    compile, is_constant, is_zero, Compiled, ConstVerdict, EvalError, Expr, ProbeConfig, Prober,
    Witness, ZeroTestError, ZeroVerdict,
};
use crate::verify::DriftReport;

pub const DEFAULT_MAX_ORDER: usize = 6;

const BRACKET_RULE: &str = "symmetry criterion";
const NOETHER: &str = "Noether theorem";
const NONHAM_1: &str = "non-Hamiltonian symmetry theorem, symplectic case";
const NONHAM_2A: &str = "non-Hamiltonian symmetry theorem, conformal case";
const NONHAM_2B: &str = "non-Hamiltonian symmetry theorem, bi-Hamiltonian case";
const GENERALIZED_NOETHER: &str = "generalized Noether theorem";
const TOWER_1: &str = "dependent tower theorem, function coefficients";
const TOWER_2: &str = "dependent tower theorem, vanishing C0";
const TOWER_3: &str = "dependent tower theorem, nonzero C0";
const EIGEN: &str = "symplectic eigenform theorem";
const INVERSE_NOETHER: &str = "inverse Noether theorem";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Probe(#[from] ZeroTestError),
    #[error("max order must be at least 1")]
    MaxOrder,
    #[error("internal inconsistency: L(X_h) of {quantity} is {} at {:?}", witness.value, witness.point)]
    Inconsistent { quantity: String, witness: Witness },
    #[error("{name} is not an infinitesimal symmetry: [Y, X_h] is {} at {:?}", witness.value, witness.point)]
    NotASymmetry { name: String, witness: Witness },
    #[error("function is not conserved: L(X_h)f is {} at {:?}", witness.value, witness.point)]
    NotConserved { witness: Witness },
    #[error("{0}")]
    Precondition(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCandidate {
    pub name: String,
    pub field: VectorField,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ClassificationLabel {
    NotASymmetry,
    Noether,
    GeometricNonHamiltonian {
        #[serde(serialize_with = "ser::display")]
        value: Expr,
    },
    ConformalSymplectic {
        #[serde(serialize_with = "ser::display")]
        c: Expr,
    },
    BiHamiltonian,
    HigherOrderNoether {
        n: usize,
    },
    FunctionCoefficients {
        #[serde(serialize_with = "ser::display_vec")]
        f: Vec<Expr>,
    },
    /// `C_1 .. C_{N-1}`.
    ConstantCoefficientsC0Zero {
        #[serde(serialize_with = "ser::display_vec")]
        c: Vec<Expr>,
    },
    /// `C_0 .. C_{N-1}`.
    ConstantCoefficientsC0Nonzero {
        #[serde(serialize_with = "ser::display_vec")]
        c: Vec<Expr>,
    },
    OmegaEigenOrderN {
        n: usize,
        #[serde(serialize_with = "ser::display")]
        c: Expr,
    },
    Inconclusive {
        reason: String,
    },
}

impl ClassificationLabel {
    pub fn name(&self) -> &'static str {
        match self {
            ClassificationLabel::NotASymmetry => "NotASymmetry",
            ClassificationLabel::Noether => "Noether",
            ClassificationLabel::GeometricNonHamiltonian { .. } => "GeometricNonHamiltonian",
            ClassificationLabel::ConformalSymplectic { .. } => "ConformalSymplectic",
            ClassificationLabel::BiHamiltonian => "BiHamiltonian",
            ClassificationLabel::HigherOrderNoether { .. } => "HigherOrderNoether",
            ClassificationLabel::FunctionCoefficients { .. } => "FunctionCoefficients",
            ClassificationLabel::ConstantCoefficientsC0Zero { .. } => "ConstantCoefficientsC0Zero",
            ClassificationLabel::ConstantCoefficientsC0Nonzero { .. } => {
                "ConstantCoefficientsC0Nonzero"
            }
            ClassificationLabel::OmegaEigenOrderN { .. } => "OmegaEigenOrderN",
            ClassificationLabel::Inconclusive { .. } => "Inconclusive",
        }
    }

    /// The result that the label rests on.
    pub fn citation(&self) -> Option<&'static str> {
        match self {
            ClassificationLabel::NotASymmetry | ClassificationLabel::Inconclusive { .. } => None,
            ClassificationLabel::Noether => Some(NOETHER),
            ClassificationLabel::GeometricNonHamiltonian { .. } => Some(NONHAM_1),
            ClassificationLabel::ConformalSymplectic { .. } => Some(NONHAM_2A),
            ClassificationLabel::BiHamiltonian => Some(NONHAM_2B),
            ClassificationLabel::HigherOrderNoether { .. } => Some(GENERALIZED_NOETHER),
            ClassificationLabel::FunctionCoefficients { .. } => Some(TOWER_1),
            ClassificationLabel::ConstantCoefficientsC0Zero { .. } => Some(TOWER_2),
            ClassificationLabel::ConstantCoefficientsC0Nonzero { .. } => Some(TOWER_3),
            ClassificationLabel::OmegaEigenOrderN { .. } => Some(EIGEN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivationStep {
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citation: Option<&'static str>,
    pub object: String,
}

fn step(rule: impl Into<String>, citation: Option<&'static str>, object: impl ToString) -> DerivationStep {
    DerivationStep {
        rule: rule.into(),
        citation,
        object: object.to_string(),
    }
}

/// A zero decision taken during the walk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub decision: String,
    pub verdict: ZeroVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConservedQuantity {
    pub name: String,
    #[serde(serialize_with = "ser::display")]
    pub value: Potential,
    /// Content-free form for display: `value = scale * reduced`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    pub trivial: bool,
    pub derivation: Vec<DerivationStep>,
    /// Verdict on `L(X_h)f`.
    pub conservation: ZeroVerdict,
}

impl ConservedQuantity {
    pub fn expr(&self) -> Option<&Expr> {
        self.value.as_expr()
    }

    /// What a reader should see: the reduced form when there is one.
    pub fn display(&self) -> String {
        self.reduced.clone().unwrap_or_else(|| self.value.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiHamiltonianPair {
    #[serde(serialize_with = "ser::display")]
    pub omega2: KForm,
    #[serde(serialize_with = "ser::display")]
    pub alpha2: KForm,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub candidate: String,
    pub label: ClassificationLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub citation: Option<&'static str>,
    pub conserved: Vec<ConservedQuantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bihamiltonian_pair: Option<BiHamiltonianPair>,
    /// `L^j(Y)w` for `j = 1, 2, ...` as far as the walk went.
    #[serde(serialize_with = "ser::display_vec")]
    pub omega_tower: Vec<KForm>,
    /// `L^j(Y)h` for `j = 1, 2, ...` as far as the walk went.
    #[serde(serialize_with = "ser::display_vec")]
    pub h_tower: Vec<Expr>,
    /// `theta_(j)` for the orders used.
    #[serde(serialize_with = "ser::display_vec")]
    pub theta_forms: Vec<KForm>,
    pub certificates: Vec<Certificate>,
    /// True when some branch was decided by probing rather than symbolically.
    pub numeric_certificate: bool,
    pub verification: Vec<DriftReport>,
}

impl ClassificationReport {
    /// Conserved quantities with a closed form.
    pub fn symbolic_conserved(&self) -> impl Iterator<Item = (&ConservedQuantity, &Expr)> {
        self.conserved.iter().filter_map(|c| c.expr().map(|e| (c, e)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub max_order: usize,
    pub probes: ProbeConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            max_order: DEFAULT_MAX_ORDER,
            probes: ProbeConfig::default(),
        }
    }
}

/// Lazily computed powers `L^j(Y)w`, `L^j(Y)h` and the forms `theta_(j) = L^j(Y) i(Y) w`.
pub struct LieTower<'a> {
    sys: &'a HamiltonianSystem,
    y: &'a VectorField,
    omega: Vec<KForm>,
    h: Vec<Expr>,
    theta: Vec<KForm>,
}

impl<'a> LieTower<'a> {
    pub fn new(sys: &'a HamiltonianSystem, y: &'a VectorField) -> LieTower<'a> {
        LieTower {
            sys,
            y,
            omega: vec![sys.omega().form().clone()],
            h: vec![sys.h().clone()],
            theta: Vec::new(),
        }
    }

    pub fn omega(&mut self, j: usize) -> Result<&KForm, ExteriorError> {
        while self.omega.len() <= j {
            let next = self.omega.last().expect("seeded").lie(self.y)?;
            self.omega.push(next);
        }
        Ok(&self.omega[j])
    }

    pub fn h(&mut self, j: usize) -> &Expr {
        while self.h.len() <= j {
            let next = self.y.apply(self.h.last().expect("seeded"));
            self.h.push(next);
        }
        &self.h[j]
    }

    pub fn theta(&mut self, j: usize) -> Result<&KForm, ExteriorError> {
        if self.theta.is_empty() {
            self.theta.push(self.sys.omega().form().interior(self.y)?);
        }
        while self.theta.len() <= j {
            let next = self.theta.last().expect("seeded").lie(self.y)?;
            self.theta.push(next);
        }
        Ok(&self.theta[j])
    }
}

/// `theta_(j) = L^j(Y) i(Y) w`.
pub fn theta_form(y: &VectorField, sys: &HamiltonianSystem, j: usize) -> Result<KForm, ExteriorError> {
    LieTower::new(sys, y).theta(j).cloned()
}

/// Decides `[Y, X_h] = 0`.
pub fn is_infinitesimal_symmetry(
    y: &VectorField,
    sys: &HamiltonianSystem,
) -> Result<ZeroVerdict, ClassifyError> {
    Ok(lie_bracket(y, sys.x_h())?.zero_verdict(sys.probe_config())?)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dependence {
    /// `target = sum_j coeffs[j] * forms[j]`, verified on every component.
    Dependent {
        coeffs: Vec<Expr>,
        verdict: ZeroVerdict,
    },
    /// The pointwise least-squares system is inconsistent at `witness`.
    Independent { witness: Vec<f64>, residual: f64 },
    Inconclusive { reason: String },
}

/// Looks for functions `f_j` with `target = sum_j f_j forms[j]`.
///
/// The identity is first tested pointwise at probe points by least squares.
/// If it holds everywhere, a full-rank square subsystem is picked at the best
/// conditioned probe, solved exactly and checked on every component.
pub fn detect_dependence(
    forms: &[KForm],
    target: &KForm,
    cfg: &ProbeConfig,
) -> Result<Dependence, ClassifyError> {
    let space = target.space().clone();
    let target_zero = target.zero_verdict(cfg)?;
    if target_zero.is_zero() {
        return Ok(Dependence::Dependent {
            coeffs: vec![Expr::zero(); forms.len()],
            verdict: target_zero,
        });
    }
    let n = forms.len();
    let rows: Vec<Vec<usize>> = forms
        .iter()
        .chain(std::iter::once(target))
        .flat_map(|f| f.terms().map(|(idx, _)| idx.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if n == 0 {
        return Ok(Dependence::Independent {
            witness: Vec::new(),
            residual: f64::INFINITY,
        });
    }
    let compile_all = |f: &KForm| -> Result<Vec<Compiled>, EvalError> {
        rows.iter().map(|r| compile(&f.coeff(r), &space)).collect()
    };
    let cols = forms
        .iter()
        .map(compile_all)
        .collect::<Result<Vec<_>, _>>()
        .map_err(ZeroTestError::Eval)?;
    let rhs = compile_all(target).map_err(ZeroTestError::Eval)?;
    let mut prober = Prober::new(&space, cfg.seed);
    let samples = prober.valid_points(cfg.count.min(24), |p| {
        let mut a = DMatrix::zeros(rows.len(), n);
        let mut b = DVector::zeros(rows.len());
        for r in 0..rows.len() {
            for (j, col) in cols.iter().enumerate() {
                a[(r, j)] = col[r].eval(p)?;
            }
            b[r] = rhs[r].eval(p)?;
        }
        Ok((a, b))
    })?;
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for (p, (a, b)) in &samples {
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.rank(1e-9 * smax.max(1e-300));
        let x = svd
            .solve(b, 1e-9 * smax.max(1e-300))
            .unwrap_or_else(|_| DVector::zeros(n));
        let residual = (a * &x - b).norm();
        let scale = a.norm().max(b.norm()).max(1.0);
        if residual > 1e3 * cfg.tol * scale {
            return Ok(Dependence::Independent {
                witness: p[..space.dim()].to_vec(),
                residual,
            });
        }
        if rank == n {
            let cond = svd.singular_values.min() / smax;
            if best.as_ref().map_or(true, |(c, _)| cond > *c) {
                best = Some((cond, a.clone()));
            }
        }
    }
    let Some((_, a)) = best else {
        return Ok(Dependence::Inconclusive {
            reason: "the lower forms are linearly dependent at every probe".into(),
        });
    };
    let mut chosen: Vec<usize> = Vec::new();
    for r in 0..rows.len() {
        let mut trial = chosen.clone();
        trial.push(r);
        let sub = DMatrix::from_fn(trial.len(), n, |i, j| a[(trial[i], j)]);
        let sv = sub.svd(false, false).singular_values;
        if sv.iter().filter(|s| **s > 1e-9 * sv.max().max(1e-300)).count() == trial.len() {
            chosen = trial;
        }
        if chosen.len() == n {
            break;
        }
    }
    let a_sym = chosen
        .iter()
        .map(|&r| forms.iter().map(|f| f.coeff(&rows[r])).collect())
        .collect();
    let b_sym = chosen.iter().map(|&r| target.coeff(&rows[r])).collect();
    let coeffs = match linsolve::solve(a_sym, b_sym, &space, cfg) {
        Ok(c) => c,
        Err(SolveError::Singular { minor, .. }) => {
            return Ok(Dependence::Inconclusive {
                reason: format!("no exact pivot for the coefficient system ({minor})"),
            })
        }
    };
    let mut combo = KForm::zero(space.clone(), target.degree());
    for (c, f) in coeffs.iter().zip(forms) {
        combo = combo.add(&f.scale(c))?;
    }
    let verdict = combo.sub(target)?.zero_verdict(cfg)?;
    if !verdict.is_zero() {
        return Ok(Dependence::Inconclusive {
            reason: "exact coefficients failed verification".into(),
        });
    }
    Ok(Dependence::Dependent { coeffs, verdict })
}

/// Walks the decision tree for one candidate.
pub fn classify(
    candidate: &SymmetryCandidate,
    sys: &HamiltonianSystem,
    config: &ClassifyConfig,
) -> Result<ClassificationReport, ClassifyError> {
    if config.max_order < 1 {
        return Err(ClassifyError::MaxOrder);
    }
    Walk {
        sys,
        y: &candidate.field,
        tower: LieTower::new(sys, &candidate.field),
        cfg: &config.probes,
        max_order: config.max_order,
        certificates: Vec::new(),
        omega_seen: 0,
        h_seen: 0,
        theta_seen: 0,
    }
    .run(&candidate.name)
}

struct Walk<'a> {
    sys: &'a HamiltonianSystem,
    y: &'a VectorField,
    tower: LieTower<'a>,
    cfg: &'a ProbeConfig,
    max_order: usize,
    certificates: Vec<Certificate>,
    omega_seen: usize,
    h_seen: usize,
    theta_seen: usize,
}

struct Outcome {
    label: ClassificationLabel,
    conserved: Vec<ConservedQuantity>,
    pair: Option<BiHamiltonianPair>,
}

impl Outcome {
    fn bare(label: ClassificationLabel) -> Outcome {
        Outcome {
            label,
            conserved: Vec::new(),
            pair: None,
        }
    }
}

/// Coefficients beyond this many expression nodes are not differentiated or integrated.
const MAX_COEFF_SIZE: usize = 4000;

/// Turns a relation whose coefficients swelled past [`MAX_COEFF_SIZE`] into an inconclusive one.
fn tame(dep: Dependence) -> Dependence {
    match dep {
        Dependence::Dependent { coeffs, .. } if coeffs.iter().any(|c| c.size() > MAX_COEFF_SIZE) => {
            let largest = coeffs.iter().map(Expr::size).max().unwrap_or(0);
            Dependence::Inconclusive {
                reason: format!(
                    "relation coefficients are too large to manipulate symbolically ({largest} nodes)"
                ),
            }
        }
        other => other,
    }
}

fn inconclusive(reason: impl Into<String>) -> Outcome {
    Outcome::bare(ClassificationLabel::Inconclusive {
        reason: reason.into(),
    })
}

impl<'a> Walk<'a> {
    fn record(&mut self, decision: impl Into<String>, verdict: ZeroVerdict) -> bool {
        let zero = verdict.is_zero();
        self.certificates.push(Certificate {
            decision: decision.into(),
            verdict,
        });
        zero
    }

    fn omega(&mut self, j: usize) -> Result<KForm, ClassifyError> {
        self.omega_seen = self.omega_seen.max(j);
        Ok(self.tower.omega(j)?.clone())
    }

    fn h(&mut self, j: usize) -> Expr {
        self.h_seen = self.h_seen.max(j);
        self.tower.h(j).clone()
    }

    fn theta(&mut self, j: usize) -> Result<KForm, ClassifyError> {
        self.theta_seen = self.theta_seen.max(j + 1);
        Ok(self.tower.theta(j)?.clone())
    }

    fn run(mut self, name: &str) -> Result<ClassificationReport, ClassifyError> {
        let outcome = self.decide()?;
        let omega_tower = (1..=self.omega_seen)
            .map(|j| self.tower.omega(j).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let h_tower = (1..=self.h_seen).map(|j| self.tower.h(j).clone()).collect();
        let theta_forms = (0..self.theta_seen)
            .map(|j| self.tower.theta(j).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let numeric_certificate = self.certificates.iter().any(|c| c.verdict.is_numeric())
            || outcome
                .conserved
                .iter()
                .any(|q| q.conservation.is_numeric());
        Ok(ClassificationReport {
            candidate: name.to_string(),
            citation: outcome.label.citation(),
            label: outcome.label,
            conserved: outcome.conserved,
            bihamiltonian_pair: outcome.pair,
            omega_tower,
            h_tower,
            theta_forms,
            certificates: self.certificates,
            numeric_certificate,
            verification: Vec::new(),
        })
    }

    fn decide(&mut self) -> Result<Outcome, ClassifyError> {
        let cfg = self.cfg;
        let bracket = lie_bracket(self.y, self.sys.x_h())?;
        if !self.record("[Y, X_h] = 0", bracket.zero_verdict(cfg)?) {
            return Ok(Outcome::bare(ClassificationLabel::NotASymmetry));
        }
        let lh1 = self.h(1);
        let lh1_zero = self.record("L(Y)h = 0", is_zero(&lh1, self.sys.space(), cfg)?);
        let w1 = self.omega(1)?;
        if self.record("L(Y)w = 0", w1.zero_verdict(cfg)?) {
            return if lh1_zero {
                self.noether()
            } else {
                self.geometric_non_hamiltonian(&lh1)
            };
        }
        let w0 = self.omega(0)?;
        match tame(detect_dependence(&[w0], &w1, cfg)?) {
            Dependence::Dependent { coeffs, verdict } => {
                self.record("L(Y)w = f0 w", verdict);
                let f0 = coeffs.into_iter().next().expect("one coefficient");
                return match self.constant(&f0)? {
                    Some(c) if !lh1_zero => self.conformal(c, &lh1),
                    Some(c) => self.c0_nonzero(vec![c], lh1_zero, 1),
                    None if lh1_zero => self.function_coefficients(vec![f0]),
                    None => Ok(inconclusive(
                        "L(Y)w = f0 w with non-constant f0 while L(Y)h is not zero",
                    )),
                };
            }
            Dependence::Independent { .. } => {}
            Dependence::Inconclusive { reason } => return Ok(inconclusive(reason)),
        }
        for order in 2..=self.max_order {
            let wn = self.omega(order)?;
            if self.record(format!("L^{order}(Y)w = 0"), wn.zero_verdict(cfg)?) {
                return if lh1_zero {
                    self.higher_order_noether(order)
                } else {
                    self.bihamiltonian(&w1, &lh1)
                };
            }
            let lower = (0..order).map(|j| self.omega(j)).collect::<Result<Vec<_>, _>>()?;
            match tame(detect_dependence(&lower, &wn, cfg)?) {
                Dependence::Dependent { coeffs, verdict } => {
                    self.record(format!("L^{order}(Y)w = sum f_j L^j(Y)w"), verdict);
                    let mut consts = Vec::new();
                    for c in &coeffs {
                        match self.constant(c)? {
                            Some(k) => consts.push(k),
                            None => break,
                        }
                    }
                    if consts.len() < coeffs.len() {
                        return if lh1_zero {
                            self.function_coefficients(coeffs)
                        } else {
                            Ok(inconclusive(format!(
                                "order {order} relation has non-constant coefficients while L(Y)h is not zero"
                            )))
                        };
                    }
                    let mut nonzero = Vec::new();
                    for (j, c) in consts.iter().enumerate() {
                        let z = is_zero(c, self.sys.space(), cfg)?;
                        nonzero.push(!self.record(format!("C{j} = 0"), z));
                    }
                    if nonzero[0] {
                        if !lh1_zero && nonzero[1..].iter().all(|nz| !nz) {
                            return self.omega_eigen(order, consts[0].clone());
                        }
                        return self.c0_nonzero(consts, lh1_zero, order);
                    }
                    return if lh1_zero {
                        self.c0_zero(consts, order)
                    } else {
                        self.bihamiltonian(&w1, &lh1)
                    };
                }
                Dependence::Independent { .. } => {}
                Dependence::Inconclusive { reason } => return Ok(inconclusive(reason)),
            }
        }
        if !lh1_zero {
            return self.bihamiltonian(&w1, &lh1);
        }
        Ok(inconclusive(format!(
            "no vanishing or dependent L^N(Y)w up to order {}",
            self.max_order
        )))
    }

    /// `Some(e)` when `e` is constant in the coordinates.
    fn constant(&mut self, e: &Expr) -> Result<Option<Expr>, ClassifyError> {
        Ok(match is_constant(e, self.sys.space(), self.cfg)? {
            ConstVerdict::Constant { expr, .. } => Some(expr),
            ConstVerdict::NotConstant { .. } => None,
        })
    }

    fn base_steps(&self, lh1_zero: bool) -> Vec<DerivationStep> {
        let mut steps = vec![step("[Y, X_h] = 0", Some(BRACKET_RULE), "0")];
        if lh1_zero {
            steps.push(step("L(Y)h = 0", None, "0"));
        }
        steps
    }

    fn noether(&mut self) -> Result<Outcome, ClassifyError> {
        let theta0 = self.theta(0)?;
        let mut steps = self.base_steps(true);
        steps.push(step("L(Y)w = 0", Some(NOETHER), "0"));
        steps.push(step("potential of i(Y)w", Some(NOETHER), &theta0));
        let q = self.from_potential("f_Y", &theta0, steps)?;
        Ok(Outcome {
            label: ClassificationLabel::Noether,
            conserved: vec![q],
            pair: None,
        })
    }

    fn geometric_non_hamiltonian(&mut self, lh1: &Expr) -> Result<Outcome, ClassifyError> {
        let Some(value) = self.constant(lh1)? else {
            return Ok(inconclusive(
                "L(Y)w = 0 but L(Y)h is not constant on the sampling box",
            ));
        };
        let mut steps = self.base_steps(false);
        steps.push(step("L(Y)w = 0", Some(NONHAM_1), "0"));
        steps.push(step("L(Y)h is locally constant", Some(NONHAM_1), &value));
        let q = self.from_expr("L(Y)h", lh1.clone(), steps)?;
        Ok(Outcome {
            label: ClassificationLabel::GeometricNonHamiltonian { value },
            conserved: vec![q],
            pair: None,
        })
    }

    fn conformal(&mut self, c: Expr, lh1: &Expr) -> Result<Outcome, ClassifyError> {
        let k = lh1.sub(&c.mul(self.sys.h()));
        let mut steps = self.base_steps(false);
        steps.push(step("L(Y)w = c w", Some(NONHAM_2A), &c));
        let k_const = self.constant(&k)?;
        match &k_const {
            Some(k) => steps.push(step("L(Y)h - c h = k, constant", Some(NONHAM_2A), k)),
            None => {
                return Ok(inconclusive(format!(
                    "L(Y)w = ({c}) w but L(Y)h - c h is not constant"
                )))
            }
        }
        let q = self.from_expr("L(Y)h", lh1.clone(), steps)?;
        Ok(Outcome {
            label: ClassificationLabel::ConformalSymplectic { c },
            conserved: vec![q],
            pair: None,
        })
    }

    fn bihamiltonian(&mut self, w1: &KForm, lh1: &Expr) -> Result<Outcome, ClassifyError> {
        let alpha2 = crate::exterior::KForm::scalar(self.sys.space().clone(), lh1.clone()).d();
        let valid = is_bihamiltonian_pair(self.sys, w1, &alpha2)?;
        let mut conserved = Vec::new();
        for j in 1..=self.max_order {
            let f = self.h(j);
            if !self.record(format!("L^{j}(Y)h = 0"), is_zero(&f, self.sys.space(), self.cfg)?)
            {
                let mut steps = self.base_steps(false);
                steps.push(step("L(Y)w is not a multiple of w", Some(NONHAM_2B), w1));
                steps.push(step(format!("L^{j}(Y)h is conserved"), Some(NONHAM_2B), &f));
                conserved.push(self.from_expr(&power_name(j), f, steps)?);
            } else {
                break;
            }
        }
        Ok(Outcome {
            label: ClassificationLabel::BiHamiltonian,
            conserved,
            pair: Some(BiHamiltonianPair {
                omega2: w1.clone(),
                alpha2,
                valid,
            }),
        })
    }

    fn higher_order_noether(&mut self, order: usize) -> Result<Outcome, ClassifyError> {
        let theta = self.theta(order - 1)?;
        let mut steps = self.base_steps(true);
        steps.push(step(format!("L^{order}(Y)w = 0"), Some(GENERALIZED_NOETHER), "0"));
        steps.push(step(
            format!("potential of theta_({})", order - 1),
            Some(GENERALIZED_NOETHER),
            &theta,
        ));
        let q = self.from_potential("f", &theta, steps)?;
        Ok(Outcome {
            label: ClassificationLabel::HigherOrderNoether { n: order },
            conserved: vec![q],
            pair: None,
        })
    }

    fn function_coefficients(&mut self, coeffs: Vec<Expr>) -> Result<Outcome, ClassifyError> {
        let mut conserved = Vec::new();
        for (j, f) in coeffs.iter().enumerate() {
            if self.constant(f)?.is_some() {
                continue;
            }
            let mut steps = self.base_steps(true);
            steps.push(step(format!("coefficient f{j} of the tower relation"), Some(TOWER_1), f));
            conserved.push(self.from_expr(&format!("f{j}"), f.clone(), steps)?);
        }
        Ok(Outcome {
            label: ClassificationLabel::FunctionCoefficients { f: coeffs },
            conserved,
            pair: None,
        })
    }

    fn c0_zero(&mut self, consts: Vec<Expr>, order: usize) -> Result<Outcome, ClassifyError> {
        let mut gamma = self.theta(order - 1)?;
        for (j, c) in consts.iter().enumerate().skip(1) {
            gamma = gamma.sub(&self.theta(j - 1)?.scale(c))?;
        }
        let closed = gamma.d().zero_verdict(self.cfg)?;
        let mut steps = self.base_steps(true);
        let rest = consts[1..].to_vec();
        if !self.record("d gamma = 0", closed) {
            return Ok(inconclusive("gamma built from the tower relation is not closed"));
        }
        steps.push(step("gamma = theta_(N-1) - sum C_j theta_(j-1)", Some(TOWER_2), &gamma));
        steps.push(step("potential of gamma", Some(TOWER_2), &gamma));
        let q = self.from_potential("f", &gamma, steps)?;
        Ok(Outcome {
            label: ClassificationLabel::ConstantCoefficientsC0Zero { c: rest },
            conserved: vec![q],
            pair: None,
        })
    }

    fn c0_nonzero(
        &mut self,
        consts: Vec<Expr>,
        lh1_zero: bool,
        order: usize,
    ) -> Result<Outcome, ClassifyError> {
        let mut f = consts[0].mul(self.sys.h());
        let mut steps = self.base_steps(lh1_zero);
        if lh1_zero {
            steps.push(step("f = C0 h", Some(TOWER_3), &f));
        } else {
            for (j, c) in consts.iter().enumerate().skip(1).take(order - 1) {
                f = f.add(&c.mul(&self.h(j)));
            }
            steps.push(step("f = C0 h + sum C_j L^j(Y)h", Some(TOWER_3), &f));
        }
        let q = self.from_expr("f", f, steps)?;
        Ok(Outcome {
            label: ClassificationLabel::ConstantCoefficientsC0Nonzero { c: consts },
            conserved: vec![q],
            pair: None,
        })
    }

    fn omega_eigen(&mut self, order: usize, c: Expr) -> Result<Outcome, ClassifyError> {
        let mut conserved = Vec::new();
        for j in 1..=order {
            let f = self.h(j);
            if self.record(format!("L^{j}(Y)h = 0"), is_zero(&f, self.sys.space(), self.cfg)?) {
                break;
            }
            let mut steps = self.base_steps(false);
            steps.push(step(format!("L^{order}(Y)w = C w"), Some(EIGEN), &c));
            steps.push(step(format!("L^{j}(Y)h is conserved"), Some(EIGEN), &f));
            conserved.push(self.from_expr(&power_name(j), f, steps)?);
        }
        Ok(Outcome {
            label: ClassificationLabel::OmegaEigenOrderN { n: order, c },
            conserved,
            pair: None,
        })
    }

    fn from_potential(
        &mut self,
        name: &str,
        form: &KForm,
        steps: Vec<DerivationStep>,
    ) -> Result<ConservedQuantity, ClassifyError> {
        let space = self.sys.space();
        let value = poincare_potential(form, &space.box_center(), self.cfg)?;
        match value {
            Potential::Symbolic(f) => self.from_expr(name, f, steps),
            numeric @ Potential::Numeric(_) => {
                // df = form, so L(X_h)f = i(X_h)form.
                let rate = form
                    .interior(self.sys.x_h())?
                    .as_scalar()
                    .expect("contraction of a 1-form");
                let conservation = self.check_conserved(name, &rate)?;
                let trivial = form.zero_verdict(self.cfg)?.is_zero();
                Ok(ConservedQuantity {
                    name: name.to_string(),
                    value: numeric,
                    reduced: None,
                    scale: None,
                    trivial,
                    derivation: steps,
                    conservation,
                })
            }
        }
    }

    fn from_expr(
        &mut self,
        name: &str,
        f: Expr,
        mut steps: Vec<DerivationStep>,
    ) -> Result<ConservedQuantity, ClassifyError> {
        let rate = self.sys.x_h().apply(&f);
        let conservation = self.check_conserved(name, &rate)?;
        steps.push(step("post-check L(X_h)f = 0", None, "0"));
        let trivial = self.constant(&f)?.is_some();
        // Only an integer content larger than one is split off for display.
        let (content, primitive) = f.primitive_parts();
        let split = content.is_integer() && content.numer().magnitude() > &1u32.into();
        Ok(ConservedQuantity {
            name: name.to_string(),
            reduced: split.then(|| primitive.to_string()),
            scale: split.then(|| content.to_string()),
            value: Potential::Symbolic(f),
            trivial,
            derivation: steps,
            conservation,
        })
    }

    fn check_conserved(&self, name: &str, rate: &Expr) -> Result<ZeroVerdict, ClassifyError> {
        match is_zero(rate, self.sys.space(), self.cfg)? {
            ZeroVerdict::NonZero { witness } => Err(ClassifyError::Inconsistent {
                quantity: name.to_string(),
                witness,
            }),
            v => Ok(v),
        }
    }
}

fn power_name(j: usize) -> String {
    if j == 1 {
        "L(Y)h".into()
    } else {
        format!("L^{j}(Y)h")
    }
}

fn require_symmetry(name: &str, y: &VectorField, sys: &HamiltonianSystem) -> Result<(), ClassifyError> {
    match is_infinitesimal_symmetry(y, sys)? {
        ZeroVerdict::NonZero { witness } => Err(ClassifyError::NotASymmetry {
            name: name.to_string(),
            witness,
        }),
        _ => Ok(()),
    }
}

fn require_conserved(f: &Expr, sys: &HamiltonianSystem) -> Result<(), ClassifyError> {
    match is_zero(&sys.x_h().apply(f), sys.space(), sys.probe_config())? {
        ZeroVerdict::NonZero { witness } => Err(ClassifyError::NotConserved { witness }),
        _ => Ok(()),
    }
}

/// `f_Y = xi_Y - i(Y)theta` with `d xi_Y = L(Y)theta`, for a potential `theta` of `w`.
pub fn conserved_via_potential(
    y: &VectorField,
    sys: &HamiltonianSystem,
    theta: &KForm,
) -> Result<Expr, ClassifyError> {
    let cfg = sys.probe_config();
    if !theta.d().sub(sys.omega().form())?.zero_verdict(cfg)?.is_zero() {
        return Err(ClassifyError::Precondition("d theta is not the symplectic form".into()));
    }
    let space = sys.space();
    let base = space.box_center();
    let xi = match poincare_potential(&theta.lie(y)?, &base, cfg)? {
        Potential::Symbolic(e) => e,
        Potential::Numeric(_) => {
            return Err(ClassifyError::Precondition(
                "L(Y)theta has no closed-form potential".into(),
            ))
        }
    };
    let f = xi.sub(&theta.interior(y)?.as_scalar().expect("1-form contraction"));
    let at_base = compile(&f, space)
        .and_then(|c| c.eval(&space.slots_at(&base)))
        .map_err(ZeroTestError::Eval)?;
    let shift = crate::symexpr::Rational::from_float(at_base)
        .map(Expr::constant)
        .unwrap_or_default();
    Ok(f.sub(&shift))
}

/// The Noether symmetry `Y_f` with `i(Y_f)w = df` of a conserved `f`.
pub fn generate_from_conserved(
    f: &Expr,
    sys: &HamiltonianSystem,
) -> Result<SymmetryCandidate, ClassifyError> {
    require_conserved(f, sys)?;
    let field = sys.hamiltonian_field(f)?;
    require_symmetry("Y_f", &field, sys).map_err(|e| match e {
        ClassifyError::NotASymmetry { witness, .. } => ClassifyError::Inconsistent {
            quantity: format!("[Y_f, X_h] ({INVERSE_NOETHER})"),
            witness,
        },
        other => other,
    })?;
    let lie = sys.omega().form().lie(&field)?;
    if let ZeroVerdict::NonZero { witness } = lie.zero_verdict(sys.probe_config())? {
        return Err(ClassifyError::Inconsistent {
            quantity: "L(Y_f)w".into(),
            witness,
        });
    }
    Ok(SymmetryCandidate {
        name: "Y_f".into(),
        field,
    })
}

/// `L(Y)f` when it is a new, non-constant conserved quantity.
pub fn new_conserved_via_action(
    y: &VectorField,
    f: &Expr,
    sys: &HamiltonianSystem,
) -> Result<Option<Expr>, ClassifyError> {
    require_symmetry("Y", y, sys)?;
    require_conserved(f, sys)?;
    let g = y.apply(f);
    if g.is_zero() {
        return Ok(None);
    }
    match is_constant(&g, sys.space(), sys.probe_config())? {
        ConstVerdict::Constant { .. } => Ok(None),
        ConstVerdict::NotConstant { .. } => Ok(Some(g)),
    }
}

/// `[Y1, Y2]`, which is again a symmetry.
pub fn symmetry_bracket(
    y1: &SymmetryCandidate,
    y2: &SymmetryCandidate,
    sys: &HamiltonianSystem,
) -> Result<SymmetryCandidate, ClassifyError> {
    require_symmetry(&y1.name, &y1.field, sys)?;
    require_symmetry(&y2.name, &y2.field, sys)?;
    let name = format!("[{}, {}]", y1.name, y2.name);
    let field = lie_bracket(&y1.field, &y2.field)?;
    require_symmetry(&name, &field, sys).map_err(|e| match e {
        ClassifyError::NotASymmetry { name, witness } => ClassifyError::Inconsistent {
            quantity: name,
            witness,
        },
        other => other,
    })?;
    Ok(SymmetryCandidate { name, field })
}
