//! Differential forms and vector fields in Darboux coordinates.
//!
//! The basis covectors are ordered as the coordinate list of the phase space;
//! every permutation sign below is taken relative to that order. Forms are
//! stored sparsely by strictly increasing index tuples.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::symexpr::{is_zero, Expr, PhaseSpace, ProbeConfig, ZeroTestError, ZeroVerdict};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExteriorError {
    #[error("operands live on different phase spaces")]
    SpaceMismatch,
    #[error("vector field needs {expected} components, got {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error("basis index {0} out of range")]
    IndexOutOfRange(usize),
}

fn same_space(a: &Arc<PhaseSpace>, b: &Arc<PhaseSpace>) -> Result<(), ExteriorError> {
    if Arc::ptr_eq(a, b) || a.coords() == b.coords() {
        Ok(())
    } else {
        Err(ExteriorError::SpaceMismatch)
    }
}

/// Sorts `idx` in place and returns the permutation sign, or `None` on a repeated index.
fn sort_with_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    space: Arc<PhaseSpace>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(space: Arc<PhaseSpace>, comps: Vec<Expr>) -> Result<VectorField, ExteriorError> {
        if comps.len() != space.dim() {
            return Err(ExteriorError::ComponentCount {
                expected: space.dim(),
                found: comps.len(),
            });
        }
        Ok(VectorField { space, comps })
    }

    pub fn zero(space: Arc<PhaseSpace>) -> VectorField {
        let comps = vec![Expr::zero(); space.dim()];
        VectorField { space, comps }
    }

    /// The coordinate field `d/dx_i`.
    pub fn coordinate(space: Arc<PhaseSpace>, i: usize) -> VectorField {
        let mut v = VectorField::zero(space);
        v.comps[i] = Expr::one();
        v
    }

    pub fn space(&self) -> &Arc<PhaseSpace> {
        &self.space
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (x, name) in self.comps.iter().zip(self.space.coords()) {
            if x.is_zero() {
                continue;
            }
            let df = f.diff(name);
            if !df.is_zero() {
                out = out.add(&x.mul(&df));
            }
        }
        out
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, ExteriorError> {
        same_space(&self.space, &other.space)?;
        Ok(VectorField {
            space: self.space.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, ExteriorError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField {
            space: self.space.clone(),
            comps: self.comps.iter().map(|c| c.mul(f)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    /// Aggregated zero verdict over all components.
    pub fn zero_verdict(&self, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroTestError> {
        let mut verdicts = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            let v = is_zero(c, &self.space, cfg)?;
            let stop = !v.is_zero();
            verdicts.push(v);
            if stop {
                break;
            }
        }
        Ok(ZeroVerdict::all(verdicts))
    }
}

/// Lie bracket `[X, Y]^k = X(Y^k) - Y(X^k)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, ExteriorError> {
    same_space(&x.space, &y.space)?;
    let comps = x
        .comps
        .iter()
        .zip(&y.comps)
        .map(|(xk, yk)| x.apply(yk).sub(&y.apply(xk)))
        .collect();
    Ok(VectorField {
        space: x.space.clone(),
        comps,
    })
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self
            .comps
            .iter()
            .zip(self.space.coords())
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, name)| (c, format!("d/d{name}")));
        write_terms(f, terms)
    }
}

fn write_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (&'a Expr, String)>,
) -> fmt::Result {
    let mut first = true;
    for (c, basis) in terms {
        let (neg, mag) = match c.as_constant() {
            Some(k) if k < crate::symexpr::rat(0) => (true, c.neg()),
            _ if c.num_terms() == 1 && c.to_string().starts_with('-') => (true, c.neg()),
            _ => (false, c.clone()),
        };
        let body = if mag.as_constant() == Some(crate::symexpr::rat(1)) {
            basis
        } else if mag.num_terms() > 1 {
            format!("({mag})*{basis}")
        } else {
            format!("{mag}*{basis}")
        };
        match (first, neg) {
            (true, false) => write!(f, "{body}")?,
            (true, true) => write!(f, "-{body}")?,
            (false, false) => write!(f, " + {body}")?,
            (false, true) => write!(f, " - {body}")?,
        }
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KForm {
    space: Arc<PhaseSpace>,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

impl KForm {
    /// The zero form. Degrees above the dimension are allowed and always zero.
    pub fn zero(space: Arc<PhaseSpace>, degree: usize) -> KForm {
        KForm {
            space,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(space: Arc<PhaseSpace>, f: Expr) -> KForm {
        let mut k = KForm::zero(space, 0);
        if !f.is_zero() {
            k.coeffs.insert(Vec::new(), f);
        }
        k
    }

    /// Builds a form from possibly unsorted index tuples; repeated indices drop out.
    pub fn from_terms(
        space: Arc<PhaseSpace>,
        degree: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, Expr)>,
    ) -> Result<KForm, ExteriorError> {
        let mut k = KForm::zero(space, degree);
        for (mut idx, c) in terms {
            assert_eq!(idx.len(), degree, "index tuple length must equal the degree");
            if let Some(&bad) = idx.iter().find(|&&i| i >= k.space.dim()) {
                return Err(ExteriorError::IndexOutOfRange(bad));
            }
            if let Some(sign) = sort_with_sign(&mut idx) {
                k.accumulate(idx, c.scale(&crate::symexpr::rat(sign)));
            }
        }
        Ok(k)
    }

    /// `dx_i`.
    pub fn differential(space: Arc<PhaseSpace>, i: usize) -> KForm {
        let mut k = KForm::zero(space, 1);
        k.coeffs.insert(vec![i], Expr::one());
        k
    }

    /// The canonical form `sum_i dq^i ^ dp_i`.
    pub fn canonical_symplectic(space: Arc<PhaseSpace>) -> KForm {
        let n = space.n();
        let mut k = KForm::zero(space, 2);
        for i in 0..n {
            k.coeffs.insert(vec![i, i + n], Expr::one());
        }
        k
    }

    /// The canonical one-form `sum_i p_i dq^i`.
    pub fn canonical_one_form(space: Arc<PhaseSpace>) -> KForm {
        let n = space.n();
        let mut k = KForm::zero(space.clone(), 1);
        for i in 0..n {
            k.coeffs.insert(vec![i], Expr::symbol(&space.coords()[i + n]));
        }
        k
    }

    fn accumulate(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.get(&idx) {
            Some(old) => old.add(&c),
            None => c,
        };
        if sum.is_zero() {
            self.coeffs.remove(&idx);
        } else {
            self.coeffs.insert(idx, sum);
        }
    }

    pub fn space(&self) -> &Arc<PhaseSpace> {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, idx: &[usize]) -> Expr {
        self.coeffs.get(idx).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    /// The coefficient of a 0-form.
    pub fn as_scalar(&self) -> Option<Expr> {
        (self.degree == 0).then(|| self.coeff(&[]))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        same_space(&self.space, &other.space)?;
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (idx, c) in &other.coeffs {
            out.accumulate(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Multiplication by a function.
    pub fn scale(&self, f: &Expr) -> KForm {
        let mut out = KForm::zero(self.space.clone(), self.degree);
        for (idx, c) in &self.coeffs {
            out.accumulate(idx.clone(), c.mul(f));
        }
        out
    }

    /// Aggregated zero verdict over all coefficients.
    pub fn zero_verdict(&self, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroTestError> {
        let mut verdicts = Vec::with_capacity(self.coeffs.len());
        for c in self.coeffs.values() {
            let v = is_zero(c, &self.space, cfg)?;
            let stop = !v.is_zero();
            verdicts.push(v);
            if stop {
                break;
            }
        }
        Ok(ZeroVerdict::all(verdicts))
    }

    pub fn wedge(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        same_space(&self.space, &other.space)?;
        let mut out = KForm::zero(self.space.clone(), self.degree + other.degree);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let mut idx: Vec<usize> = a.iter().chain(b).copied().collect();
                if let Some(sign) = sort_with_sign(&mut idx) {
                    out.accumulate(idx, ca.mul(cb).scale(&crate::symexpr::rat(sign)));
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn d(&self) -> KForm {
        let mut out = KForm::zero(self.space.clone(), self.degree + 1);
        for (idx, c) in &self.coeffs {
            for (k, name) in self.space.coords().iter().enumerate() {
                if idx.contains(&k) {
                    continue;
                }
                let dc = c.diff(name);
                if dc.is_zero() {
                    continue;
                }
                let pos = idx.iter().filter(|&&i| i < k).count();
                let mut new_idx = idx.clone();
                new_idx.insert(pos, k);
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                out.accumulate(new_idx, dc.scale(&crate::symexpr::rat(sign)));
            }
        }
        out
    }

    /// Contraction `i(X)a` on the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<KForm, ExteriorError> {
        same_space(&self.space, &x.space)?;
        if self.degree == 0 {
            return Err(ExteriorError::DegreeZero);
        }
        let mut out = KForm::zero(self.space.clone(), self.degree - 1);
        for (idx, c) in &self.coeffs {
            for (s, &i) in idx.iter().enumerate() {
                let xi = &x.comps[i];
                if xi.is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(s);
                let sign = if s % 2 == 0 { 1 } else { -1 };
                out.accumulate(rest, xi.mul(c).scale(&crate::symexpr::rat(sign)));
            }
        }
        Ok(out)
    }

    /// Lie derivative by Cartan's formula `L(X) = i(X) d + d i(X)`.
    pub fn lie(&self, x: &VectorField) -> Result<KForm, ExteriorError> {
        same_space(&self.space, &x.space)?;
        if self.degree == 0 {
            return Ok(KForm::scalar(self.space.clone(), x.apply(&self.coeff(&[]))));
        }
        let a = self.d().interior(x)?;
        let b = self.interior(x)?.d();
        a.add(&b)
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree == 0 {
            return write!(f, "{}", self.coeff(&[]));
        }
        let coords = self.space.coords();
        let terms = self.coeffs.iter().map(|(idx, c)| {
            let basis = idx
                .iter()
                .map(|&i| format!("d{}", coords[i]))
                .collect::<Vec<_>>()
                .join("^");
            (c, basis)
        });
        write_terms(f, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::expr;

    fn space() -> Arc<PhaseSpace> {
        Arc::new(PhaseSpace::canonical(2, &[("Omega", 1.0)]).unwrap())
    }

    fn field(s: &Arc<PhaseSpace>, comps: [&str; 4]) -> VectorField {
        VectorField::new(s.clone(), comps.iter().map(|c| expr(c, s).unwrap()).collect()).unwrap()
    }

    #[test]
    fn repeated_covector_wedges_to_zero() {
        let s = space();
        let w = KForm::from_terms(s.clone(), 2, [(vec![0, 2], Expr::one())]).unwrap();
        assert!(w.wedge(&w).unwrap().is_zero());
    }

    #[test]
    fn canonical_form_from_wedges() {
        let s = space();
        let dq1 = KForm::differential(s.clone(), 0);
        let dp1 = KForm::differential(s.clone(), 2);
        let dq2 = KForm::differential(s.clone(), 1);
        let dp2 = KForm::differential(s.clone(), 3);
        let w = dq1.wedge(&dp1).unwrap().add(&dq2.wedge(&dp2).unwrap()).unwrap();
        assert_eq!(w, KForm::canonical_symplectic(s.clone()));
        assert_eq!(w.to_string(), "dq1^dp1 + dq2^dp2");
        assert!(w.d().is_zero());
    }

    #[test]
    fn unsorted_terms_pick_up_sign() {
        let s = space();
        let w = KForm::from_terms(s, 2, [(vec![2, 0], Expr::one())]).unwrap();
        assert_eq!(w.to_string(), "-dq1^dp1");
    }

    #[test]
    fn interior_with_coordinate_field() {
        let s = space();
        let w = KForm::canonical_symplectic(s.clone());
        let y = VectorField::coordinate(s.clone(), 1);
        assert_eq!(w.interior(&y).unwrap(), KForm::differential(s, 3));
    }

    #[test]
    fn interior_of_zero_form_is_error() {
        let s = space();
        let f = KForm::scalar(s.clone(), Expr::one());
        assert_eq!(f.interior(&VectorField::zero(s)), Err(ExteriorError::DegreeZero));
    }

    #[test]
    fn lie_derivative_of_omega_for_swap_field() {
        let s = space();
        let y = field(&s, ["q2", "q1", "p2", "p1"]);
        let w = KForm::canonical_symplectic(s.clone());
        let l1 = w.lie(&y).unwrap();
        assert_eq!(l1.to_string(), "2*dq1^dp2 + 2*dq2^dp1");
        let l2 = l1.lie(&y).unwrap();
        assert_eq!(l2, w.scale(&Expr::int(4)));
    }

    #[test]
    fn lie_by_zero_field_vanishes() {
        let s = space();
        let w = KForm::canonical_symplectic(s.clone());
        assert!(w.lie(&VectorField::zero(s)).unwrap().is_zero());
    }

    #[test]
    fn bracket_by_component_formula() {
        let s = space();
        let a = field(&s, ["1", "0", "0", "0"]);
        let b = field(&s, ["0", "q1", "0", "0"]);
        let c = lie_bracket(&a, &b).unwrap();
        assert_eq!(c, VectorField::coordinate(s.clone(), 1));
        assert_eq!(c.to_string(), "d/dq2");
        assert!(lie_bracket(&b, &b).unwrap().is_zero());
    }

    #[test]
    fn top_degree_derivative_is_zero() {
        let s = space();
        let top = KForm::from_terms(s.clone(), 4, [(vec![0, 1, 2, 3], expr("q1^2", &s).unwrap())])
            .unwrap();
        let d = top.d();
        assert_eq!(d.degree(), 5);
        assert!(d.is_zero());
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = space();
        let b = Arc::new(PhaseSpace::new(&["x", "y"], &[]).unwrap());
        let w = KForm::canonical_symplectic(a);
        assert_eq!(
            w.interior(&VectorField::zero(b)),
            Err(ExteriorError::SpaceMismatch)
        );
    }
}
