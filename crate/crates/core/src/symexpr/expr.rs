//! Canonical scalar expressions.
//!
//! An [`Expr`] is a finite sum of monomials with exact rational coefficients.
//! A monomial is a sorted product of atoms raised to nonzero rational
//! exponents. Atoms are symbols, elementary functions of a canonical argument,
//! or powers of a multi-term base that cannot be expanded (negative or
//! fractional exponents). Every constructor keeps the representation in normal
//! form, so structural equality is the symbolic equality used by zero tests.
//!
//! Rewrites applied while building:
//! - products over sums are distributed and like terms collected;
//! - `cos(u)^k` for `k >= 2` becomes `cos(u)^(k mod 2) * (1 - sin(u)^2)^(k div 2)`,
//!   which subsumes `sin^2 + cos^2 = 1`;
//! - `cos(u)^(-2k)` becomes `(1 + tan(u)^2)^k`;
//! - a group of terms sharing a factor `b^(-k)` is divided exactly by `b`
//!   when the division leaves no remainder.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ExprError;

pub type Rational = BigRational;

/// Elementary functions kept as atoms. `sqrt` is represented as a power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Sym(Arc<str>),
    Func(Func, Box<Expr>),
    /// A base that is kept unexpanded; only carries non-positive-integer exponents.
    Power(Box<Expr>),
}

/// Product of atoms with nonzero exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, Rational)>);

impl Monomial {
    pub fn factors(&self) -> &[(Atom, Rational)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn from_unsorted(mut factors: Vec<(Atom, Rational)>) -> Monomial {
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Atom, Rational)> = Vec::with_capacity(factors.len());
        for (atom, e) in factors {
            match merged.last_mut() {
                Some((last, le)) if *last == atom => *le += e,
                _ => merged.push((atom, e)),
            }
        }
        merged.retain(|(_, e)| !e.is_zero());
        Monomial(merged)
    }

    fn exponent_of(&self, atom: &Atom) -> Option<&Rational> {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .ok()
            .map(|i| &self.0[i].1)
    }

    fn without(&self, atom: &Atom) -> Monomial {
        Monomial(self.0.iter().filter(|(a, _)| a != atom).cloned().collect())
    }

    fn total_degree(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, (_, e)| acc + e)
    }

    fn is_polynomial(&self) -> bool {
        self.0.iter().all(|(_, e)| e.is_integer() && e.is_positive())
    }

    /// Graded lexicographic comparison; a monomial order for exact division.
    fn grlex_cmp(&self, other: &Monomial) -> Ordering {
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        let zero = Rational::zero();
        loop {
            let a = self.0.get(i);
            let b = other.0.get(j);
            let (ea, eb) = match (a, b) {
                (None, None) => return Ordering::Equal,
                (Some((aa, ea)), Some((ab, eb))) => match aa.cmp(ab) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        (ea, eb)
                    }
                    Ordering::Less => {
                        i += 1;
                        (ea, &zero)
                    }
                    Ordering::Greater => {
                        j += 1;
                        (&zero, eb)
                    }
                },
                (Some((_, ea)), None) => {
                    i += 1;
                    (ea, &zero)
                }
                (None, Some((_, eb))) => {
                    j += 1;
                    (&zero, eb)
                }
            };
            match ea.cmp(eb) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
    }

    /// `self / other` if every exponent of `other` is at most the one in `self`.
    fn divide(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = self.0.clone();
        for (atom, e) in &other.0 {
            let pos = out.iter().position(|(a, _)| a == atom)?;
            if out[pos].1 < *e {
                return None;
            }
            out[pos].1 -= e;
        }
        out.retain(|(_, e)| !e.is_zero());
        Some(Monomial(out))
    }
}

/// A canonical sum of terms. The empty sum is zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: BTreeMap<Monomial, Rational>,
}

pub(crate) fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn rat_to_i64(r: &Rational) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

/// Exact `r^(p/q)` for positive `r` when both numerator and denominator are perfect q-th powers.
fn rational_root(r: &Rational, e: &Rational) -> Option<Rational> {
    if !r.is_positive() {
        return None;
    }
    let q = e.denom().to_u32()?;
    let p = e.numer().to_i64()?;
    let n = r.numer().nth_root(q);
    let d = r.denom().nth_root(q);
    if num_traits::pow(n.clone(), q as usize) != *r.numer()
        || num_traits::pow(d.clone(), q as usize) != *r.denom()
    {
        return None;
    }
    let base = Rational::new(n, d);
    Some(rational_powi(&base, p))
}

fn rational_powi(r: &Rational, p: i64) -> Rational {
    if p >= 0 {
        num_traits::pow(r.clone(), p as usize)
    } else {
        num_traits::pow(r.recip(), (-p) as usize)
    }
}

enum Settled {
    Plain(Atom, Rational),
    Expand(Expr),
}

fn settle(atom: Atom, e: Rational) -> Settled {
    match (&atom, rat_to_i64(&e)) {
        (Atom::Power(base), Some(k)) if k > 0 => Settled::Expand(base.powi_unchecked(k)),
        (Atom::Func(Func::Cos, arg), Some(k)) if k >= 2 => {
            let rest = Expr::func(Func::Cos, (**arg).clone()).powi_unchecked(k % 2);
            let sin2 = Expr::func(Func::Sin, (**arg).clone()).powi_unchecked(2);
            let pyth = Expr::one().sub(&sin2).powi_unchecked(k / 2);
            Settled::Expand(rest.mul(&pyth))
        }
        (Atom::Func(Func::Cos, arg), Some(k)) if k <= -2 => {
            let m = -k;
            let tan2 = Expr::func(Func::Tan, (**arg).clone()).powi_unchecked(2);
            let sec2 = Expr::one().add(&tan2).powi_unchecked(m / 2);
            if m % 2 == 1 {
                let cos = Expr::term(
                    Rational::one(),
                    Monomial(vec![(atom.clone(), rat(-1))]),
                );
                Settled::Expand(cos.mul(&sec2))
            } else {
                Settled::Expand(sec2)
            }
        }
        _ => Settled::Plain(atom, e),
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::default()
    }

    pub fn one() -> Expr {
        Expr::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::term(c, Monomial::default())
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(rat(n))
    }

    pub fn symbol(name: &str) -> Expr {
        Expr::term(
            Rational::one(),
            Monomial(vec![(Atom::Sym(Arc::from(name)), Rational::one())]),
        )
    }

    fn term(c: Rational, m: Monomial) -> Expr {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Expr { terms }
    }

    /// Builds `c * prod(factors)`, settling atoms that must be rewritten.
    fn build(c: Rational, factors: Vec<(Atom, Rational)>) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let mono = Monomial::from_unsorted(factors);
        let mut plain = Vec::with_capacity(mono.0.len());
        let mut extra = Vec::new();
        for (atom, e) in mono.0 {
            match settle(atom, e) {
                Settled::Plain(a, e) => plain.push((a, e)),
                Settled::Expand(x) => extra.push(x),
            }
        }
        let mut out = Expr::term(c, Monomial(plain));
        for x in extra {
            out = out.mul_raw(&x);
        }
        out
    }

    pub(crate) fn from_factors(c: Rational, factors: Vec<(Atom, Rational)>) -> Expr {
        Expr::build(c, factors)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of nodes in the tree: one per term, atom factor and nested expression node.
    pub fn size(&self) -> usize {
        self.terms
            .keys()
            .map(|m| {
                1 + m
                    .factors()
                    .iter()
                    .map(|(a, _)| match a {
                        Atom::Sym(_) => 1,
                        Atom::Func(_, e) | Atom::Power(e) => 1 + e.size(),
                    })
                    .sum::<usize>()
            })
            .sum()
    }

    /// The value when the expression is a rational constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        let (m, c) = self.single_term()?;
        match (c.is_one(), m.0.as_slice()) {
            (true, [(Atom::Sym(s), e)]) if e.is_one() => Some(s),
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// All symbol names, including those nested inside atoms.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        for m in self.terms.keys() {
            for (atom, _) in &m.0 {
                match atom {
                    Atom::Sym(s) => {
                        out.insert(s.to_string());
                    }
                    Atom::Func(_, a) | Atom::Power(a) => a.collect_symbols(out),
                }
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        self.symbols().contains(name)
    }

    pub fn neg(&self) -> Expr {
        self.scale(&rat(-1))
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    fn add_raw(&self, other: &Expr) -> Expr {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            add_into(&mut terms, m.clone(), c.clone());
        }
        Expr { terms }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        self.add_raw(other).reduce_quotients()
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    fn mul_raw(&self, other: &Expr) -> Expr {
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut factors = m1.0.clone();
                factors.extend(m2.0.iter().cloned());
                let needs_settle = m1
                    .0
                    .iter()
                    .any(|(a, _)| m2.exponent_of(a).is_some());
                if needs_settle {
                    let prod = Expr::build(c1 * c2, factors);
                    for (m, c) in prod.terms {
                        add_into(&mut terms, m, c);
                    }
                } else {
                    add_into(&mut terms, Monomial::from_unsorted(factors), c1 * c2);
                }
            }
        }
        Expr { terms }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        self.mul_raw(other).reduce_quotients()
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        self.powi(-1)
    }

    fn powi_unchecked(&self, n: i64) -> Expr {
        self.powi(n).expect("nonnegative power of an expression")
    }

    pub fn powi(&self, n: i64) -> Result<Expr, ExprError> {
        if n == 0 {
            return Ok(Expr::one());
        }
        if self.is_zero() {
            return if n > 0 {
                Ok(Expr::zero())
            } else {
                Err(ExprError::DivisionByZero)
            };
        }
        if let Some((m, c)) = self.single_term() {
            let e = rat(n);
            let factors = m.0.iter().map(|(a, k)| (a.clone(), k * &e)).collect();
            return Ok(Expr::build(rational_powi(c, n), factors));
        }
        if n > 0 {
            let mut result = Expr::one();
            let mut base = self.clone();
            let mut k = n;
            while k > 0 {
                if k & 1 == 1 {
                    result = result.mul(&base);
                }
                k >>= 1;
                if k > 0 {
                    base = base.mul(&base);
                }
            }
            return Ok(result);
        }
        let (content, primitive) = self.primitive_parts();
        Ok(Expr::term(
            rational_powi(&content, n),
            Monomial(vec![(Atom::Power(Box::new(primitive)), rat(n))]),
        ))
    }

    /// `self^e` for a rational exponent.
    pub fn powr(&self, e: &Rational) -> Result<Expr, ExprError> {
        if let Some(n) = rat_to_i64(e) {
            return self.powi(n);
        }
        if self.is_zero() {
            return if e.is_positive() {
                Ok(Expr::zero())
            } else {
                Err(ExprError::DivisionByZero)
            };
        }
        if let Some((m, c)) = self.single_term() {
            if let Some(root) = rational_root(c, e) {
                let factors = m.0.iter().map(|(a, k)| (a.clone(), k * e)).collect();
                return Ok(Expr::build(root, factors));
            }
        }
        Ok(Expr::term(
            Rational::one(),
            Monomial(vec![(Atom::Power(Box::new(self.clone())), e.clone())]),
        ))
    }

    pub fn sqrt(&self) -> Result<Expr, ExprError> {
        self.powr(&Rational::new(BigInt::from(1), BigInt::from(2)))
    }

    /// Applies an elementary function, folding exact values at zero/one and odd symmetry.
    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_constant() {
            match f {
                Func::Sin | Func::Tan if c.is_zero() => return Expr::zero(),
                Func::Cos | Func::Exp if c.is_zero() => return Expr::one(),
                Func::Ln if c.is_one() => return Expr::zero(),
                _ => {}
            }
        }
        let negative = arg
            .terms
            .iter()
            .next()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false);
        let atom = |a: Expr| {
            Expr::term(
                Rational::one(),
                Monomial(vec![(Atom::Func(f, Box::new(a)), Rational::one())]),
            )
        };
        match f {
            Func::Sin | Func::Tan if negative => atom(arg.neg()).neg(),
            Func::Cos if negative => atom(arg.neg()),
            _ => atom(arg),
        }
    }

    /// Splits into `content * primitive` with the primitive's first coefficient positive
    /// and its coefficients integers with gcd one.
    pub fn primitive_parts(&self) -> (Rational, Expr) {
        if self.is_zero() {
            return (Rational::one(), Expr::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_integer::Integer::gcd(&num_gcd, c.numer());
            den_lcm = num_integer::Integer::lcm(&den_lcm, c.denom());
        }
        let mut content = Rational::new(num_gcd, den_lcm);
        if self.terms.values().next().unwrap().is_negative() {
            content = -content;
        }
        let primitive = self.scale(&content.recip());
        (content, primitive)
    }

    /// Divides groups of terms sharing `b^(-k)` by `b` when exact.
    fn reduce_quotients(self) -> Expr {
        let mut current = self;
        for _ in 0..16 {
            match current.reduce_once() {
                Some(next) => current = next,
                None => break,
            }
        }
        current
    }

    fn reduce_once(&self) -> Option<Expr> {
        if self.terms.len() < 2 {
            return None;
        }
        let mut candidates: BTreeMap<(&Atom, &Rational), usize> = BTreeMap::new();
        for m in self.terms.keys() {
            for (atom, e) in &m.0 {
                if matches!(atom, Atom::Power(_)) && e.is_integer() && e.is_negative() {
                    *candidates.entry((atom, e)).or_default() += 1;
                }
            }
        }
        for ((atom, e), count) in candidates {
            if count < 2 {
                continue;
            }
            let Atom::Power(base) = atom else { continue };
            if !base.is_polynomial() {
                continue;
            }
            let mut group = BTreeMap::new();
            let mut rest = BTreeMap::new();
            for (m, c) in &self.terms {
                if m.exponent_of(atom) == Some(e) {
                    group.insert(m.without(atom), c.clone());
                } else {
                    rest.insert(m.clone(), c.clone());
                }
            }
            let group = Expr { terms: group };
            // Clear remaining negative exponents so the group is a polynomial.
            let mut lift: BTreeMap<Atom, Rational> = BTreeMap::new();
            let mut ok = true;
            for m in group.terms.keys() {
                for (a, k) in &m.0 {
                    if !k.is_integer() {
                        ok = false;
                    } else if k.is_negative() {
                        let need = -k.clone();
                        let entry = lift.entry(a.clone()).or_insert_with(Rational::zero);
                        if need > *entry {
                            *entry = need;
                        }
                    }
                }
            }
            if !ok {
                continue;
            }
            let lift_mono = Monomial(lift.into_iter().collect());
            let lifted = Expr {
                terms: group
                    .terms
                    .iter()
                    .map(|(m, c)| (mono_mul_plain(m, &lift_mono), c.clone()))
                    .collect(),
            };
            if !lifted.is_polynomial() {
                continue;
            }
            let Some(quotient) = lifted.exact_div(base) else {
                continue;
            };
            let unlift: Vec<(Atom, Rational)> = lift_mono
                .0
                .iter()
                .map(|(a, k)| (a.clone(), -k.clone()))
                .collect();
            let mut factors = unlift;
            let new_exp = e + Rational::one();
            if !new_exp.is_zero() {
                factors.push((atom.clone(), new_exp));
            }
            let scaled = quotient.mul_raw(&Expr::build(Rational::one(), factors));
            return Some(Expr { terms: rest }.add_raw(&scaled));
        }
        None
    }

    fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.is_polynomial())
    }

    fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().max_by(|a, b| a.0.grlex_cmp(b.0))
    }

    /// Exact multivariate division treating atoms as indeterminates.
    fn exact_div(&self, divisor: &Expr) -> Option<Expr> {
        let (lm, lc) = divisor.leading()?;
        let mut rem = self.clone();
        let mut quotient = BTreeMap::new();
        for _ in 0..500 {
            let Some((m, c)) = rem.leading() else {
                return Some(Expr { terms: quotient });
            };
            let qm = m.divide(lm)?;
            let qc = c / lc;
            let q = Expr::term(qc.clone(), qm.clone());
            add_into(&mut quotient, qm, qc);
            rem = rem.add_raw(&divisor.mul_raw(&q).neg());
        }
        None
    }

    /// Substitutes expressions for symbols.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Result<Expr, ExprError> {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            let mut t = Expr::constant(c.clone());
            for (atom, e) in &m.0 {
                let base = match atom {
                    Atom::Sym(s) => match map.get(&**s) {
                        Some(v) => v.clone(),
                        None => {
                            t = t.mul(&Expr::build(
                                Rational::one(),
                                vec![(atom.clone(), e.clone())],
                            ));
                            continue;
                        }
                    },
                    Atom::Func(f, a) => Expr::func(*f, a.substitute(map)?),
                    Atom::Power(b) => b.substitute(map)?,
                };
                t = t.mul(&base.powr(e)?);
            }
            out = out.add_raw(&t);
        }
        Ok(out.reduce_quotients())
    }

    /// Coefficients of the polynomial in `var`, when `var` occurs only with
    /// nonnegative integer exponents at the top level.
    pub fn polynomial_coefficients(&self, var: &str) -> Option<BTreeMap<u32, Expr>> {
        let mut out: BTreeMap<u32, Expr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut degree = 0u32;
            let mut rest = Vec::new();
            for (atom, e) in &m.0 {
                match atom {
                    Atom::Sym(s) if &**s == var => {
                        if !e.is_integer() || e.is_negative() {
                            return None;
                        }
                        degree = e.to_integer().to_u32()?;
                    }
                    Atom::Func(_, a) | Atom::Power(a) if a.depends_on(var) => return None,
                    _ => rest.push((atom.clone(), e.clone())),
                }
            }
            let entry = out.entry(degree).or_default();
            *entry = entry.add_raw(&Expr::term(c.clone(), Monomial(rest)));
        }
        Some(out)
    }
}

fn mono_mul_plain(a: &Monomial, b: &Monomial) -> Monomial {
    let mut f = a.0.clone();
    f.extend(b.0.iter().cloned());
    Monomial::from_unsorted(f)
}

fn add_into(terms: &mut BTreeMap<Monomial, Rational>, m: Monomial, c: Rational) {
    use std::collections::btree_map::Entry;
    match terms.entry(m) {
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ast())
    }
}
