//! Floating-point evaluation of canonical expressions.

use num_traits::ToPrimitive;

use super::expr::{Atom, Expr, Func, Rational};
use super::EvalError;

pub(crate) fn apply_func(f: Func, v: f64) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Tan => {
            if v.cos().abs() < 1e-12 {
                return Err("tangent pole");
            }
            v.tan()
        }
        Func::Exp => v.exp(),
        Func::Ln => {
            if v <= 0.0 {
                return Err("logarithm of a nonpositive number");
            }
            v.ln()
        }
    })
}

pub(crate) fn pow_checked(base: f64, e: &Rational) -> Result<f64, &'static str> {
    if e.is_integer() {
        let k = e.to_integer().to_i32().ok_or("exponent out of range")?;
        if k < 0 && base == 0.0 {
            return Err("division by zero");
        }
        Ok(base.powi(k))
    } else {
        if base < 0.0 {
            return Err("fractional power of a negative number");
        }
        if base == 0.0 && e < &Rational::from_integer(0.into()) {
            return Err("division by zero");
        }
        Ok(base.powf(e.to_f64().unwrap_or(f64::NAN)))
    }
}

#[derive(Clone, Debug)]
enum Node {
    Slot(usize),
    Func(Func, Box<Compiled>, Expr),
    Power(Box<Compiled>, Expr),
}

/// An expression with symbols resolved to slot indices, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Compiled {
    terms: Vec<(f64, Vec<(Node, Rational, Option<i32>)>)>,
}

impl Compiled {
    pub fn new(expr: &Expr, slot: &dyn Fn(&str) -> Option<usize>) -> Result<Compiled, EvalError> {
        let mut terms = Vec::with_capacity(expr.num_terms());
        for (mono, c) in expr.terms() {
            let mut factors = Vec::with_capacity(mono.factors().len());
            for (atom, e) in mono.factors() {
                let node = match atom {
                    Atom::Sym(s) => {
                        Node::Slot(slot(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?)
                    }
                    Atom::Func(f, arg) => {
                        Node::Func(*f, Box::new(Compiled::new(arg, slot)?), (**arg).clone())
                    }
                    Atom::Power(b) => Node::Power(Box::new(Compiled::new(b, slot)?), (**b).clone()),
                };
                let int = if e.is_integer() {
                    e.to_integer().to_i32()
                } else {
                    None
                };
                factors.push((node, e.clone(), int));
            }
            terms.push((c.to_f64().unwrap_or(f64::NAN), factors));
        }
        Ok(Compiled { terms })
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for (c, factors) in &self.terms {
            let mut t = *c;
            for (node, e, int) in factors {
                let (v, label) = match node {
                    Node::Slot(i) => (values[*i], None),
                    Node::Func(f, arg, src) => {
                        let a = arg.eval(values)?;
                        let v = apply_func(*f, a).map_err(|reason| EvalError::Domain {
                            expr: format!("{}({})", f.name(), src),
                            reason,
                        })?;
                        (v, None)
                    }
                    Node::Power(b, src) => (b.eval(values)?, Some(src)),
                };
                let p = match int {
                    Some(k) if *k >= 0 || v != 0.0 => v.powi(*k),
                    _ => pow_checked(v, e).map_err(|reason| EvalError::Domain {
                        expr: match label {
                            Some(src) => format!("({src})^({e})"),
                            None => format!("{}", node_label(node)),
                        },
                        reason,
                    })?,
                };
                t *= p;
            }
            sum += t;
        }
        Ok(sum)
    }
}

fn node_label(node: &Node) -> String {
    match node {
        Node::Slot(i) => format!("slot {i}"),
        Node::Func(f, _, src) => format!("{}({})", f.name(), src),
        Node::Power(_, src) => format!("({src})"),
    }
}

impl Expr {
    /// Evaluates with symbol values supplied by `lookup`.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let names: Vec<String> = self.symbols().into_iter().collect();
        let values = names
            .iter()
            .map(|n| lookup(n).ok_or_else(|| EvalError::Unbound(n.clone())))
            .collect::<Result<Vec<f64>, _>>()?;
        let compiled = Compiled::new(self, &|s| names.iter().position(|n| n == s))?;
        compiled.eval(&values)
    }
}
