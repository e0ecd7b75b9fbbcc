use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{Atom, Expr, Func, Rational};
use super::{EvalError, ExprError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryFn {
    pub fn from_name(name: &str) -> Option<UnaryFn> {
        Some(match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "sqrt" => UnaryFn::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    fn func(self) -> Option<Func> {
        Some(match self {
            UnaryFn::Sin => Func::Sin,
            UnaryFn::Cos => Func::Cos,
            UnaryFn::Tan => Func::Tan,
            UnaryFn::Exp => Func::Exp,
            UnaryFn::Ln => Func::Ln,
            UnaryFn::Sqrt => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Parse tree of a scalar expression, as written.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(Rational),
    Sym(String),
    Neg(Box<Ast>),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    /// Exponents are restricted to rational constants.
    Pow(Box<Ast>, Rational),
    Call(UnaryFn, Box<Ast>),
}

impl Ast {
    /// Reduces the tree to its canonical [`Expr`].
    pub fn normalize(&self) -> Result<Expr, ExprError> {
        Ok(match self {
            Ast::Num(r) => Expr::constant(r.clone()),
            Ast::Sym(s) => Expr::symbol(s),
            Ast::Neg(a) => a.normalize()?.neg(),
            Ast::Bin(op, a, b) => {
                let (a, b) = (a.normalize()?, b.normalize()?);
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b)?,
                }
            }
            Ast::Pow(a, e) => a.normalize()?.powr(e)?,
            Ast::Call(f, a) => {
                let a = a.normalize()?;
                match f.func() {
                    Some(func) => Expr::func(func, a),
                    None => a.sqrt()?,
                }
            }
        })
    }

    /// Direct floating-point evaluation of the tree as written.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let domain = |reason: &'static str| EvalError::Domain {
            expr: self.to_string(),
            reason,
        };
        Ok(match self {
            Ast::Num(r) => r.to_f64().unwrap_or(f64::NAN),
            Ast::Sym(s) => lookup(s).ok_or_else(|| EvalError::Unbound(s.clone()))?,
            Ast::Neg(a) => -a.eval(lookup)?,
            Ast::Bin(op, a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        a / b
                    }
                }
            }
            Ast::Pow(a, e) => super::eval::pow_checked(a.eval(lookup)?, e)
                .map_err(|reason| domain(reason))?,
            Ast::Call(f, a) => {
                let v = a.eval(lookup)?;
                match f {
                    UnaryFn::Sqrt => {
                        if v < 0.0 {
                            return Err(domain("square root of a negative number"));
                        }
                        v.sqrt()
                    }
                    _ => super::eval::apply_func(f.func().unwrap(), v)
                        .map_err(|reason| domain(reason))?,
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Ast::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Ast::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Ast::Num(r) if !r.is_integer() => 2,
            Ast::Neg(_) => 3,
            Ast::Num(r) if r.is_negative() => 3,
            Ast::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Ast, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn fmt_exponent(f: &mut fmt::Formatter<'_>, e: &Rational) -> fmt::Result {
    if e.is_integer() && !e.is_negative() {
        write!(f, "{}", e.numer())
    } else if e.is_integer() {
        write!(f, "({})", e.numer())
    } else {
        write!(f, "({}/{})", e.numer(), e.denom())
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Num(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Ast::Sym(s) => write!(f, "{s}"),
            Ast::Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, 3)
            }
            Ast::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 1),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                };
                fmt_child(f, a, lp)?;
                write!(f, "{sym}")?;
                fmt_child(f, b, rp)
            }
            Ast::Pow(a, e) => {
                fmt_child(f, a, 5)?;
                write!(f, "^")?;
                fmt_exponent(f, e)
            }
            Ast::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn mul_ast(acc: Option<Ast>, next: Ast) -> Option<Ast> {
    Some(match acc {
        None => next,
        Some(a) => Ast::Bin(BinOp::Mul, Box::new(a), Box::new(next)),
    })
}

fn atom_ast(atom: &Atom) -> Ast {
    match atom {
        Atom::Sym(s) => Ast::Sym(s.to_string()),
        Atom::Func(func, arg) => {
            let un = match func {
                Func::Sin => UnaryFn::Sin,
                Func::Cos => UnaryFn::Cos,
                Func::Tan => UnaryFn::Tan,
                Func::Exp => UnaryFn::Exp,
                Func::Ln => UnaryFn::Ln,
            };
            Ast::Call(un, Box::new(arg.to_ast()))
        }
        Atom::Power(base) => base.to_ast(),
    }
}

fn powered(atom: &Atom, e: &Rational) -> Ast {
    let base = atom_ast(atom);
    if e.is_one() {
        base
    } else if *e == Rational::new(BigInt::from(1), BigInt::from(2)) {
        Ast::Call(UnaryFn::Sqrt, Box::new(base))
    } else {
        Ast::Pow(Box::new(base), e.clone())
    }
}

impl Expr {
    /// Readable tree whose normalization gives back `self`.
    pub fn to_ast(&self) -> Ast {
        let mut sum: Option<Ast> = None;
        for (mono, coeff) in self.terms() {
            let negative = coeff.is_negative();
            let c = coeff.abs();
            let mut num: Option<Ast> = None;
            let numer = Rational::from_integer(c.numer().clone());
            let denom = Rational::from_integer(c.denom().clone());
            if !numer.is_one() || mono.is_one() {
                num = Some(Ast::Num(numer));
            }
            // Plain denominators (symbols, functions) are grouped; powers of sums are divided one by one.
            let mut plain_den: Option<Ast> = None;
            if !denom.is_one() {
                plain_den = Some(Ast::Num(denom));
            }
            let mut power_den: Vec<Ast> = Vec::new();
            for (atom, e) in mono.factors() {
                if e.is_positive() {
                    num = mul_ast(num, powered(atom, e));
                } else {
                    let pe = -e.clone();
                    match atom {
                        // b^(-k) for k >= 2 is kept as a negative power: (b)^k would expand.
                        Atom::Power(base) if pe.is_integer() && !pe.is_one() => {
                            num = mul_ast(num, Ast::Pow(Box::new(base.to_ast()), e.clone()));
                        }
                        Atom::Power(_) => power_den.push(powered(atom, &pe)),
                        _ => plain_den = mul_ast(plain_den, powered(atom, &pe)),
                    }
                }
            }
            let mut t = num.unwrap_or(Ast::Num(Rational::one()));
            if let Some(d) = plain_den {
                t = Ast::Bin(BinOp::Div, Box::new(t), Box::new(d));
            }
            for d in power_den {
                t = Ast::Bin(BinOp::Div, Box::new(t), Box::new(d));
            }
            sum = Some(match sum {
                None if negative => Ast::Neg(Box::new(t)),
                None => t,
                Some(s) if negative => Ast::Bin(BinOp::Sub, Box::new(s), Box::new(t)),
                Some(s) => Ast::Bin(BinOp::Add, Box::new(s), Box::new(t)),
            });
        }
        sum.unwrap_or(Ast::Num(Rational::zero()))
    }
}
