//! Scalar symbolic expressions over a phase space: parsing, canonical form,
//! differentiation, evaluation and zero testing.

mod ast;
mod diff;
mod eval;
mod expr;
mod parse;
mod space;
mod zero;

pub use ast::{Ast, BinOp, UnaryFn};
pub use eval::Compiled;
pub use expr::{Atom, Expr, Func, Monomial, Rational};
pub use parse::{parse, parse_with, ParseError};
pub use space::{PhaseSpace, DEFAULT_BOX, DEFAULT_PARAM_RANGE};
pub use zero::{compile, is_constant, is_zero, ConstVerdict, ProbeConfig, Prober, Witness, ZeroVerdict};

pub(crate) use expr::rat;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: &'static str },
    #[error("no value for symbol `{0}`")]
    Unbound(String),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ZeroTestError {
    #[error("no valid probe points (last failure: {last})")]
    NoValidProbes { last: String },
    #[error(transparent)]
    Eval(EvalError),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("phase space needs an even, nonzero number of coordinates, got {0}")]
    OddDimension(usize),
    #[error("`{0}` is not a valid symbol name")]
    InvalidName(String),
    #[error("`{0}` is declared twice")]
    Duplicate(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("empty sampling interval for `{0}`")]
    EmptyBox(String),
}

/// Parses and normalizes in one step.
pub fn expr(text: &str, space: &PhaseSpace) -> Result<Expr, ParseError> {
    let ast = parse(text, space)?;
    // Parsing already rejected non-constant exponents; only 1/0-style constants can fail here.
    ast.normalize().map_err(|_| ParseError::Syntax {
        col: 1,
        expected: "an expression without division by zero".into(),
        found: text.to_string(),
    })
}
