//! Pratt parser for the expression grammar.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^` (right associative).
//! Function application is written `f(x)` for `sin cos tan exp ln sqrt`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use super::ast::{Ast, BinOp, UnaryFn};
use super::expr::Rational;
use super::space::PhaseSpace;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at column {col}: expected {expected}, found {found}")]
    Syntax {
        col: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at column {col}")]
    UnknownIdentifier { col: usize, name: String },
    #[error("function `{name}` at column {col} takes 1 argument, found {found}")]
    Arity {
        col: usize,
        name: String,
        found: usize,
    },
    #[error("exponent at column {col} must be a rational constant")]
    NonConstantExponent { col: usize },
}

impl ParseError {
    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { col, .. }
            | ParseError::UnknownIdentifier { col, .. }
            | ParseError::Arity { col, .. }
            | ParseError::NonConstantExponent { col } => *col,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(r) => write!(f, "number `{r}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut frac_part = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                frac_part = chars[fs..i].iter().collect();
            }
            let mut exp: i64 = 0;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    if chars[j] == '-' {
                        sign = -1;
                    }
                    j += 1;
                }
                let es = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == es {
                    return Err(ParseError::Syntax {
                        col: j + 1,
                        expected: "exponent digits".into(),
                        found: chars.get(j).map_or("end of input".into(), |c| format!("`{c}`")),
                    });
                }
                let digits: String = chars[es..j].iter().collect();
                exp = sign * digits.parse::<i64>().map_err(|_| ParseError::Syntax {
                    col: es + 1,
                    expected: "a smaller exponent".into(),
                    found: digits.clone(),
                })?;
                i = j;
            }
            let digits = format!("{int_part}{frac_part}");
            let mantissa: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().expect("ascii digits")
            };
            let scale = exp - frac_part.len() as i64;
            let ten = Rational::from_integer(BigInt::from(10));
            let value = if scale >= 0 {
                Rational::from_integer(mantissa) * num_traits::pow(ten, scale as usize)
            } else {
                Rational::from_integer(mantissa) / num_traits::pow(ten, (-scale) as usize)
            };
            out.push((Tok::Num(value), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                col,
                expected: "an expression".into(),
                found: format!("`{c}`"),
            });
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    known: &'a dyn Fn(&str) -> bool,
}

const UNARY_BP: u8 = 5;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.next();
            Ok(())
        } else {
            Err(ParseError::Syntax {
                col: self.col(),
                expected: format!("`{c}`"),
                found: self.peek().to_string(),
            })
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Ast, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, l_bp, r_bp) = match self.peek() {
                Tok::Op('+') => ('+', 1, 2),
                Tok::Op('-') => ('-', 1, 2),
                Tok::Op('*') => ('*', 3, 4),
                Tok::Op('/') => ('/', 3, 4),
                Tok::Op('^') => ('^', 7, 6),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            self.next();
            let rhs_col = self.col();
            let rhs = self.expr(r_bp)?;
            lhs = match op {
                '+' => Ast::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs)),
                '-' => Ast::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs)),
                '*' => Ast::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs)),
                '/' => Ast::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs)),
                _ => {
                    let e = constant_exponent(&rhs)
                        .ok_or(ParseError::NonConstantExponent { col: rhs_col })?;
                    Ast::Pow(Box::new(lhs), e)
                }
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Ast, ParseError> {
        let (tok, col) = self.next();
        match tok {
            Tok::Num(r) => Ok(Ast::Num(r)),
            Tok::Op('-') => Ok(Ast::Neg(Box::new(self.expr(UNARY_BP)?))),
            Tok::Op('(') => {
                let inner = self.expr(0)?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(f) = UnaryFn::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr(0)?;
                    let mut count = 1;
                    while *self.peek() == Tok::Op(',') {
                        self.next();
                        self.expr(0)?;
                        count += 1;
                    }
                    if count != 1 {
                        return Err(ParseError::Arity {
                            col,
                            name,
                            found: count,
                        });
                    }
                    self.expect(')')?;
                    Ok(Ast::Call(f, Box::new(arg)))
                } else if (self.known)(&name) {
                    Ok(Ast::Sym(name))
                } else {
                    Err(ParseError::UnknownIdentifier { col, name })
                }
            }
            other => Err(ParseError::Syntax {
                col,
                expected: "an operand".into(),
                found: other.to_string(),
            }),
        }
    }
}

fn constant_exponent(ast: &Ast) -> Option<Rational> {
    fn has_symbols(a: &Ast) -> bool {
        match a {
            Ast::Num(_) => false,
            Ast::Sym(_) => true,
            Ast::Neg(x) | Ast::Pow(x, _) | Ast::Call(_, x) => has_symbols(x),
            Ast::Bin(_, x, y) => has_symbols(x) || has_symbols(y),
        }
    }
    if has_symbols(ast) {
        return None;
    }
    ast.normalize().ok()?.as_constant()
}

/// Parses `text` accepting the identifiers for which `known` returns true.
pub fn parse_with(text: &str, known: &dyn Fn(&str) -> bool) -> Result<Ast, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        known,
    };
    let ast = p.expr(0)?;
    if *p.peek() != Tok::End {
        return Err(ParseError::Syntax {
            col: p.col(),
            expected: "an operator or end of input".into(),
            found: p.peek().to_string(),
        });
    }
    Ok(ast)
}

/// Parses an expression over the coordinates and parameters of `space`.
pub fn parse(text: &str, space: &PhaseSpace) -> Result<Ast, ParseError> {
    parse_with(text, &|name| space.is_declared(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn any(text: &str) -> Result<Ast, ParseError> {
        parse_with(text, &|_| true)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(any("-x^2").unwrap().to_string(), "-x^2");
        assert_eq!(any("2^3^2").unwrap().normalize().unwrap().to_string(), "512");
        assert_eq!(any("1 - 2 - 3").unwrap().normalize().unwrap().to_string(), "-4");
        assert_eq!(any("8/2/2").unwrap().normalize().unwrap().to_string(), "2");
        assert_eq!(any("x^-1").unwrap().to_string(), "x^(-1)");
    }

    #[test]
    fn decimal_literals_are_exact() {
        let e = any("1.5e-1").unwrap().normalize().unwrap();
        assert_eq!(e.to_string(), "3/20");
        assert_eq!(any(".25").unwrap().normalize().unwrap().to_string(), "1/4");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = any("q1 +").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                col: 5,
                expected: "an operand".into(),
                found: "end of input".into()
            }
        );
        assert!(any("(x").is_err());
        assert!(any("x y").is_err());
        assert!(any("x $ y").is_err());
    }

    #[test]
    fn unknown_identifiers_rejected() {
        let err = parse_with("q1 + r", &|n| n == "q1").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                col: 6,
                name: "r".into()
            }
        );
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(any("sin(x, y)"), Err(ParseError::Arity { found: 2, .. })));
        assert!(matches!(any("sin x"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn exponent_must_be_constant() {
        assert!(matches!(any("x^y"), Err(ParseError::NonConstantExponent { col: 3 })));
        assert!(any("x^(1/2)").is_ok());
    }
}
