use super::expr::{Atom, Expr, Func, Rational};

fn atom_derivative(atom: &Atom, var: &str) -> Expr {
    match atom {
        Atom::Sym(s) => {
            if &**s == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Func(f, arg) => {
            let inner = arg.diff(var);
            if inner.is_zero() {
                return Expr::zero();
            }
            let a = (**arg).clone();
            let outer = match f {
                Func::Sin => Expr::func(Func::Cos, a),
                Func::Cos => Expr::func(Func::Sin, a).neg(),
                Func::Tan => Expr::one().add(&Expr::func(Func::Tan, a).powi(2).expect("square")),
                Func::Exp => Expr::func(Func::Exp, a),
                // ln's argument is nonzero wherever ln is defined
                Func::Ln => a.recip().expect("ln of the zero expression"),
            };
            outer.mul(&inner)
        }
        Atom::Power(base) => base.diff(var),
    }
}

impl Expr {
    /// Exact partial derivative with respect to the symbol `var`.
    pub fn diff(&self, var: &str) -> Expr {
        let mut out = Expr::zero();
        for (mono, c) in self.terms() {
            let factors = mono.factors();
            for (i, (atom, e)) in factors.iter().enumerate() {
                let d = atom_derivative(atom, var);
                if d.is_zero() {
                    continue;
                }
                let mut rest: Vec<_> = factors.to_vec();
                rest[i].1 = e - Rational::from_integer(1.into());
                let coeff = c * e;
                let term = Expr::from_factors(coeff, rest).mul(&d);
                out = out.add(&term);
            }
        }
        out
    }
}
