//! Random expressions, forms and vector fields for property testing.
//!
//! Generated expressions avoid division and logarithms so they evaluate
//! everywhere in the default sampling box.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::exterior::{KForm, VectorField};
use crate::symexpr::{Expr, Func, PhaseSpace};

/// Random expression tree of the given depth over the coordinates and parameters of `space`.
pub fn random_expr<R: Rng>(rng: &mut R, space: &PhaseSpace, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, space);
    }
    match rng.gen_range(0..6) {
        0 | 1 => random_expr(rng, space, depth - 1).add(&random_expr(rng, space, depth - 1)),
        2 | 3 => random_expr(rng, space, depth - 1).mul(&random_expr(rng, space, depth - 1)),
        4 => {
            let f = *[Func::Sin, Func::Cos, Func::Exp].choose(rng).expect("nonempty");
            Expr::func(f, random_expr(rng, space, depth - 1))
        }
        _ => random_expr(rng, space, depth - 1)
            .powi(2)
            .expect("squaring never divides"),
    }
}

fn leaf<R: Rng>(rng: &mut R, space: &PhaseSpace) -> Expr {
    let names: Vec<&String> = space.coords().iter().chain(space.params().keys()).collect();
    if rng.gen_bool(0.25) {
        Expr::int(rng.gen_range(-3..=3))
    } else {
        Expr::symbol(names.choose(rng).expect("nonempty space"))
    }
}

pub fn random_field<R: Rng>(rng: &mut R, space: &Arc<PhaseSpace>, depth: u32) -> VectorField {
    let comps = (0..space.dim())
        .map(|_| {
            if rng.gen_bool(0.3) {
                Expr::zero()
            } else {
                random_expr(rng, space, depth)
            }
        })
        .collect();
    VectorField::new(space.clone(), comps).expect("component count matches")
}

/// Random k-form with up to `terms` nonzero coefficients.
pub fn random_form<R: Rng>(
    rng: &mut R,
    space: &Arc<PhaseSpace>,
    degree: usize,
    terms: usize,
    depth: u32,
) -> KForm {
    let dim = space.dim();
    let items: Vec<(Vec<usize>, Expr)> = (0..terms)
        .map(|_| {
            let mut idx: Vec<usize> = (0..dim).collect();
            idx.shuffle(rng);
            idx.truncate(degree);
            (idx, random_expr(rng, space, depth))
        })
        .collect();
    KForm::from_terms(space.clone(), degree, items).expect("indices are in range")
}
