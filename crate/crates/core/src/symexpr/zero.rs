//! Hybrid zero testing: canonical form first, then seeded random probing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::Compiled;
use super::expr::Expr;
use super::space::PhaseSpace;
use super::{EvalError, ZeroTestError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub count: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            count: 64,
            seed: 42,
            tol: 1e-9,
        }
    }
}

/// A point in slot order (coordinates, then parameters) at which something was evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroVerdict {
    SymbolicZero,
    /// Probabilistic: every probe evaluated below tolerance.
    NumericZero { probes: usize, max_abs: f64, seed: u64 },
    NonZero { witness: Witness },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ZeroVerdict::NumericZero { .. })
    }

    /// Combines component verdicts: symbolic only if all are symbolic, nonzero if any is.
    pub fn all<I: IntoIterator<Item = ZeroVerdict>>(verdicts: I) -> ZeroVerdict {
        let mut acc = ZeroVerdict::SymbolicZero;
        for v in verdicts {
            match (&acc, v) {
                (_, nz @ ZeroVerdict::NonZero { .. }) => return nz,
                (
                    ZeroVerdict::NumericZero {
                        probes, max_abs, seed,
                    },
                    ZeroVerdict::NumericZero {
                        probes: p2,
                        max_abs: m2,
                        ..
                    },
                ) => {
                    acc = ZeroVerdict::NumericZero {
                        probes: (*probes).max(p2),
                        max_abs: max_abs.max(m2),
                        seed: *seed,
                    }
                }
                (ZeroVerdict::SymbolicZero, n @ ZeroVerdict::NumericZero { .. }) => acc = n,
                _ => {}
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConstVerdict {
    /// `symbolic` is true when the canonical form has no coordinate symbols.
    Constant {
        #[serde(serialize_with = "crate::ser::display")]
        expr: Expr,
        value: f64,
        symbolic: bool,
    },
    NotConstant {
        coordinate: String,
        witness: Witness,
    },
}

/// Seeded sampler of valid probe points for one phase space.
pub struct Prober<'a> {
    space: &'a PhaseSpace,
    rng: ChaCha8Rng,
}

impl<'a> Prober<'a> {
    pub fn new(space: &'a PhaseSpace, seed: u64) -> Prober<'a> {
        Prober {
            space,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Draws a full slot vector: coordinates from their boxes, parameters from their ranges.
    pub fn draw(&mut self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.space.num_slots());
        for i in 0..self.space.dim() {
            let (lo, hi) = self.space.coord_box(i);
            v.push(self.rng.gen_range(lo..hi));
        }
        for name in self.space.params().keys() {
            let (lo, hi) = self.space.param_range(name);
            v.push(if lo < hi { self.rng.gen_range(lo..hi) } else { lo });
        }
        v
    }

    /// Draws up to `count` points at which `accept` succeeds, resampling rejected draws.
    pub fn valid_points<T>(
        &mut self,
        count: usize,
        mut accept: impl FnMut(&[f64]) -> Result<T, EvalError>,
    ) -> Result<Vec<(Vec<f64>, T)>, ZeroTestError> {
        let mut out = Vec::with_capacity(count);
        let mut last_err = None;
        let budget = count.max(1) * 8;
        for _ in 0..budget {
            if out.len() == count {
                break;
            }
            let p = self.draw();
            match accept(&p) {
                Ok(v) => out.push((p, v)),
                Err(e) => last_err = Some(e),
            }
        }
        if out.is_empty() && count > 0 {
            return Err(ZeroTestError::NoValidProbes {
                last: last_err.map(|e| e.to_string()).unwrap_or_default(),
            });
        }
        Ok(out)
    }
}

pub fn compile(e: &Expr, space: &PhaseSpace) -> Result<Compiled, EvalError> {
    Compiled::new(e, &|s| space.slot(s))
}

fn witness(space: &PhaseSpace, slots: &[f64], value: f64) -> Witness {
    Witness {
        point: slots[..space.dim()].to_vec(),
        params: slots[space.dim()..].to_vec(),
        value,
    }
}

/// Decides whether `e` vanishes identically on the sampling box.
pub fn is_zero(e: &Expr, space: &PhaseSpace, cfg: &ProbeConfig) -> Result<ZeroVerdict, ZeroTestError> {
    if e.is_zero() {
        return Ok(ZeroVerdict::SymbolicZero);
    }
    let compiled = compile(e, space).map_err(ZeroTestError::Eval)?;
    let mut prober = Prober::new(space, cfg.seed);
    let values = prober.valid_points(cfg.count, |p| compiled.eval(p))?;
    let mut max_abs: f64 = 0.0;
    for (p, v) in &values {
        if !v.is_finite() || v.abs() > cfg.tol {
            return Ok(ZeroVerdict::NonZero {
                witness: witness(space, p, *v),
            });
        }
        max_abs = max_abs.max(v.abs());
    }
    Ok(ZeroVerdict::NumericZero {
        probes: values.len(),
        max_abs,
        seed: cfg.seed,
    })
}

/// Decides whether `e` is constant in the coordinates (parameters may appear).
pub fn is_constant(
    e: &Expr,
    space: &PhaseSpace,
    cfg: &ProbeConfig,
) -> Result<ConstVerdict, ZeroTestError> {
    let at_params = |x: &Expr| -> Result<f64, ZeroTestError> {
        let center = space.slots_at(&space.box_center());
        let c = compile(x, space).map_err(ZeroTestError::Eval)?;
        c.eval(&center).map_err(ZeroTestError::Eval)
    };
    let symbolic = !space.coords().iter().any(|c| e.depends_on(c));
    if symbolic {
        return Ok(ConstVerdict::Constant {
            expr: e.clone(),
            value: at_params(e)?,
            symbolic: true,
        });
    }
    // Compare values at pairs of points sharing parameters; differentiating a
    // large quotient symbolically can be far more expensive than probing it.
    let compiled = compile(e, space).map_err(ZeroTestError::Eval)?;
    let dim = space.dim();
    let mut prober = Prober::new(space, cfg.seed);
    let mut partner = Prober::new(space, cfg.seed ^ 0xc0ffee);
    let pairs = prober.valid_points(cfg.count, |p| {
        let mut q = partner.draw();
        q[dim..].copy_from_slice(&p[dim..]);
        Ok((compiled.eval(p)?, compiled.eval(&q)?, q))
    })?;
    for (p, (a, b, q)) in &pairs {
        let gap = a - b;
        if !gap.is_finite() || gap.abs() > cfg.tol * a.abs().max(b.abs()).max(1.0) {
            let coordinate = steepest_coordinate(&compiled, space, p, q);
            return Ok(ConstVerdict::NotConstant {
                coordinate,
                witness: witness(space, q, gap),
            });
        }
    }
    Ok(ConstVerdict::Constant {
        expr: e.clone(),
        value: declared_value(&compiled, space, &pairs),
        symbolic: false,
    })
}

/// Value of a coordinate-free `f` at the declared parameters, taken at the first probe where it evaluates.
fn declared_value(f: &Compiled, space: &PhaseSpace, pairs: &[(Vec<f64>, (f64, f64, Vec<f64>))]) -> f64 {
    let declared = space.slots_at(&space.box_center());
    let dim = space.dim();
    pairs
        .iter()
        .find_map(|(p, _)| {
            let mut slots = p[..dim].to_vec();
            slots.extend_from_slice(&declared[dim..]);
            f.eval(&slots).ok().filter(|v| v.is_finite())
        })
        .unwrap_or(f64::NAN)
}

/// Coordinate along which `f` changes most when moving from `p` toward `q` one axis at a time.
fn steepest_coordinate(f: &Compiled, space: &PhaseSpace, p: &[f64], q: &[f64]) -> String {
    let base = f.eval(p).unwrap_or(f64::NAN);
    let mut best = (0, -1.0);
    for i in 0..space.dim() {
        let mut r = p.to_vec();
        r[i] = q[i];
        let change = f.eval(&r).map(|v| (v - base).abs()).unwrap_or(f64::INFINITY);
        let change = if change.is_nan() { f64::INFINITY } else { change };
        if change > best.1 {
            best = (i, change);
        }
    }
    space.coords()[best.0].clone()
}
