//! Symbolic Gaussian elimination with pivots chosen by numeric probing.

use crate::symexpr::{compile, Expr, PhaseSpace, ProbeConfig, Prober};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("no pivot in column {col}: every candidate vanishes at the probes (minor: {minor})")]
    Singular { col: usize, minor: String },
}

/// A handful of valid probe points at which entries are compared when choosing pivots.
pub(crate) struct PivotProbes<'a> {
    space: &'a PhaseSpace,
    points: Vec<Vec<f64>>,
}

impl<'a> PivotProbes<'a> {
    pub(crate) fn new(space: &'a PhaseSpace, cfg: &ProbeConfig, count: usize) -> PivotProbes<'a> {
        let mut prober = Prober::new(space, cfg.seed ^ 0x5eed_0f_c0);
        let points = (0..count).map(|_| prober.draw()).collect();
        PivotProbes { space, points }
    }

    /// Smallest magnitude of `e` over the probe points; points where it cannot be evaluated are skipped.
    pub(crate) fn min_abs(&self, e: &Expr) -> f64 {
        if let Some(c) = e.as_constant() {
            use num_traits::ToPrimitive;
            return c.to_f64().unwrap_or(0.0).abs();
        }
        let Ok(c) = compile(e, self.space) else {
            return 0.0;
        };
        let mut best = f64::INFINITY;
        let mut any = false;
        for p in &self.points {
            if let Ok(v) = c.eval(p) {
                if v.is_finite() {
                    best = best.min(v.abs());
                    any = true;
                }
            }
        }
        if any {
            best
        } else {
            0.0
        }
    }
}

/// Solves the square system `a x = b` exactly, choosing at each column the row
/// whose entry stays farthest from zero across the probe points.
pub(crate) fn solve(
    mut a: Vec<Vec<Expr>>,
    mut b: Vec<Expr>,
    space: &PhaseSpace,
    cfg: &ProbeConfig,
) -> Result<Vec<Expr>, SolveError> {
    let m = a.len();
    let probes = PivotProbes::new(space, cfg, 8);
    for col in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for (r, row) in a.iter().enumerate().skip(col) {
            if row[col].is_zero() {
                continue;
            }
            let score = probes.min_abs(&row[col]);
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((r, score));
            }
        }
        let Some((piv, _)) = best.filter(|(_, s)| *s > cfg.tol) else {
            let minor = a[col..]
                .iter()
                .map(|row| row[col].to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(SolveError::Singular { col, minor: format!("[{minor}]") });
        };
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col][col].clone();
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].div(&pivot).expect("pivot is nonzero");
            for k in col..m {
                let delta = factor.mul(&a[col][k]);
                a[r][k] = a[r][k].sub(&delta);
            }
            let delta = factor.mul(&b[col]);
            b[r] = b[r].sub(&delta);
        }
    }
    Ok((0..m)
        .map(|i| b[i].div(&a[i][i]).expect("pivot is nonzero"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::expr;

    #[test]
    fn solves_with_symbolic_entries() {
        let s = PhaseSpace::canonical(1, &[]).unwrap();
        let e = |t: &str| expr(t, &s).unwrap();
        // [[0, 1], [1 + q1^2, p1]] x = [p1, q1]
        let a = vec![vec![e("0"), e("1")], vec![e("1 + q1^2"), e("p1")]];
        let b = vec![e("p1"), e("q1")];
        let x = solve(a, b, &s, &ProbeConfig::default()).unwrap();
        assert_eq!(x[1], e("p1"));
        assert_eq!(x[0], e("(q1 - p1^2)/(1 + q1^2)"));
    }

    #[test]
    fn singular_matrix_reports_column() {
        let s = PhaseSpace::canonical(1, &[]).unwrap();
        let e = |t: &str| expr(t, &s).unwrap();
        let a = vec![vec![e("q1"), e("2*q1")], vec![e("p1"), e("2*p1")]];
        let b = vec![e("1"), e("1")];
        let err = solve(a, b, &s, &ProbeConfig::default()).unwrap_err();
        assert!(matches!(err, SolveError::Singular { col: 1, .. }), "{err:?}");
    }
}
