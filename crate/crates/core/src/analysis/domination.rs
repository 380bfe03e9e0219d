//! `|P f(x)| <= c M(f, x)` across a family of partitions, and the weak-type
//! constants `sup_t t m{T f > t} / ||f||_1` for `T = M` and `T = P*`.

use rayon::prelude::*;
use serde::Serialize;

use super::{max_step_ratio, Check, MaximalGrid};
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::knots::KnotSequence;
use crate::projection::{Projection, Projector};

/// Weak-type limit for the maximal function: `5` plus grid tolerance.
pub const MAXIMAL_WEAK_LIMIT: f64 = 5.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationLevel {
    pub n_intervals: usize,
    pub mesh: f64,
    /// `max_x |Pf(x)| / M(f, x)` over the evaluation grid.
    pub ratio: f64,
    pub argmax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    pub k: usize,
    pub function: String,
    pub eval_grid: usize,
    pub maximal_grid: usize,
    pub levels: Vec<DominationLevel>,
    /// Empirical over the family: `max` of the per-level ratios.
    pub c_hat: f64,
    /// Largest ratio between the constants of consecutive levels.
    pub level_spread: f64,
}

impl DominationReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("c_hat finite", if self.c_hat.is_finite() { 0.0 } else { 1.0 }, 0.0),
            Check::at_most("level-to-level spread", self.level_spread, 2.0),
        ]
    }
}

fn check_family(partitions: &[KnotSequence]) -> Result<(f64, f64, usize)> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty partition family".into()))?;
    let (a, b, k) = (first.a(), first.b(), first.order());
    for p in partitions {
        if p.a() != a || p.b() != b || p.order() != k {
            return Err(Error::InvalidArgument(
                "partitions must share the interval and the order".into(),
            ));
        }
    }
    Ok((a, b, k))
}

fn project_all(partitions: &[KnotSequence], f: &TestFunction) -> Result<Vec<Projection>> {
    partitions
        .par_iter()
        .map(|s| Projector::new(s)?.project(f))
        .collect()
}

/// `eval_grid + 1` nodes; `maximal_grid` cells for `M`, which should be a
/// multiple of `eval_grid` so that every node is a grid node of `M`.
pub fn domination_report(
    partitions: &[KnotSequence],
    f: &TestFunction,
    eval_grid: usize,
    maximal_grid: usize,
) -> Result<DominationReport> {
    let (a, b, k) = check_family(partitions)?;
    let mg = MaximalGrid::new(f, a, b, maximal_grid, 1e-12)?;
    let projections = project_all(partitions, f)?;
    let levels = projections
        .iter()
        .map(|p| {
            let mut ratio = 0.0f64;
            let mut argmax = a;
            for (x, v) in p.eval_grid(eval_grid) {
                let m = mg.value(x)?;
                if m > 0.0 {
                    let r = v.abs() / m;
                    if r > ratio {
                        ratio = r;
                        argmax = x;
                    }
                }
            }
            Ok(DominationLevel {
                n_intervals: p.knots.breaks().len() - 1,
                mesh: p.knots.mesh(),
                ratio,
                argmax,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = levels.iter().map(|l| l.ratio).collect();
    Ok(DominationReport {
        k,
        function: f.name().to_string(),
        eval_grid,
        maximal_grid,
        c_hat: ratios.iter().copied().fold(0.0, f64::max),
        level_spread: max_step_ratio(&ratios),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakTypeReport {
    pub k: usize,
    pub function: String,
    pub family_size: usize,
    pub cells: usize,
    pub l1_norm: f64,
    /// `sup_t t m{M f > t} / ||f||_1`.
    pub maximal_constant: f64,
    /// `sup_t t m{P* f > t} / ||f||_1`, empirical over the family.
    pub pstar_constant: f64,
    /// Thresholds used; empty when the exact supremum over all `t` was taken.
    pub thresholds: Vec<f64>,
}

impl WeakTypeReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("maximal weak-type constant", self.maximal_constant, MAXIMAL_WEAK_LIMIT),
            Check::at_most(
                "P* weak-type constant finite",
                if self.pstar_constant.is_finite() { 0.0 } else { 1.0 },
                0.0,
            ),
        ]
    }
}

/// `sup_t t W{v > t}` for cell values `v` of equal weight `w`. With no
/// thresholds the supremum over all `t` is `max_r v_r W{v >= v_r}`.
pub fn weak_sup(values: &[f64], w: f64, thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(|x, y| y.total_cmp(x));
        let mut best = 0.0f64;
        for (r, &val) in v.iter().enumerate() {
            // all of v[..=r] are >= val; ties further on only add measure
            let last_tie = r + v[r..].iter().take_while(|&&x| x == val).count();
            best = best.max(val * w * last_tie as f64);
        }
        if values.iter().any(|x| x.is_infinite()) {
            return f64::INFINITY;
        }
        best
    } else {
        thresholds
            .iter()
            .map(|&t| t * w * values.iter().filter(|&&v| v > t).count() as f64)
            .fold(0.0, f64::max)
    }
}

/// Level sets are measured by counting the `cells` equal cells of `[a, b]`:
/// `M` uses its grid value on each open cell, `P*` its value at the cell
/// midpoint. `P*` is the max of `|P f|` over the supplied family.
pub fn weak_type_report(
    partitions: &[KnotSequence],
    f: &TestFunction,
    thresholds: &[f64],
    cells: usize,
) -> Result<WeakTypeReport> {
    if thresholds.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidArgument("thresholds must be positive".into()));
    }
    let (a, b, k) = check_family(partitions)?;
    let mg = MaximalGrid::new(f, a, b, cells, 1e-12)?;
    let l1 = mg.l1_norm();
    if !(l1 > 0.0) {
        return Err(Error::InvalidArgument("weak-type constants need ||f||_1 > 0".into()));
    }
    let w = (b - a) / cells as f64;
    let projections = project_all(partitions, f)?;
    let nodes = mg.nodes();
    let pstar: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let x = 0.5 * (nodes[c] + nodes[c + 1]);
            projections
                .iter()
                .map(|p| p.eval(x).map(f64::abs))
                .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
        })
        .collect::<Result<_>>()?;
    Ok(WeakTypeReport {
        k,
        function: f.name().to_string(),
        family_size: partitions.len(),
        cells,
        l1_norm: l1,
        maximal_constant: weak_sup(mg.cell_values(), w, thresholds) / l1,
        pstar_constant: weak_sup(&pstar, w, thresholds) / l1,
        thresholds: thresholds.to_vec(),
    })
}
