//! Convergence of `P f` under mesh refinement: sup-grid error, pointwise
//! errors at Lebesgue points, observed order and `omega_k(f, |Delta|)`.

use rayon::prelude::*;
use serde::Serialize;

use super::{ls_fit, Check};
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::knots::KnotSequence;
use crate::projection::{uniform_grid, Projector};

/// Levels used for the observed order.
pub const ORDER_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelError {
    pub n_intervals: usize,
    pub mesh: f64,
    /// `max |f - Pf|` over the finite values on the evaluation grid.
    pub sup_error: f64,
    /// `|f(x) - Pf(x)|` at each probe.
    pub probe_errors: Vec<f64>,
    pub omega_k: f64,
    pub rhs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub k: usize,
    pub function: String,
    pub probes: Vec<f64>,
    pub eval_grid: usize,
    pub levels: Vec<LevelError>,
    /// Slope of `ln sup_error` against `ln mesh` over the last levels.
    pub order: Option<f64>,
}

impl ConvergenceReport {
    pub fn checks(&self) -> Vec<Check> {
        let finite = self
            .levels
            .iter()
            .all(|l| l.sup_error.is_finite() && l.probe_errors.iter().all(|e| e.is_finite()));
        let decreasing = self.levels.windows(2).all(|w| w[1].mesh < w[0].mesh);
        vec![
            Check::at_most("errors finite", if finite { 0.0 } else { 1.0 }, 0.0),
            Check::at_most("mesh strictly decreasing", if decreasing { 0.0 } else { 1.0 }, 0.0),
        ]
    }

    /// Largest probe error at the finest level.
    pub fn final_probe_error(&self) -> Option<f64> {
        self.levels
            .last()
            .map(|l| l.probe_errors.iter().copied().fold(0.0, f64::max))
    }
}

/// Errors at each level of a mesh-decreasing ladder. Probes must be
/// Lebesgue points of `f` according to its metadata.
pub fn convergence_report(
    ladder: &[KnotSequence],
    f: &TestFunction,
    probes: &[f64],
    eval_grid: usize,
) -> Result<ConvergenceReport> {
    let first = ladder
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ladder".into()))?;
    let (a, b, k) = (first.a(), first.b(), first.order());
    if let Some(w) = ladder.windows(2).find(|w| !(w[1].mesh() < w[0].mesh())) {
        return Err(Error::InvalidArgument(format!(
            "ladder mesh not strictly decreasing: {} then {}",
            w[0].mesh(),
            w[1].mesh()
        )));
    }
    for &x in probes {
        if !(a..=b).contains(&x) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        if !f.is_lebesgue_point(x) {
            return Err(Error::InvalidArgument(format!("probe {x} is not a Lebesgue point of {}", f.name())));
        }
    }
    let grid = uniform_grid(a, b, eval_grid);
    let fvals: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let levels = ladder
        .par_iter()
        .map(|s| {
            let p = Projector::new(s)?.project(f)?;
            let mut sup = 0.0f64;
            for (&x, &fx) in grid.iter().zip(&fvals) {
                if fx.is_finite() {
                    sup = sup.max((fx - p.eval(x)?).abs());
                }
            }
            let probe_errors = probes
                .iter()
                .map(|&x| Ok((f.eval(x) - p.eval(x)?).abs()))
                .collect::<Result<Vec<_>>>()?;
            Ok(LevelError {
                n_intervals: s.breaks().len() - 1,
                mesh: s.mesh(),
                sup_error: sup,
                probe_errors,
                omega_k: modulus_of_smoothness(f, k, s.mesh(), a, b, 1000, 50),
                rhs_error: p.rhs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let order = observed_order(&levels);
    Ok(ConvergenceReport {
        k,
        function: f.name().to_string(),
        probes: probes.to_vec(),
        eval_grid,
        levels,
        order,
    })
}

fn observed_order(levels: &[LevelError]) -> Option<f64> {
    let tail = &levels[levels.len().saturating_sub(ORDER_WINDOW)..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail
        .iter()
        .filter(|l| l.sup_error > 0.0)
        .map(|l| (l.mesh.ln(), l.sup_error.ln()))
        .unzip();
    ls_fit(&x, &y).map(|(slope, _)| slope)
}

/// `sup |sum_r (-1)^r C(k, r) f(x + r h)|` over `x` on a grid of `x_grid`
/// cells of `[a, b]` (plus `x = b - k h`) and `h = delta j / h_grid`,
/// `j = 1..=h_grid`, with `x + k h <= b`. Non-finite differences are skipped.
pub fn modulus_of_smoothness(f: &TestFunction, k: usize, delta: f64, a: f64, b: f64, x_grid: usize, h_grid: usize) -> f64 {
    let binom: Vec<f64> = (0..=k)
        .scan(1.0f64, |c, r| {
            let v = *c;
            *c = *c * (k - r) as f64 / (r + 1) as f64;
            Some(if r % 2 == 0 { v } else { -v })
        })
        .collect();
    let xs = uniform_grid(a, b, x_grid);
    (1..=h_grid.max(1))
        .into_par_iter()
        .map(|j| {
            let h = delta * j as f64 / h_grid.max(1) as f64;
            let kh = k as f64 * h;
            if kh > b - a {
                return 0.0;
            }
            let diff = |x: f64| -> f64 { binom.iter().enumerate().map(|(r, c)| c * f.eval(x + r as f64 * h)).sum() };
            xs.iter()
                .copied()
                .filter(|&x| x + kh <= b)
                .chain(std::iter::once(b - kh))
                .map(|x| diff(x).abs())
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
