//! Sampled bound `|K(x, y)| <= C theta^|i-j| / |I_ij|` for `x` in `I_i`,
//! `y` in `I_j`.

use rayon::prelude::*;
use serde::Serialize;

use super::Check;
use crate::bspline::basis_in_interval;
use crate::error::{Error, Result};
use crate::gram::InverseGram;
use crate::knots::{KnotSequence, MAX_ORDER};

/// Number of `theta` values tried in `(gamma, 1)`.
pub const THETA_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundReport {
    pub k: usize,
    pub n: usize,
    pub samples_per_cell: usize,
    /// Lower end of the `theta` grid.
    pub theta_floor: f64,
    /// `V(d) = max over cells with |i-j| = d of max |K| |I_ij|`, by knot-interval offset.
    pub profile: Vec<f64>,
    pub theta_grid: Vec<f64>,
    /// `C(theta) = max_d V(d) theta^{-d}` on the grid.
    pub c_of_theta: Vec<f64>,
    /// Minimizer of `C(theta) (1 + theta) / (1 - theta)`.
    pub theta: f64,
    pub c_hat: f64,
    /// Sampled `max |K| |I_ij|` on the corner cell (first and last interval).
    pub corner_value: f64,
    /// `C theta^d` for the corner cell.
    pub corner_bound: f64,
}

impl KernelBoundReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("theta_hat", self.theta, 1.0 - f64::EPSILON),
            Check::at_most("C_hat finite", if self.c_hat.is_finite() { 0.0 } else { 1.0 }, 0.0),
            Check::at_most("corner decay", self.corner_value, self.corner_bound * (1.0 + 1e-12)),
        ]
    }
}

/// Sub-cell midpoints of interval `s`.
fn samples(knots: &KnotSequence, s: usize, m: usize) -> Vec<f64> {
    let t = knots.knots();
    let (lo, h) = (t[s], t[s + 1] - t[s]);
    (0..m).map(|p| lo + h * (p as f64 + 0.5) / m as f64).collect()
}

/// Stratified sampling with `samples_per_cell` sub-cell midpoints per
/// knot interval, i.e. `samples_per_cell^2` points per cell `I_i x I_j`.
/// `theta_floor` (usually the fitted decay rate) bounds the `theta` grid below.
pub fn kernel_bound_report(
    inverse: &InverseGram,
    knots: &KnotSequence,
    samples_per_cell: usize,
    theta_floor: f64,
) -> Result<KernelBoundReport> {
    if samples_per_cell < 2 {
        return Err(Error::InvalidArgument(format!(
            "samples_per_cell must be at least 2, got {samples_per_cell}"
        )));
    }
    if !(0.0..1.0).contains(&theta_floor) {
        return Err(Error::InvalidArgument(format!("theta floor {theta_floor} not in [0, 1)")));
    }
    let n = inverse.dim();
    let k = inverse.order();
    let m = samples_per_cell;
    let intervals: Vec<usize> = knots.nondegenerate_intervals().collect();
    // basis blocks at every sample
    let basis: Vec<Vec<[f64; MAX_ORDER]>> = intervals
        .iter()
        .map(|&s| {
            samples(knots, s, m)
                .into_iter()
                .map(|x| {
                    let mut v = [0.0; MAX_ORDER];
                    basis_in_interval(knots, s, x, &mut v);
                    v
                })
                .collect()
        })
        .collect();
    let width = knots.knots().len();
    let zero = || vec![0.0f64; width];
    let profile = (0..intervals.len())
        .into_par_iter()
        .fold(zero, |mut prof, p| {
            let si = intervals[p];
            let fi = si + 1 - k;
            let mut u = vec![0.0; k];
            for (q, &sj) in intervals.iter().enumerate().skip(p) {
                let fj = sj + 1 - k;
                let mut cell_max = 0.0f64;
                for ny in &basis[q] {
                    // u = A[fi.., fj..] ny
                    for (r, ur) in u.iter_mut().enumerate() {
                        let row = inverse.row(fi + r);
                        *ur = (0..k).map(|c| row[fj + c] * ny[c]).sum();
                    }
                    for nx in &basis[p] {
                        let v: f64 = (0..k).map(|r| nx[r] * u[r]).sum();
                        cell_max = cell_max.max(v.abs());
                    }
                }
                let d = sj - si;
                prof[d] = prof[d].max(cell_max * knots.hull_len(si, sj));
            }
            prof
        })
        .reduce(zero, |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x = x.max(*y));
            a
        });
    let theta_grid: Vec<f64> = (1..=THETA_GRID)
        .map(|g| theta_floor + (1.0 - theta_floor) * g as f64 / (THETA_GRID + 1) as f64)
        .collect();
    let c_of = |theta: f64| {
        profile
            .iter()
            .enumerate()
            .filter(|p| *p.1 > 0.0)
            .map(|(d, v)| v.ln() - d as f64 * theta.ln())
            .fold(f64::NEG_INFINITY, f64::max)
            .exp()
    };
    let c_of_theta: Vec<f64> = theta_grid.iter().map(|&t| c_of(t)).collect();
    let (best, _) = theta_grid
        .iter()
        .zip(&c_of_theta)
        .enumerate()
        .map(|(g, (t, c))| (g, c * (1.0 + t) / (1.0 - t)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let (theta, c_hat) = (theta_grid[best], c_of_theta[best]);
    let (first, last) = (intervals[0], intervals[intervals.len() - 1]);
    let d = last - first;
    Ok(KernelBoundReport {
        k,
        n,
        samples_per_cell: m,
        theta_floor,
        corner_value: profile[d],
        corner_bound: c_hat * theta.powi(d as i32),
        profile,
        theta_grid,
        c_of_theta,
        theta,
        c_hat,
    })
}
