//! Evaluation of the B-spline basis `N_i` (partition of unity) and of the
//! L1-normalized `M_i = (k / kappa_i) N_i`.

use crate::error::{Error, Result};
use crate::knots::{KnotSequence, MAX_ORDER};

/// The `k` basis values that can be nonzero at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValueBlock {
    /// Index of `N_first`; the block holds `N_first, ..., N_{first+k-1}`.
    pub first: usize,
    pub values: Vec<f64>,
}

impl BasisValueBlock {
    /// Value of `N_i` at the point, zero outside the block.
    pub fn get(&self, i: usize) -> f64 {
        i.checked_sub(self.first)
            .and_then(|p| self.values.get(p))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Fills `out[..k]` with `N_{s-k+1}(x), ..., N_s(x)` for `x` in the
/// nondegenerate knot interval `s`, using the triangular recurrence.
///
/// `x` may lie on either end of the interval; at the right end this yields
/// left limits, which is what the last interval needs at `x = b`.
pub(crate) fn basis_in_interval(knots: &KnotSequence, s: usize, x: f64, out: &mut [f64]) {
    basis_local(knots, s, x - knots.knots()[s], out);
}

/// Same as [`basis_in_interval`] with the point given as `u = x - t_s`; all
/// differences are then knot differences plus `u`, which keeps full relative
/// accuracy on short intervals far from the origin.
pub(crate) fn basis_local(knots: &KnotSequence, s: usize, u: f64, out: &mut [f64]) {
    let k = knots.order();
    let t = knots.knots();
    let mut left = [0.0f64; MAX_ORDER];
    let mut right = [0.0f64; MAX_ORDER];
    out[0] = 1.0;
    for j in 1..k {
        left[j] = (t[s] - t[s + 1 - j]) + u;
        right[j] = (t[s + j] - t[s]) - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            // denom >= h_s > 0 on a nondegenerate interval; keep the 0/0 = 0
            // convention anyway.
            let temp = if denom == 0.0 { 0.0 } else { out[r] / denom };
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// The block of basis values at `x`.
pub fn eval_basis_block(knots: &KnotSequence, x: f64) -> Result<BasisValueBlock> {
    let s = knots.interval_of(x)?;
    let k = knots.order();
    let mut values = vec![0.0; k];
    basis_in_interval(knots, s, x, &mut values);
    Ok(BasisValueBlock {
        first: s + 1 - k,
        values,
    })
}

/// `sum_i c_i N_i(x)` from the `k` local basis values.
pub fn eval_spline(knots: &KnotSequence, coeffs: &[f64], x: f64) -> Result<f64> {
    if coeffs.len() != knots.dim() {
        return Err(Error::LengthMismatch {
            expected: knots.dim(),
            got: coeffs.len(),
        });
    }
    let s = knots.interval_of(x)?;
    Ok(spline_in_interval(knots, coeffs, s, x))
}

pub(crate) fn spline_in_interval(knots: &KnotSequence, coeffs: &[f64], s: usize, x: f64) -> f64 {
    let k = knots.order();
    let mut vals = [0.0f64; MAX_ORDER];
    basis_in_interval(knots, s, x, &mut vals);
    let first = s + 1 - k;
    vals[..k]
        .iter()
        .zip(&coeffs[first..first + k])
        .map(|(v, c)| v * c)
        .sum()
}

/// Support lengths `kappa_i` and the factors `k / kappa_i` turning `N_i` into `M_i`.
pub fn l1_factors(knots: &KnotSequence) -> (Vec<f64>, Vec<f64>) {
    let k = knots.order() as f64;
    let kappa: Vec<f64> = (0..knots.dim()).map(|i| knots.support_len(i)).collect();
    let factors = kappa.iter().map(|&c| k / c).collect();
    (kappa, factors)
}

/// Greville abscissae `(t_{i+1} + ... + t_{i+k-1}) / (k-1)`; for `k = 1`
/// the interval midpoints.
pub fn greville(knots: &KnotSequence) -> Vec<f64> {
    let k = knots.order();
    let t = knots.knots();
    (0..knots.dim())
        .map(|i| {
            if k == 1 {
                0.5 * (t[i] + t[i + 1])
            } else {
                t[i + 1..i + k].iter().sum::<f64>() / (k - 1) as f64
            }
        })
        .collect()
}
