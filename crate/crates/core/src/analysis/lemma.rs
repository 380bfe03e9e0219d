//! Empirical constants of the three auxiliary estimates behind the decay
//! bound, for `i <= j`:
//!
//! * `|a_is| <= K1 gamma^|i-s| / max(kappa_i, kappa_s)`
//! * `|a_ij| <= K2 gamma^(j-l) sum_{mu=l-k+1}^{l+k-2} |a_imu|` for `i + k <= l < j`
//! * `|a_imu| <= K3 max_{mu-k+1 <= s <= mu-1} |a_is|` for `i < mu`
//!
//! and the bound `|a_ij| h_ij <= K gamma^|i-j|` assembled from them.

use rayon::prelude::*;
use serde::Serialize;

use super::{Check, ZERO_FLOOR};
use crate::error::{Error, Result};
use crate::gram::InverseGram;
use crate::knots::KnotSequence;

/// How many degenerate indices are kept in a report.
const MAX_LISTED: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainedCheck {
    /// `C1 = K1 gamma^{-k}`.
    pub c1: f64,
    /// `2 (k-1) K2 max(K3, 1)^{k-2} C1`.
    pub k_chain: f64,
    /// `max |a_ij| h_ij / bound_ij` over `i <= j`.
    pub max_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub k: usize,
    pub n: usize,
    pub gamma: f64,
    pub k1: f64,
    pub k2: f64,
    /// `None` for `k = 1`, where there are no preceding entries.
    pub k3: Option<f64>,
    /// `(i, mu)` pairs whose `K3` denominator vanished while the numerator
    /// did not; skipped. At most a few are listed.
    pub k3_degenerate: Vec<(usize, usize)>,
    pub k3_degenerate_count: usize,
    /// Terms of `K2` with a vanishing sum; skipped.
    pub k2_degenerate_count: usize,
    /// `None` for `k = 1`.
    pub chained: Option<ChainedCheck>,
}

impl LemmaConstants {
    pub fn checks(&self) -> Vec<Check> {
        let finite = |v: f64| if v.is_finite() { 0.0 } else { 1.0 };
        let mut out = vec![
            Check::at_most("K1 finite", finite(self.k1), 0.0),
            Check::at_most("K2 finite", finite(self.k2), 0.0),
        ];
        if let Some(k3) = self.k3 {
            out.push(Check::at_most("K3 finite", finite(k3), 0.0));
        }
        if let Some(c) = &self.chained {
            out.push(Check::at_most("chained bound ratio", c.max_ratio, 1.0 + 1e-9));
        }
        out
    }
}

fn cleaned(inverse: &InverseGram, knots: &KnotSequence, i: usize) -> Vec<f64> {
    // entries with |a_ij| h_ij below the floor count as zeros
    let gaps = knots.largest_gaps_from(i);
    let mut row: Vec<f64> = inverse.row(i).iter().map(|v| v.abs()).collect();
    for (d, g) in gaps.iter().enumerate() {
        if row[i + d] * g < ZERO_FLOOR {
            row[i + d] = 0.0;
        }
    }
    let h = knots.interval_lengths();
    let k = knots.order();
    let mut running = h[i..i + k].iter().copied().fold(0.0, f64::max);
    for j in (0..i).rev() {
        running = running.max(h[j]);
        if row[j] * running < ZERO_FLOOR {
            row[j] = 0.0;
        }
    }
    row
}

struct RowResult {
    k1: f64,
    ln_k2: f64,
    k3: f64,
    k2_degenerate: usize,
    k3_degenerate: Vec<(usize, usize)>,
    k3_degenerate_count: usize,
}

/// `K1`, `K2`, `K3` with the given `gamma`, plus the chained check.
pub fn lemma_constants(inverse: &InverseGram, knots: &KnotSequence, gamma: f64) -> Result<LemmaConstants> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} not in (0, 1)")));
    }
    let n = inverse.dim();
    let k = inverse.order();
    let kappa: Vec<f64> = (0..n).map(|i| knots.support_len(i)).collect();
    let lg = gamma.ln();
    let rows: Vec<RowResult> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = cleaned(inverse, knots, i);
            // K1 over all s
            let k1 = (0..n)
                .filter(|&s| a[s] > 0.0)
                .map(|s| (a[s].ln() + kappa[i].max(kappa[s]).ln() - lg * i.abs_diff(s) as f64).exp())
                .fold(0.0, f64::max);
            // K2 via ln m_j = ln max_{i+k <= l < j} gamma^{-(j-l)} / S(l),
            // with m_{j+1} = max(m_j, 1 / S(j)) / gamma
            let mut best = f64::NEG_INFINITY;
            let mut k2_degenerate = 0;
            let mut ln_m = f64::NEG_INFINITY;
            for j in (i + k + 1)..n {
                let l = j - 1;
                let hi = (l + k - 2).min(n - 1);
                let s: f64 = a[l + 1 - k..=hi].iter().sum();
                if s > 0.0 {
                    ln_m = ln_m.max(-s.ln());
                } else {
                    k2_degenerate += 1;
                }
                ln_m -= lg;
                if a[j] > 0.0 && ln_m > f64::NEG_INFINITY {
                    best = best.max(a[j].ln() + ln_m);
                }
            }
            // K3 over mu > i
            let mut k3 = 0.0f64;
            let mut k3_degenerate = Vec::new();
            let mut k3_degenerate_count = 0;
            if k >= 2 {
                for mu in (i + 1)..n {
                    let lo = mu.saturating_sub(k - 1);
                    let den = a[lo..mu].iter().copied().fold(0.0, f64::max);
                    if den > 0.0 {
                        k3 = k3.max(a[mu] / den);
                    } else if a[mu] > 0.0 {
                        k3_degenerate_count += 1;
                        if k3_degenerate.len() < MAX_LISTED {
                            k3_degenerate.push((i, mu));
                        }
                    }
                }
            }
            RowResult {
                k1,
                ln_k2: best,
                k3,
                k2_degenerate,
                k3_degenerate,
                k3_degenerate_count,
            }
        })
        .collect();
    let k1 = rows.iter().map(|r| r.k1).fold(0.0, f64::max);
    let k2 = rows.iter().map(|r| r.ln_k2).fold(f64::NEG_INFINITY, f64::max).exp();
    let k3 = (k >= 2).then(|| rows.iter().map(|r| r.k3).fold(0.0, f64::max));
    let mut k3_degenerate: Vec<(usize, usize)> = rows.iter().flat_map(|r| r.k3_degenerate.iter().copied()).collect();
    k3_degenerate.truncate(MAX_LISTED);
    let chained = k3.map(|k3| chained_check(inverse, knots, gamma, k1, k2, k3));
    Ok(LemmaConstants {
        k,
        n,
        gamma,
        k1,
        k2,
        k3,
        k3_degenerate,
        k3_degenerate_count: rows.iter().map(|r| r.k3_degenerate_count).sum(),
        k2_degenerate_count: rows.iter().map(|r| r.k2_degenerate).sum(),
        chained,
    })
}

/// For `i <= j` let `l` maximize `h_s` over `E_ij`. If `I_l` lies in the
/// support of `N_i` or `N_j` the bound is `K1 gamma^d / h_ij`, otherwise
/// `K gamma^d / h_ij` with `K` assembled from all three constants.
fn chained_check(inverse: &InverseGram, knots: &KnotSequence, gamma: f64, k1: f64, k2: f64, k3: f64) -> ChainedCheck {
    let n = inverse.dim();
    let k = inverse.order();
    let c1 = k1 * gamma.powi(-(k as i32));
    let k_chain = 2.0 * (k - 1) as f64 * k2 * k3.max(1.0).powi(k as i32 - 2) * c1;
    let h = knots.interval_lengths();
    let lg = gamma.ln();
    let max_ratio = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            // argmax of h_s over s in i..=j+k-1, kept as a running maximum
            let mut l = i;
            for s in i..i + k - 1 {
                if h[s] > h[l] {
                    l = s;
                }
            }
            for j in i..n {
                let s = j + k - 1;
                if h[s] > h[l] {
                    l = s;
                }
                let a = inverse.get(i, j).abs();
                let hij = h[l];
                if a * hij < ZERO_FLOOR {
                    continue;
                }
                let in_support = l < i + k || l >= j;
                let c = if in_support { k1 } else { k_chain };
                let ln_ratio = a.ln() + hij.ln() - c.ln() - lg * (j - i) as f64;
                worst = worst.max(ln_ratio.exp());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    ChainedCheck {
        c1,
        k_chain,
        max_ratio,
        holds: max_ratio <= 1.0 + 1e-9,
    }
}
