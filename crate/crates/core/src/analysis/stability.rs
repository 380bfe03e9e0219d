//! Local stability of the B-spline basis:
//! `|c_m| <= d_k |E_m|^{-1/2} ||sum_j c_j N_j||_{L2(E_m)}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bspline::{basis_local, spline_in_interval};
use crate::error::{Error, Result};
use crate::knots::KnotSequence;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest ratio `|c_m| |E_m|^{1/2} / ||s||_{L2(E_m)}` seen.
    pub d_hat: f64,
    /// Largest ratio over unit coefficient vectors alone.
    pub d_unit: f64,
    /// Largest ratio over the local extremal vectors, i.e. the exact supremum
    /// `max_m (kappa_m [G_m^{-1}]_mm)^{1/2}` with `G_m` the Gram matrix of the
    /// B-splines meeting `E_m`, restricted to `E_m`.
    pub d_local: f64,
}

/// `|c_m| |E_m|^{1/2} / ||s||_{L2(E_m)}` maximized over `m`.
fn max_ratio(knots: &KnotSequence, rule: &GaussLegendre, c: &[f64]) -> f64 {
    let k = knots.order();
    let t = knots.knots();
    // squared L2 norm per knot interval, exact for degree 2k - 2
    let sq: Vec<f64> = (0..t.len() - 1)
        .map(|s| {
            if s + 1 < k || t[s + 1] <= t[s] {
                0.0
            } else {
                rule.integrate(t[s], t[s + 1], |x| spline_in_interval(knots, c, s, x).powi(2))
            }
        })
        .collect();
    (0..knots.dim())
        .filter(|&m| c[m] != 0.0)
        .map(|m| {
            let norm2: f64 = sq[m..m + k].iter().sum();
            if norm2 > 0.0 {
                c[m].abs() * (knots.support_len(m) / norm2).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// `sqrt(kappa_m [G_m^{-1}]_mm)`: the ratio attained by `c = G_m^{-1} e_m`,
/// which maximizes it over all coefficient vectors.
fn local_sup(knots: &KnotSequence, rule: &GaussLegendre, m: usize) -> f64 {
    let (n, k, t) = (knots.dim(), knots.order(), knots.knots());
    let lo = m.saturating_sub(k - 1);
    let hi = (m + k - 1).min(n - 1);
    let w = hi - lo + 1;
    let mut g = vec![0.0; w * w];
    let mut vals = [0.0f64; crate::knots::MAX_ORDER];
    for s in m..m + k {
        if t[s + 1] <= t[s] {
            continue;
        }
        for (u, wt) in rule.offsets(t[s + 1] - t[s]) {
            basis_local(knots, s, u, &mut vals);
            for p in 0..k {
                for q in 0..k {
                    g[(s + 1 - k + p - lo) * w + (s + 1 - k + q - lo)] += wt * vals[p] * vals[q];
                }
            }
        }
    }
    // B-splines vanishing on E_m drop out; the rest are linearly independent there
    let keep: Vec<usize> = (0..w).filter(|&p| g[p * w + p] > 0.0).collect();
    let r = keep.len();
    let mut l: Vec<f64> = (0..r * r).map(|x| g[keep[x / r] * w + keep[x % r]]).collect();
    for j in 0..r {
        let d = l[j * r + j] - (0..j).map(|p| l[j * r + p].powi(2)).sum::<f64>();
        if !(d > 0.0) {
            return f64::INFINITY;
        }
        l[j * r + j] = d.sqrt();
        for i in j + 1..r {
            let v = l[i * r + j] - (0..j).map(|p| l[i * r + p] * l[j * r + p]).sum::<f64>();
            l[i * r + j] = v / l[j * r + j];
        }
    }
    // [G^{-1}]_mm = |L^{-1} e_m|^2
    let pos = keep.iter().position(|&p| p + lo == m).expect("N_m is nonzero on its support");
    let mut y = vec![0.0; r];
    for i in pos..r {
        let rhs = if i == pos { 1.0 } else { 0.0 };
        y[i] = (rhs - (pos..i).map(|p| l[i * r + p] * y[p]).sum::<f64>()) / l[i * r + i];
    }
    (knots.support_len(m) * y.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `trials` random coefficient vectors (uniform in `[-1, 1]`, seeded), every
/// unit vector and the local extremal vectors; unit vectors make
/// `d_hat >= 1`, the extremal ones make it the exact supremum.
pub fn stability_constant(knots: &KnotSequence, trials: usize, seed: u64) -> Result<StabilityReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("stability needs at least one trial".into()));
    }
    let n = knots.dim();
    let rule = GaussLegendre::new(knots.order());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d_unit = 0.0f64;
    let mut c = vec![0.0; n];
    for m in 0..n {
        c[m] = 1.0;
        d_unit = d_unit.max(max_ratio(knots, &rule, &c));
        c[m] = 0.0;
    }
    let d_local = (0..n).map(|m| local_sup(knots, &rule, m)).fold(0.0, f64::max);
    let mut d_hat = d_unit.max(d_local);
    for _ in 0..trials {
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        d_hat = d_hat.max(max_ratio(knots, &rule, &c));
    }
    Ok(StabilityReport {
        k: knots.order(),
        n,
        trials,
        seed,
        d_hat,
        d_unit,
        d_local,
    })
}
