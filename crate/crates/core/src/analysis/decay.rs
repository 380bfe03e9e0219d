//! Off-diagonal decay of `A = G0^{-1}`: `|a_ij| h_ij <= K gamma^|i-j|`, and
//! of the scaled inverse `|b_ij| <= K0 gamma^|i-j|`.

use rayon::prelude::*;
use serde::Serialize;

use super::{ls_fit, Check, ZERO_FLOOR};
use crate::gram::InverseGram;
use crate::knots::KnotSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayStatus {
    /// `k = 1`: `A` is diagonal, nothing to fit.
    Diagonal,
    /// `n < 3k`, or fewer than two usable offsets in `[k, n-1]`; profile only.
    TooSmall,
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub k: usize,
    pub n: usize,
    pub status: DecayStatus,
    /// `rho(d) = max_{|i-j|=d} |a_ij| h_ij`.
    pub profile: Vec<f64>,
    /// `max_{|i-j|=d} |b_ij|`.
    pub b_profile: Vec<f64>,
    pub gamma: Option<f64>,
    pub k_hat: Option<f64>,
    /// Constant for `|b_ij|` using the same `gamma`.
    pub k0_hat: Option<f64>,
    /// Separate decay rate fitted to the `b` profile.
    pub gamma_b: Option<f64>,
    /// Root-mean-square residual of the log-linear fit.
    pub fit_rms: Option<f64>,
    /// `max |a_ij| h_ij / (K gamma^|i-j|)`; at most 1 by construction.
    pub max_bound_ratio: Option<f64>,
    /// `|a_{c,c+1}| / |a_{c,c}|` at the central row.
    pub central_ratio: Option<f64>,
}

impl DecayReport {
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        if self.status == DecayStatus::Diagonal {
            let off = self.profile.iter().skip(1).copied().fold(0.0, f64::max);
            out.push(Check::at_most("off-diagonal of A for k = 1", off, 0.0));
        }
        if let Some(g) = self.gamma {
            out.push(Check::at_most("gamma_hat", g, 0.95));
        }
        if let Some(r) = self.max_bound_ratio {
            out.push(Check::at_most("entrywise bound ratio", r, 1.0 + 1e-12));
        }
        out
    }
}

/// Profiles and fits. Offsets `d < k` enter `K` but not the slope fit.
pub fn decay_report(inverse: &InverseGram, knots: &KnotSequence) -> DecayReport {
    let n = inverse.dim();
    let k = inverse.order();
    let kf = k as f64;
    let kappa: Vec<f64> = (0..n).map(|i| knots.support_len(i)).collect();
    let zero = || (vec![0.0f64; n], vec![0.0f64; n]);
    let (profile, b_profile) = (0..n)
        .into_par_iter()
        .fold(zero, |(mut rho, mut rho_b), i| {
            let gaps = knots.largest_gaps_from(i);
            for j in i..n {
                let a = inverse.get(i, j).abs();
                let d = j - i;
                let ah = a * gaps[d];
                if ah >= ZERO_FLOOR {
                    rho[d] = rho[d].max(ah);
                    rho_b[d] = rho_b[d].max(a * kappa[i].max(kappa[j]) / kf);
                }
            }
            (rho, rho_b)
        })
        .reduce(zero, |(mut r1, mut b1), (r2, b2)| {
            for d in 0..n {
                r1[d] = r1[d].max(r2[d]);
                b1[d] = b1[d].max(b2[d]);
            }
            (r1, b1)
        });
    let central_ratio = (n >= 2 && k >= 2).then(|| {
        let c = (n - 1) / 2;
        (inverse.get(c, c + 1) / inverse.get(c, c)).abs()
    });
    let mut report = DecayReport {
        k,
        n,
        status: DecayStatus::TooSmall,
        profile,
        b_profile,
        gamma: None,
        k_hat: None,
        k0_hat: None,
        gamma_b: None,
        fit_rms: None,
        max_bound_ratio: None,
        central_ratio,
    };
    if k == 1 {
        report.status = DecayStatus::Diagonal;
        return report;
    }
    if n < 3 * k {
        return report;
    }
    let Some((ln_gamma, rms)) = fit_rate(&report.profile, k) else {
        return report;
    };
    report.status = DecayStatus::Fitted;
    report.gamma = Some(ln_gamma.exp());
    report.fit_rms = Some(rms);
    let k_hat = envelope(&report.profile, ln_gamma);
    report.k_hat = Some(k_hat);
    report.k0_hat = Some(envelope(&report.b_profile, ln_gamma));
    report.gamma_b = fit_rate(&report.b_profile, k).map(|f| f.0.exp());
    report.max_bound_ratio = Some(
        report
            .profile
            .iter()
            .enumerate()
            .filter(|p| *p.1 > 0.0)
            .map(|(d, r)| (r.ln() - ln_gamma * d as f64 - k_hat.ln()).exp())
            .fold(0.0, f64::max),
    );
    report
}

/// Log-linear fit over offsets `d >= k` with positive profile; returns
/// `(ln gamma, rms residual)`.
fn fit_rate(profile: &[f64], k: usize) -> Option<(f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .enumerate()
        .skip(k)
        .filter(|p| *p.1 > 0.0)
        .map(|(d, r)| (d as f64, r.ln()))
        .unzip();
    let (slope, icpt) = ls_fit(&x, &y)?;
    let rms = (x
        .iter()
        .zip(&y)
        .map(|(d, v)| (v - slope * d - icpt).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Some((slope, rms))
}

/// `max_d profile(d) / gamma^d`, computed in logs.
fn envelope(profile: &[f64], ln_gamma: f64) -> f64 {
    profile
        .iter()
        .enumerate()
        .filter(|p| *p.1 > 0.0)
        .map(|(d, r)| r.ln() - ln_gamma * d as f64)
        .fold(f64::NEG_INFINITY, f64::max)
        .exp()
}
