//! Empirical constants for the inequalities that govern spline projections:
//! inverse decay, kernel bounds, maximal-function domination, weak type,
//! convergence and basis stability.

pub mod convergence;
pub mod decay;
pub mod domination;
pub mod kernel_bound;
pub mod lemma;
pub mod maximal;
pub mod stability;

pub use convergence::{convergence_report, modulus_of_smoothness, ConvergenceReport, LevelError};
pub use decay::{decay_report, DecayReport, DecayStatus};
pub use domination::{domination_report, weak_sup, weak_type_report, MAXIMAL_WEAK_LIMIT, DominationReport, WeakTypeReport};
pub use kernel_bound::{kernel_bound_report, KernelBoundReport};
pub use lemma::{lemma_constants, ChainedCheck, LemmaConstants};
pub use maximal::{maximal_function, MaximalGrid};
pub use stability::{stability_constant, StabilityReport};

use serde::Serialize;

/// Products `|a_ij| h_ij` below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-300;

/// A named numeric check against a limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: "<=",
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: ">=",
            pass: value >= limit,
        }
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn ls_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `max / min` over a set of positive values; `inf` if any is zero or
/// non-finite.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        return f64::INFINITY;
    }
    max / min
}

/// Largest ratio between consecutive values, in either direction.
pub fn max_step_ratio(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| spread(w))
        .fold(1.0, f64::max)
}
