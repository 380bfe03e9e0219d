//! Clamped knot sequences on `[a, b]` and the interval geometry derived from
//! them.
//!
//! Indices are zero-based throughout. With `n` basis functions of order `k`
//! the extended vector `t` has `n + k` entries, the B-spline `N_i` lives on
//! `E_i = [t_i, t_{i+k}]`, and the knot interval `I_s = [t_s, t_{s+1}]` is
//! nondegenerate only for some `s` in `k-1..=n-1`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spline order.
pub const MAX_ORDER: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotSequence {
    k: usize,
    t: Vec<f64>,
    h: Vec<f64>,
}

impl KnotSequence {
    /// Builds the extended knot vector from strictly increasing breakpoints
    /// `a = breaks[0] < ... < breaks[m] = b` and the multiplicities of the
    /// interior breakpoints. Endpoints get multiplicity `k`.
    pub fn new(breaks: &[f64], interior_mults: &[usize], k: usize) -> Result<Self> {
        check_order(k)?;
        if breaks.len() < 2 {
            return Err(Error::ZeroIntervals);
        }
        let (a, b) = (breaks[0], *breaks.last().unwrap());
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::EmptyInterval { a, b });
        }
        for (index, w) in breaks.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::NonMonotoneBreaks { index: index + 1 });
            }
        }
        let interior = breaks.len() - 2;
        if interior_mults.len() != interior {
            return Err(Error::LengthMismatch {
                expected: interior,
                got: interior_mults.len(),
            });
        }
        let mut t = Vec::with_capacity(2 * k + interior_mults.iter().sum::<usize>());
        t.extend(std::iter::repeat_n(a, k));
        for (index, (&x, &m)) in breaks[1..=interior].iter().zip(interior_mults).enumerate() {
            if m == 0 || m > k {
                return Err(Error::MultiplicityOutOfRange {
                    index: index + 1,
                    mult: m,
                    k,
                });
            }
            t.extend(std::iter::repeat_n(x, m));
        }
        t.extend(std::iter::repeat_n(b, k));
        Ok(Self::from_valid(k, t))
    }

    /// Same as [`KnotSequence::new`] with every interior breakpoint at
    /// multiplicity `mult`.
    pub fn with_multiplicity(breaks: &[f64], mult: usize, k: usize) -> Result<Self> {
        let mults = vec![mult; breaks.len().saturating_sub(2)];
        Self::new(breaks, &mults, k)
    }

    /// Validates a full extended knot vector.
    pub fn from_knots(k: usize, t: Vec<f64>) -> Result<Self> {
        check_order(k)?;
        if t.len() < 2 * k {
            return Err(Error::EndpointMultiplicity { k });
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("knots must be finite".into()));
        }
        for (index, w) in t.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::NonMonotoneKnots { index: index + 1 });
            }
        }
        let (a, b) = (t[0], t[t.len() - 1]);
        if !(a < b) {
            return Err(Error::EmptyInterval { a, b });
        }
        let n = t.len() - k;
        if t[k - 1] != a || t[n] != b || t[k] == a || t[n - 1] == b {
            return Err(Error::EndpointMultiplicity { k });
        }
        for i in 0..t.len() - k {
            if !(t[i] < t[i + k]) {
                return Err(Error::MultiplicityOutOfRange {
                    index: i,
                    mult: k + 1,
                    k,
                });
            }
        }
        Ok(Self::from_valid(k, t))
    }

    fn from_valid(k: usize, t: Vec<f64>) -> Self {
        let h = t.windows(2).map(|w| w[1] - w[0]).collect();
        Self { k, t, h }
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// Dimension of the spline space (number of B-splines).
    pub fn dim(&self) -> usize {
        self.t.len() - self.k
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn a(&self) -> f64 {
        self.t[0]
    }

    pub fn b(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Knot interval lengths `h_s = t_{s+1} - t_s`, including zero-length ones.
    pub fn interval_lengths(&self) -> &[f64] {
        &self.h
    }

    /// Mesh diameter `max_s h_s`.
    pub fn mesh(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    /// Indices `s` of the knot intervals with positive length, in order.
    pub fn nondegenerate_intervals(&self) -> impl Iterator<Item = usize> + '_ {
        (self.k - 1..self.dim()).filter(move |&s| self.h[s] > 0.0)
    }

    /// Distinct breakpoints `a = x_0 < ... < x_m = b`.
    pub fn breaks(&self) -> Vec<f64> {
        let mut out = vec![self.a()];
        out.extend(self.nondegenerate_intervals().map(|s| self.t[s + 1]));
        out
    }

    /// `kappa_i = |E_i| = t_{i+k} - t_i`.
    pub fn support_len(&self, i: usize) -> f64 {
        self.t[i + self.k] - self.t[i]
    }

    /// `|I_ij| = t_{max(i,j)+1} - t_{min(i,j)}` for knot-interval indices.
    pub fn hull_len(&self, i: usize, j: usize) -> f64 {
        self.t[i.max(j) + 1] - self.t[i.min(j)]
    }

    /// Index of the nondegenerate knot interval holding `x`. A point on a
    /// break belongs to the interval on its right, except `x = b`, which
    /// belongs to the last one.
    pub fn interval_of(&self, x: f64) -> Result<usize> {
        let (a, b) = (self.a(), self.b());
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        if x == b {
            return Ok(self.dim() - 1);
        }
        Ok(self.t.partition_point(|&t| t <= x) - 1)
    }

    /// `h_ij`: the longest knot interval inside `E_ij = [t_min(i,j), t_max(i,j)+k]`.
    pub fn largest_gap(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.dim();
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let (lo, hi) = (i.min(j), i.max(j));
        Ok(self.h[lo..hi + self.k].iter().copied().fold(0.0, f64::max))
    }

    /// `h_ij` for all `j >= i`, computed as a running maximum.
    pub(crate) fn largest_gaps_from(&self, i: usize) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n - i);
        let mut running = self.h[i..i + self.k - 1].iter().copied().fold(0.0, f64::max);
        for j in i..n {
            running = running.max(self.h[j + self.k - 1]);
            out.push(running);
        }
        out
    }

    /// Line-based text form: header `k n a b`, then one knot per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.k,
            self.dim(),
            fmt_f64(self.a()),
            fmt_f64(self.b())
        );
        for &t in &self.t {
            s.push_str(&fmt_f64(t));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or_else(|| Error::KnotFormat {
            line: 1,
            reason: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::KnotFormat {
                line,
                reason: "header must be `k n a b`".into(),
            });
        }
        let bad = |reason: &str| Error::KnotFormat {
            line,
            reason: reason.into(),
        };
        let k: usize = fields[0].parse().map_err(|_| bad("bad order"))?;
        let n: usize = fields[1].parse().map_err(|_| bad("bad dimension"))?;
        let a: f64 = fields[2].parse().map_err(|_| bad("bad endpoint a"))?;
        let b: f64 = fields[3].parse().map_err(|_| bad("bad endpoint b"))?;
        let mut t = Vec::with_capacity(n + k);
        for (line, l) in lines {
            t.push(l.parse::<f64>().map_err(|_| Error::KnotFormat {
                line,
                reason: format!("not a number: {l}"),
            })?);
        }
        if t.len() != n + k {
            return Err(Error::KnotFormat {
                line,
                reason: format!("expected {} knots, found {}", n + k, t.len()),
            });
        }
        let seq = Self::from_knots(k, t)?;
        if seq.a() != a || seq.b() != b {
            return Err(Error::KnotFormat {
                line,
                reason: "header endpoints disagree with knots".into(),
            });
        }
        Ok(seq)
    }
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::InvalidOrder { k, max: MAX_ORDER });
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform,
    /// Uniform with a power-of-two interval count, so all breaks are binary fractions.
    Dyadic,
    /// `h_{i+1} / h_i = ratio`.
    Geometric { ratio: f64 },
    /// Gaps drawn i.i.d. uniform on `[1/2, 3/2]`, then normalized; adjacent
    /// intervals differ by at most a factor of 3.
    Random { seed: u64 },
    /// Breakpoints given on the unit interval and mapped affinely onto `[a, b]`;
    /// `mults` overrides the interior multiplicity per breakpoint when nonempty.
    Explicit { breaks: Vec<f64>, mults: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub family: Family,
    pub n_intervals: usize,
    pub interior_multiplicity: usize,
}

impl PartitionSpec {
    pub fn new(family: Family, n_intervals: usize) -> Self {
        Self {
            family,
            n_intervals,
            interior_multiplicity: 1,
        }
    }

    pub fn uniform(n_intervals: usize) -> Self {
        Self::new(Family::Uniform, n_intervals)
    }

    pub fn dyadic(level: u32) -> Self {
        Self::new(Family::Dyadic, 1 << level)
    }

    pub fn geometric(ratio: f64, n_intervals: usize) -> Self {
        Self::new(Family::Geometric { ratio }, n_intervals)
    }

    pub fn random(seed: u64, n_intervals: usize) -> Self {
        Self::new(Family::Random { seed }, n_intervals)
    }

    pub fn with_multiplicity(mut self, m: usize) -> Self {
        self.interior_multiplicity = m;
        self
    }

    /// Same family with `n_intervals` scaled by `2^level`. Explicit partitions
    /// are returned unchanged.
    pub fn refined(&self, level: u32) -> Self {
        let mut out = self.clone();
        if !matches!(self.family, Family::Explicit { .. }) {
            out.n_intervals = self.n_intervals << level;
        }
        out
    }

    /// Breakpoints on `[a, b]` for this spec.
    pub fn breaks(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::EmptyInterval { a, b });
        }
        let n = self.n_intervals;
        if n == 0 && !matches!(self.family, Family::Explicit { .. }) {
            return Err(Error::ZeroIntervals);
        }
        let len = b - a;
        let mut breaks = match &self.family {
            Family::Uniform => (0..=n).map(|i| a + len * (i as f64) / (n as f64)).collect(),
            Family::Dyadic => {
                if !n.is_power_of_two() {
                    return Err(Error::NotDyadic(n));
                }
                (0..=n).map(|i| a + len * (i as f64) / (n as f64)).collect()
            }
            Family::Geometric { ratio } => {
                let q = *ratio;
                if !(q > 0.0) || !q.is_finite() {
                    return Err(Error::InvalidRatio(q));
                }
                geometric_breaks(a, b, q, n)
            }
            Family::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let gaps: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=1.5)).collect();
                cumulative(a, b, &gaps)
            }
            Family::Explicit { breaks, .. } => {
                if breaks.len() < 2 {
                    return Err(Error::ZeroIntervals);
                }
                let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
                if !(lo < hi) {
                    return Err(Error::EmptyInterval { a: lo, b: hi });
                }
                if lo == a && hi == b {
                    breaks.clone()
                } else {
                    breaks.iter().map(|&x| a + len * (x - lo) / (hi - lo)).collect()
                }
            }
        };
        let last = breaks.len() - 1;
        breaks[0] = a;
        breaks[last] = b;
        for (index, w) in breaks.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(Error::DegeneratePartition { index });
            }
        }
        Ok(breaks)
    }

    /// Generates the knot sequence of order `k` on `[a, b]`.
    pub fn generate(&self, k: usize, a: f64, b: f64) -> Result<KnotSequence> {
        let breaks = self.breaks(a, b)?;
        let interior = breaks.len() - 2;
        let mults = match &self.family {
            Family::Explicit { mults, .. } if !mults.is_empty() => mults.clone(),
            _ => vec![self.interior_multiplicity; interior],
        };
        KnotSequence::new(&breaks, &mults, k)
    }
}

fn geometric_breaks(a: f64, b: f64, q: f64, n: usize) -> Vec<f64> {
    // Normalize by the largest gap so that q^(n-1) never overflows.
    let gaps: Vec<f64> = if q >= 1.0 {
        (0..n).map(|i| q.powi(i as i32 - (n as i32 - 1))).collect()
    } else {
        (0..n).map(|i| q.powi(i as i32)).collect()
    };
    let total: f64 = gaps.iter().sum();
    let len = b - a;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = a;
    out.push(a);
    for g in &gaps {
        acc += len * g / total;
        out.push(acc);
    }
    out
}

fn cumulative(a: f64, b: f64, gaps: &[f64]) -> Vec<f64> {
    let total: f64 = gaps.iter().sum();
    let mut out = Vec::with_capacity(gaps.len() + 1);
    let mut acc = 0.0;
    out.push(a);
    for g in gaps {
        acc += g;
        out.push(a + (b - a) * (acc / total));
    }
    out
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Uniform => write!(f, "uniform:{}", self.n_intervals)?,
            Family::Dyadic => write!(f, "dyadic:{}", self.n_intervals)?,
            Family::Geometric { ratio } => write!(f, "geometric:{}:{}", ratio, self.n_intervals)?,
            Family::Random { seed } => write!(f, "random:{}:{}", self.n_intervals, seed)?,
            Family::Explicit { breaks, mults } => {
                write!(f, "explicit:")?;
                for (i, x) in breaks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                    if i > 0 && i + 1 < breaks.len() && !mults.is_empty() {
                        write!(f, "/{}", mults[i - 1])?;
                    }
                }
            }
        }
        if self.interior_multiplicity != 1 {
            write!(f, "@{}", self.interior_multiplicity)?;
        }
        Ok(())
    }
}

impl FromStr for PartitionSpec {
    type Err = Error;

    /// `uniform:N`, `dyadic:N`, `geometric:Q:N`, `random:N[:SEED]`,
    /// `explicit:x0,x1/m1,...,xm`, each optionally suffixed with `@MULT`.
    /// A random spec without a seed gets seed 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidPartitionSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (body, mult) = match s.rsplit_once('@') {
            Some((body, m)) => (body, m.parse::<usize>().map_err(|_| bad("bad multiplicity"))?),
            None => (s, 1),
        };
        let (name, rest) = body.split_once(':').ok_or_else(|| bad("expected FAMILY:ARGS"))?;
        let count = |x: &str| x.trim().parse::<usize>().map_err(|_| bad("bad interval count"));
        let args: Vec<&str> = rest.split(':').collect();
        let spec = match (name.trim(), args.as_slice()) {
            ("uniform", [n]) => Self::uniform(count(n)?),
            ("dyadic", [n]) => Self::new(Family::Dyadic, count(n)?),
            ("geometric", [q, n]) => Self::geometric(
                q.trim().parse().map_err(|_| bad("bad ratio"))?,
                count(n)?,
            ),
            ("random", [n]) => Self::random(0, count(n)?),
            ("random", [n, seed]) => {
                Self::random(seed.trim().parse().map_err(|_| bad("bad seed"))?, count(n)?)
            }
            ("explicit", [list]) => {
                let mut breaks = Vec::new();
                let mut mults = Vec::new();
                for item in list.split(',') {
                    let (x, m) = match item.split_once('/') {
                        Some((x, m)) => (x, Some(m.trim().parse().map_err(|_| bad("bad multiplicity"))?)),
                        None => (item, None),
                    };
                    breaks.push(x.trim().parse::<f64>().map_err(|_| bad("bad breakpoint"))?);
                    mults.push(m);
                }
                if breaks.len() < 2 {
                    return Err(bad("need at least two breakpoints"));
                }
                let interior = &mults[1..mults.len() - 1];
                let mults = if interior.iter().any(Option::is_some) {
                    interior.iter().map(|m| m.unwrap_or(mult)).collect()
                } else {
                    Vec::new()
                };
                Self::new(Family::Explicit { breaks, mults }, 0)
            }
            _ => return Err(bad("unknown family or wrong argument count")),
        };
        let mut spec = spec.with_multiplicity(mult);
        if let Family::Explicit { breaks, .. } = &spec.family {
            spec.n_intervals = breaks.len() - 1;
        }
        Ok(spec)
    }
}

impl Serialize for PartitionSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartitionSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A refinement ladder: the base spec with its interval count doubled per level.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub base: PartitionSpec,
    pub levels: usize,
}

impl Ladder {
    pub fn new(base: PartitionSpec, levels: usize) -> Self {
        Self { base, levels }
    }

    pub fn generate(&self, k: usize, a: f64, b: f64) -> Result<Vec<KnotSequence>> {
        (0..self.levels as u32)
            .map(|l| self.base.refined(l).generate(k, a, b))
            .collect()
    }
}
