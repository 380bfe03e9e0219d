//! Gauss–Legendre rules and an adaptive integrator that splits at declared
//! breakpoints and grades dyadically toward integrable singularities.

use std::num::NonZeroUsize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        let n = NonZeroUsize::new(n).expect("Gauss rule needs at least one node");
        let mut pairs = gauss_quad::GaussLegendre::new(n).into_node_weight_pairs().into_vec();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn points(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// Nodes as offsets from the left end of an interval of length `len`.
    pub fn offsets(&self, len: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * len;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (half + half * x, half * w))
    }

    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points(lo, hi).map(|(x, w)| w * f(x)).sum()
    }

    fn integrate_vec(&self, lo: f64, hi: f64, f: &mut dyn FnMut(f64, &mut [f64]), buf: &mut [f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (x, w) in self.points(lo, hi) {
            f(x, buf);
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += w * b;
            }
        }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
/// Points where an integrand needs special handling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Markers {
    /// Points where the integrand or one of its derivatives jumps.
    pub breakpoints: Vec<f64>,
    /// `(point, exponent)`: the integrand behaves like `|x - point|^exponent`.
    pub singularities: Vec<(f64, f64)>,
}

impl Markers {
    pub fn validate(&self) -> Result<()> {
        for &(point, exponent) in &self.singularities {
            if !(exponent > -1.0) {
                return Err(Error::NonIntegrableMarker { point, exponent });
            }
        }
        Ok(())
    }

    fn split_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .chain(self.singularities.iter().map(|s| s.0))
            .filter(|&p| p > lo && p < hi)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn exponent_at(&self, x: f64) -> Option<f64> {
        self.singularities
            .iter()
            .find(|s| s.0 == x)
            .map(|s| s.1)
    }
}

/// Adaptive bisection with a fixed Gauss rule, comparing each piece against
/// its two halves.
#[derive(Debug, Clone)]
pub struct Adaptive {
    rule: GaussLegendre,
    /// Absolute tolerance per unit length of the integration range.
    pub tol_density: f64,
    pub rel_tol: f64,
    pub max_pieces: usize,
    pub grading_depth: u32,
}

impl Adaptive {
    pub fn new(tol_density: f64) -> Self {
        Self {
            rule: GaussLegendre::new(20),
            tol_density,
            rel_tol: 1e-14,
            max_pieces: 200_000,
            grading_depth: 40,
        }
    }

    /// Adds `∫_lo^hi f` into `out` (vector-valued `f` of dimension `out.len()`),
    /// splitting at the markers. Returns the accumulated error estimate.
    pub fn integrate_marked(
        &self,
        lo: f64,
        hi: f64,
        markers: &Markers,
        f: &mut dyn FnMut(f64, &mut [f64]),
        out: &mut [f64],
    ) -> Result<f64> {
        if !(hi > lo) {
            return Ok(0.0);
        }
        let mut cuts = vec![lo];
        cuts.extend(markers.split_points(lo, hi));
        cuts.push(hi);
        let mut err = 0.0;
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            match (markers.exponent_at(p), markers.exponent_at(q)) {
                (None, None) => err += self.integrate_smooth(p, q, f, out)?,
                (Some(alpha), None) => err += self.integrate_graded(p, q, alpha, f, out)?,
                (None, Some(alpha)) => err += self.integrate_graded(q, p, alpha, f, out)?,
                (Some(a0), Some(a1)) => {
                    let mid = 0.5 * (p + q);
                    err += self.integrate_graded(p, mid, a0, f, out)?;
                    err += self.integrate_graded(q, mid, a1, f, out)?;
                }
            }
        }
        Ok(err)
    }

    pub fn integrate_scalar(&self, lo: f64, hi: f64, markers: &Markers, mut f: impl FnMut(f64) -> f64) -> Result<(f64, f64)> {
        let mut out = [0.0];
        let err = self.integrate_marked(lo, hi, markers, &mut |x, v: &mut [f64]| v[0] = f(x), &mut out)?;
        Ok((out[0], err))
    }

    /// Plain adaptive bisection on `[lo, hi]`.
    pub fn integrate_smooth(&self, lo: f64, hi: f64, f: &mut dyn FnMut(f64, &mut [f64]), out: &mut [f64]) -> Result<f64> {
        self.bisect(lo, hi, self.rel_tol, f, out)
    }

    fn bisect(&self, lo: f64, hi: f64, rel_tol: f64, f: &mut dyn FnMut(f64, &mut [f64]), out: &mut [f64]) -> Result<f64> {
        let m = out.len();
        let mut buf = vec![0.0; m];
        let mut whole = vec![0.0; m];
        let mut left = vec![0.0; m];
        let mut right = vec![0.0; m];
        self.rule.integrate_vec(lo, hi, f, &mut buf, &mut whole);
        let mut stack = vec![(lo, hi, whole)];
        let mut pieces = 0usize;
        let mut err = 0.0;
        while let Some((a, b, est)) = stack.pop() {
            pieces += 1;
            if pieces > self.max_pieces {
                return Err(Error::QuadratureNonConvergence {
                    lo,
                    hi,
                    estimate: f64::INFINITY,
                });
            }
            let mid = 0.5 * (a + b);
            self.rule.integrate_vec(a, mid, f, &mut buf, &mut left);
            self.rule.integrate_vec(mid, b, f, &mut buf, &mut right);
            let mut diff = 0.0f64;
            let mut size = 0.0f64;
            for p in 0..m {
                let refined = left[p] + right[p];
                diff = diff.max((refined - est[p]).abs());
                size = size.max(refined.abs());
            }
            let tol = (self.tol_density * (b - a)).max(rel_tol * size);
            let unsplittable = mid <= a || mid >= b || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs());
            if diff <= tol || unsplittable {
                if unsplittable && diff > tol {
                    return Err(Error::QuadratureNonConvergence { lo, hi, estimate: diff });
                }
                for p in 0..m {
                    out[p] += left[p] + right[p];
                }
                err += diff;
            } else {
                stack.push((a, mid, left.clone()));
                stack.push((mid, b, right.clone()));
            }
        }
        Ok(err)
    }

    /// Integral over the segment from `c` (a singular point with exponent
    /// `alpha`) to `far`, using dyadic grading toward `c` and a power-law
    /// model `|u|^alpha (A + B|u|)` on the innermost piece.
    ///
    /// Grading stops early when `c != 0`: quadrature nodes at distance `u`
    /// from `c` carry a relative position error of about `eps |c| / u`, and
    /// going closer only trades model error for rounding noise.
    pub fn integrate_graded(
        &self,
        c: f64,
        far: f64,
        alpha: f64,
        f: &mut dyn FnMut(f64, &mut [f64]),
        out: &mut [f64],
    ) -> Result<f64> {
        let m = out.len();
        let len = far - c;
        let floor = (f64::EPSILON * c.abs() * len * len).cbrt();
        let mut err = 0.0;
        let mut tmp = vec![0.0; m];
        let mut outer = len;
        for _ in 0..self.grading_depth {
            let inner = 0.5 * outer;
            if inner.abs() < floor {
                break;
            }
            tmp.iter_mut().for_each(|v| *v = 0.0);
            let (p, q) = ordered(c + inner, c + outer);
            let noise = 8.0 * f64::EPSILON * c.abs() / inner.abs();
            err += self.bisect(p, q, self.rel_tol.max(noise), f, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += v;
            }
            outer = inner;
        }
        let eps = outer.abs();
        let mut g = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        for (r, gr) in g.iter_mut().enumerate() {
            f(c + outer / (1 << r) as f64, gr);
        }
        let mut tail_err = 0.0f64;
        for p in 0..m {
            // F(u) = f(u) / u^alpha = A + B u, sampled at eps, eps/2, eps/4
            let fu = |r: usize| g[r][p] / (eps / (1 << r) as f64).powf(alpha);
            let (f1, f2, f4) = (fu(0), fu(1), fu(2));
            let b_eps = 2.0 * (f1 - f2);
            let a = 2.0 * f2 - f1;
            let scale = eps.powf(alpha + 1.0);
            out[p] += scale * (a / (alpha + 1.0) + b_eps / (alpha + 2.0));
            let predicted = a + 0.25 * b_eps;
            tail_err = tail_err.max(scale * (f4 - predicted).abs() / (alpha + 1.0));
        }
        Ok(err + tail_err)
    }
}

fn ordered(x: f64, y: f64) -> (f64, f64) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_rules_integrate_monomials_exactly() {
        for n in 1..=20 {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.points(-1.0, 1.0).map(|p| p.1).sum();
            assert_abs_diff_eq!(wsum, 2.0, epsilon = 1e-14);
            for d in 0..2 * n {
                let exact = (1.0 - (-1.0f64).powi(d as i32 + 1)) / (d as f64 + 1.0);
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(d as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn mapped_interval() {
        let rule = GaussLegendre::new(3);
        let got = rule.integrate(2.0, 5.0, |x| x * x);
        assert_abs_diff_eq!(got, (125.0 - 8.0) / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_jump_with_breakpoint() {
        let q = Adaptive::new(1e-12);
        let markers = Markers {
            breakpoints: vec![0.3],
            singularities: vec![],
        };
        let (v, err) = q
            .integrate_scalar(0.0, 1.0, &markers, |x| if x < 0.3 { 0.0 } else { 2.0 })
            .unwrap();
        assert_abs_diff_eq!(v, 1.4, epsilon = 1e-14);
        assert!(err <= 1e-12);
    }

    #[test]
    fn undeclared_jump_fails_loudly() {
        let mut q = Adaptive::new(1e-12);
        q.max_pieces = 2000;
        let r = q.integrate_scalar(0.0, 1.0, &Markers::default(), |x| if x < 1.0 / 3.0 { 0.0 } else { 1.0 });
        assert!(matches!(r, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn graded_singularities() {
        let q = Adaptive::new(1e-12);
        for alpha in [-0.5, -0.9, -0.25, 0.5] {
            let markers = Markers {
                breakpoints: vec![],
                singularities: vec![(0.0, alpha)],
            };
            let (v, _) = q.integrate_scalar(0.0, 1.0, &markers, |x| x.powf(alpha)).unwrap();
            assert_abs_diff_eq!(v, 1.0 / (alpha + 1.0), epsilon = 1e-11);
            // singular point at the right end, weighted by a smooth factor
            let markers = Markers {
                breakpoints: vec![],
                singularities: vec![(2.0, alpha)],
            };
            let (v, _) = q
                .integrate_scalar(1.0, 2.0, &markers, |x| (2.0 - x).powf(alpha) * x)
                .unwrap();
            let exact = 2.0 / (alpha + 1.0) - 1.0 / (alpha + 2.0);
            assert_abs_diff_eq!(v, exact, epsilon = 1e-11);
        }
    }

    #[test]
    fn interior_singularity() {
        let q = Adaptive::new(1e-12);
        let markers = Markers {
            breakpoints: vec![],
            singularities: vec![(0.5, -0.5)],
        };
        let (v, _) = q
            .integrate_scalar(0.0, 1.0, &markers, |x| (x - 0.5).abs().powf(-0.5))
            .unwrap();
        assert_abs_diff_eq!(v, 4.0 * 0.5f64.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn marker_validation() {
        let m = Markers {
            breakpoints: vec![],
            singularities: vec![(0.0, -1.0)],
        };
        assert!(matches!(m.validate(), Err(Error::NonIntegrableMarker { .. })));
    }
}
