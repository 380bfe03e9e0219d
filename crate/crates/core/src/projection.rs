//! Orthogonal projection onto the spline space and its Dirichlet kernel.

use rayon::prelude::*;

use crate::bspline::{basis_in_interval, spline_in_interval};
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::gram::{BandCholesky, GramMatrix, InverseGram};
use crate::knots::{KnotSequence, MAX_ORDER};
use crate::quadrature::{Adaptive, GaussLegendre, Markers};

/// Default absolute tolerance per moment.
pub const MOMENT_TOL: f64 = 1e-11;

/// Moments `<f, N_j>` with their accumulated quadrature error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub values: Vec<f64>,
    pub error: f64,
}

/// `<f, N_j>` for all `j`, integrating interval by interval with splitting
/// at the declared discontinuities and grading toward singularities.
pub fn moments(knots: &KnotSequence, f: &TestFunction, tol: f64) -> Result<Moments> {
    let markers = f.markers();
    markers.validate()?;
    let eval = f.evaluator();
    moments_with(knots, &markers, tol, move |x| eval(x))
}

pub(crate) fn moments_with(
    knots: &KnotSequence,
    markers: &Markers,
    tol: f64,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<Moments> {
    let k = knots.order();
    let t = knots.knots();
    let q = Adaptive::new(tol / (knots.b() - knots.a()));
    let intervals: Vec<usize> = knots.nondegenerate_intervals().collect();
    let parts: Vec<(usize, Vec<f64>, f64)> = intervals
        .par_iter()
        .map(|&s| {
            let mut out = vec![0.0; k];
            let mut vals = [0.0f64; MAX_ORDER];
            let mut integrand = |x: f64, v: &mut [f64]| {
                let fx = f(x);
                basis_in_interval(knots, s, x, &mut vals);
                for (p, vp) in v.iter_mut().enumerate() {
                    *vp = fx * vals[p];
                }
            };
            let err = q.integrate_marked(t[s], t[s + 1], markers, &mut integrand, &mut out)?;
            Ok((s, out, err))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; knots.dim()];
    let mut error = 0.0;
    for (s, part, err) in parts {
        for (p, v) in part.into_iter().enumerate() {
            values[s + 1 - k + p] += v;
        }
        error += err;
    }
    Ok(Moments { values, error })
}

/// `P f` as a spline.
#[derive(Debug, Clone)]
pub struct Projection {
    pub knots: KnotSequence,
    pub coeffs: Vec<f64>,
    /// Quadrature error estimate for the moments.
    pub rhs_error: f64,
}

impl Projection {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let s = self.knots.interval_of(x)?;
        Ok(spline_in_interval(&self.knots, &self.coeffs, s, x))
    }

    /// Values at `m + 1` equispaced points of `[a, b]`.
    pub fn eval_grid(&self, m: usize) -> Vec<(f64, f64)> {
        uniform_grid(self.knots.a(), self.knots.b(), m)
            .into_iter()
            .map(|x| (x, self.eval(x).expect("grid point in domain")))
            .collect()
    }
}

/// `m + 1` equispaced points from `a` to `b`, endpoints exact.
pub fn uniform_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    let m = m.max(1);
    (0..=m)
        .map(|i| {
            if i == m {
                b
            } else {
                a + (b - a) * (i as f64 / m as f64)
            }
        })
        .collect()
}

/// Gram matrix and factorization for a fixed knot sequence, reused across
/// functions.
#[derive(Debug, Clone)]
pub struct Projector {
    knots: KnotSequence,
    gram: GramMatrix,
    chol: BandCholesky,
    pub tol: f64,
}

impl Projector {
    pub fn new(knots: &KnotSequence) -> Result<Self> {
        let gram = GramMatrix::assemble(knots);
        let chol = gram.factor()?;
        Ok(Self {
            knots: knots.clone(),
            gram,
            chol,
            tol: MOMENT_TOL,
        })
    }

    pub fn knots(&self) -> &KnotSequence {
        &self.knots
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn project(&self, f: &TestFunction) -> Result<Projection> {
        let m = moments(&self.knots, f, self.tol)?;
        Ok(self.from_moments(m))
    }

    pub fn from_moments(&self, m: Moments) -> Projection {
        let mut coeffs = m.values;
        self.chol.solve_in_place(&mut coeffs);
        Projection {
            knots: self.knots.clone(),
            coeffs,
            rhs_error: m.error,
        }
    }

    /// Projection of the spline `sum c_i N_i`: its moments are `G0 c`, computed exactly.
    pub fn project_spline(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.knots.dim() {
            return Err(Error::LengthMismatch {
                expected: self.knots.dim(),
                got: coeffs.len(),
            });
        }
        let mut c = self.gram.matvec(coeffs);
        self.chol.solve_in_place(&mut c);
        Ok(c)
    }

    /// `max_j |<f - Pf, N_j>|`, with `<f, N_j>` taken from `moments` and
    /// `<Pf, N_j> = (G0 c)_j`.
    pub fn galerkin_defect(&self, moments: &[f64], p: &Projection) -> f64 {
        self.gram
            .matvec(&p.coeffs)
            .iter()
            .zip(moments)
            .map(|(g, m)| (g - m).abs())
            .fold(0.0, f64::max)
    }
}

/// `K(x, y) = sum_{l,m} a_lm N_l(x) N_m(y)`.
#[derive(Debug, Clone, Copy)]
pub struct DirichletKernel<'a> {
    knots: &'a KnotSequence,
    inverse: &'a InverseGram,
}

impl<'a> DirichletKernel<'a> {
    pub fn new(knots: &'a KnotSequence, inverse: &'a InverseGram) -> Result<Self> {
        if knots.dim() != inverse.dim() {
            return Err(Error::LengthMismatch {
                expected: knots.dim(),
                got: inverse.dim(),
            });
        }
        Ok(Self { knots, inverse })
    }

    pub fn knots(&self) -> &KnotSequence {
        self.knots
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let sx = self.knots.interval_of(x)?;
        let sy = self.knots.interval_of(y)?;
        Ok(self.eval_in(sx, x, sy, y))
    }

    /// Kernel value with the knot intervals of `x` and `y` already known.
    pub fn eval_in(&self, sx: usize, x: f64, sy: usize, y: f64) -> f64 {
        let mut nx = [0.0f64; MAX_ORDER];
        basis_in_interval(self.knots, sx, x, &mut nx);
        self.eval_with_basis(sx, &nx, sy, y)
    }

    fn eval_with_basis(&self, sx: usize, nx: &[f64], sy: usize, y: f64) -> f64 {
        let k = self.knots.order();
        let mut ny = [0.0f64; MAX_ORDER];
        basis_in_interval(self.knots, sy, y, &mut ny);
        let (fx, fy) = (sx + 1 - k, sy + 1 - k);
        let mut sum = 0.0;
        for p in 0..k {
            let row = self.inverse.row(fx + p);
            let inner: f64 = (0..k).map(|q| row[fy + q] * ny[q]).sum();
            sum += nx[p] * inner;
        }
        sum
    }

    /// `int_a^b K(x, y) dy`, exact per interval with a `k`-point Gauss rule.
    pub fn constant_integral(&self, x: f64) -> Result<f64> {
        let sx = self.knots.interval_of(x)?;
        let mut nx = [0.0f64; MAX_ORDER];
        basis_in_interval(self.knots, sx, x, &mut nx);
        let rule = GaussLegendre::new(self.knots.order());
        let t = self.knots.knots();
        Ok(self
            .knots
            .nondegenerate_intervals()
            .map(|s| rule.integrate(t[s], t[s + 1], |y| self.eval_with_basis(sx, &nx, s, y)))
            .sum())
    }

    /// `int_a^b K(x, y) f(y) dy` by adaptive quadrature in `y`.
    pub fn apply(&self, f: &TestFunction, x: f64, tol: f64) -> Result<f64> {
        let sx = self.knots.interval_of(x)?;
        let mut nx = [0.0f64; MAX_ORDER];
        basis_in_interval(self.knots, sx, x, &mut nx);
        let markers = f.markers();
        markers.validate()?;
        let q = Adaptive::new(tol / (self.knots.b() - self.knots.a()));
        let t = self.knots.knots();
        let mut total = 0.0;
        for s in self.knots.nondegenerate_intervals() {
            let (v, _) = q.integrate_scalar(t[s], t[s + 1], &markers, |y| self.eval_with_basis(sx, &nx, s, y) * f.eval(y))?;
            total += v;
        }
        Ok(total)
    }
}
