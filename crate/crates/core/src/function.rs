//! Integrable test functions with declared breakpoints and singularities.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{Adaptive, Markers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    /// Infinitely differentiable on the whole interval.
    Smooth,
    /// Continuous, piecewise smooth.
    Continuous,
    /// Integrable only: jumps or singularities.
    Integrable,
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct TestFunction {
    name: String,
    eval: Eval,
    /// Jump discontinuities.
    pub discontinuities: Vec<f64>,
    /// Points of reduced smoothness that are still continuity points (kinks).
    pub kinks: Vec<f64>,
    /// `(point, exponent)` with `|f(x)| ~ |x - point|^exponent`, exponent in (-1, 0).
    pub singularities: Vec<(f64, f64)>,
    pub smoothness: Smoothness,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("discontinuities", &self.discontinuities)
            .field("kinks", &self.kinks)
            .field("singularities", &self.singularities)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl TestFunction {
    pub fn new(name: impl Into<String>, smoothness: Smoothness, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            discontinuities: Vec::new(),
            kinks: Vec::new(),
            singularities: Vec::new(),
            smoothness,
        }
    }

    pub fn with_discontinuities(mut self, pts: Vec<f64>) -> Self {
        self.discontinuities = pts;
        self
    }

    pub fn with_kinks(mut self, pts: Vec<f64>) -> Self {
        self.kinks = pts;
        self
    }

    pub fn with_singularity(mut self, point: f64, exponent: f64) -> Result<Self> {
        if !(exponent > -1.0) {
            return Err(Error::NonIntegrableMarker { point, exponent });
        }
        self.singularities.push((point, exponent));
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Shared evaluator, for building derived functions.
    pub fn evaluator(&self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        self.eval.clone()
    }

    /// Lebesgue points are taken from the metadata: every point off the
    /// discontinuity and singularity sets.
    pub fn is_lebesgue_point(&self, x: f64) -> bool {
        !self.discontinuities.contains(&x) && !self.singularities.iter().any(|s| s.0 == x)
    }

    pub fn markers(&self) -> Markers {
        let mut breakpoints = self.discontinuities.clone();
        breakpoints.extend(&self.kinks);
        Markers {
            breakpoints,
            singularities: self.singularities.clone(),
        }
    }

    /// `||f||_1` on `[a, b]`.
    pub fn l1_norm(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        let markers = self.markers();
        markers.validate()?;
        let q = Adaptive::new(tol / (b - a));
        Ok(q.integrate_scalar(a, b, &markers, |x| self.eval(x).abs())?.0)
    }

    /// Built-in corpus:
    ///
    /// | name              | function                         |
    /// |-------------------|----------------------------------|
    /// | `zero`, `one`     | constants                        |
    /// | `const:v`         | constant `v`                     |
    /// | `x`               | identity                         |
    /// | `pow:p`, `x^p`    | `x^p` for integer `p >= 0`       |
    /// | `sin`, `sin:w`    | `sin(w x)`                       |
    /// | `cos`, `cos:w`    | `cos(w x)`                       |
    /// | `abspow:c:alpha`  | `|x - c|^alpha`, `alpha > -1`    |
    /// | `step:c`          | `0` for `x < c`, `1` for `x >= c`|
    /// | `indicator:l:r`   | `1` on `[l, r]`, else `0`        |
    /// | `absdist:c`       | `|x - c|`                        |
    /// | `runge`           | `1 / (1 + 25 x^2)`               |
    pub fn from_name(spec: &str) -> Result<Self> {
        let unknown = || Error::UnknownFunction(spec.to_string());
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| unknown());
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let f = match parts.as_slice() {
            ["zero"] => Self::new(spec, Smoothness::Smooth, |_| 0.0),
            ["one"] => Self::new(spec, Smoothness::Smooth, |_| 1.0),
            ["const", v] => {
                let v = num(v)?;
                Self::new(spec, Smoothness::Smooth, move |_| v)
            }
            ["x"] => Self::new(spec, Smoothness::Smooth, |x| x),
            ["pow", p] => monomial(spec, p.trim().parse().map_err(|_| unknown())?),
            [s] if s.starts_with("x^") => monomial(spec, s[2..].parse().map_err(|_| unknown())?),
            ["sin"] => Self::new(spec, Smoothness::Smooth, f64::sin),
            ["sin", w] => {
                let w = num(w)?;
                Self::new(spec, Smoothness::Smooth, move |x| (w * x).sin())
            }
            ["cos"] => Self::new(spec, Smoothness::Smooth, f64::cos),
            ["cos", w] => {
                let w = num(w)?;
                Self::new(spec, Smoothness::Smooth, move |x| (w * x).cos())
            }
            ["abspow", c, alpha] => {
                let (c, alpha) = (num(c)?, num(alpha)?);
                if !(alpha > -1.0) {
                    return Err(Error::NonIntegrableMarker { point: c, exponent: alpha });
                }
                let f = move |x: f64| (x - c).abs().powf(alpha);
                if alpha < 0.0 {
                    Self::new(spec, Smoothness::Integrable, f).with_singularity(c, alpha)?
                } else if alpha == 0.0 {
                    Self::new(spec, Smoothness::Smooth, |_| 1.0)
                } else if alpha.fract() == 0.0 && (alpha as i64) % 2 == 0 {
                    Self::new(spec, Smoothness::Smooth, f)
                } else if alpha < 1.0 {
                    // continuous, unbounded derivative at c: grade toward it
                    let mut g = Self::new(spec, Smoothness::Continuous, f);
                    g.singularities.push((c, alpha));
                    g
                } else {
                    Self::new(spec, Smoothness::Continuous, f).with_kinks(vec![c])
                }
            }
            ["step", c] => {
                let c = num(c)?;
                Self::new(spec, Smoothness::Integrable, move |x| if x < c { 0.0 } else { 1.0 })
                    .with_discontinuities(vec![c])
            }
            ["indicator", l, r] => {
                let (l, r) = (num(l)?, num(r)?);
                if !(l < r) {
                    return Err(unknown());
                }
                Self::new(spec, Smoothness::Integrable, move |x| {
                    if (l..=r).contains(&x) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .with_discontinuities(vec![l, r])
            }
            ["absdist", c] => {
                let c = num(c)?;
                Self::new(spec, Smoothness::Continuous, move |x| (x - c).abs()).with_kinks(vec![c])
            }
            ["runge"] => Self::new(spec, Smoothness::Smooth, |x| 1.0 / (1.0 + 25.0 * x * x)),
            _ => return Err(unknown()),
        };
        Ok(f)
    }
}

fn monomial(name: &str, p: i32) -> TestFunction {
    assert!(p >= 0);
    TestFunction::new(name, Smoothness::Smooth, move |x| x.powi(p))
}
