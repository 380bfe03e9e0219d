//! B-spline Gram matrices `G0 = <N_i, N_j>`, their banded Cholesky
//! factorization, the dense inverse `A = G0^{-1}` and the scaled Gram
//! `G = <M_i, N_j> = D^{-1} G0` with `D = diag(kappa_i / k)`.

use rayon::prelude::*;

use crate::bspline::{basis_local, l1_factors};
use crate::error::{Error, Result};
use crate::knots::{KnotSequence, MAX_ORDER};
use crate::quadrature::GaussLegendre;

/// Symmetric banded matrix with bandwidth `k - 1`, upper band stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    k: usize,
    band: Vec<f64>,
}

impl GramMatrix {
    /// Assembles `<N_i, N_j>` with a `k`-point Gauss rule on each
    /// nondegenerate knot interval; exact up to roundoff since `N_i N_j` is a
    /// polynomial of degree `2k - 2` there.
    pub fn assemble(knots: &KnotSequence) -> Self {
        let n = knots.dim();
        let k = knots.order();
        let rule = GaussLegendre::new(k);
        let t = knots.knots();
        let mut band = vec![0.0; n * k];
        let mut vals = [0.0f64; MAX_ORDER];
        for s in knots.nondegenerate_intervals() {
            let first = s + 1 - k;
            for (u, w) in rule.offsets(t[s + 1] - t[s]) {
                basis_local(knots, s, u, &mut vals);
                for p in 0..k {
                    let wp = w * vals[p];
                    for q in p..k {
                        band[(first + p) * k + (q - p)] += wp * vals[q];
                    }
                }
            }
        }
        Self { n, k, band }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn bandwidth(&self) -> usize {
        self.k - 1
    }

    /// Entry `g_ij`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (i.min(j), i.max(j));
        if hi - lo >= self.k || hi >= self.n {
            return 0.0;
        }
        self.band[lo * self.k + (hi - lo)]
    }

    /// Column range `j` with `|i - j| < k` for row `i`.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.k - 1)..(i + self.k).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j)).sum())
            .collect()
    }

    /// Band entries `(i, j, g_ij)` for `|i - j| < k`, both triangles, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row_range(i).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn factor(&self) -> Result<BandCholesky> {
        BandCholesky::new(self)
    }

    /// The scaled Gram `G = D^{-1} G0`, i.e. row `i` divided by `kappa_i / k`.
    pub fn scaled(&self, knots: &KnotSequence) -> Result<ScaledGram> {
        if knots.dim() != self.n || knots.order() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: knots.dim(),
            });
        }
        let (_, factors) = l1_factors(knots);
        let w = 2 * self.k - 1;
        let mut rows = vec![0.0; self.n * w];
        for i in 0..self.n {
            for j in self.row_range(i) {
                rows[i * w + (j + self.k - 1 - i)] = factors[i] * self.get(i, j);
            }
        }
        Ok(ScaledGram { n: self.n, k: self.k, rows })
    }
}

/// `G = <M_i, N_j>`, banded but not symmetric; rows stored with offsets
/// `-(k-1)..=(k-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledGram {
    n: usize,
    k: usize,
    rows: Vec<f64>,
}

impl ScaledGram {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let off = j as isize - i as isize;
        if off.unsigned_abs() >= self.k || i >= self.n || j >= self.n {
            return 0.0;
        }
        self.rows[i * (2 * self.k - 1) + (off + self.k as isize - 1) as usize]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let w = 2 * self.k - 1;
        self.rows.chunks(w).map(|r| r.iter().sum()).collect()
    }

    /// `max_i sum_j |G_ij|`.
    pub fn norm_inf(&self) -> f64 {
        let w = 2 * self.k - 1;
        self.rows
            .chunks(w)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `max_j sum_i |G_ij|`.
    pub fn norm_one(&self) -> f64 {
        let mut cols = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.k - 1)..(i + self.k).min(self.n) {
                cols[j] += self.get(i, j).abs();
            }
        }
        cols.into_iter().fold(0.0, f64::max)
    }
}

/// `G0 = L L^T` with `L` lower banded; `l[i*k + d] = L_{i, i-d}`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    k: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn new(g: &GramMatrix) -> Result<Self> {
        let (n, k) = (g.n, g.k);
        let mut l = vec![0.0; n * k];
        for j in 0..n {
            let lo = j.saturating_sub(k - 1);
            let mut s = g.get(j, j);
            for p in lo..j {
                let v = l[j * k + (j - p)];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: s });
            }
            let d = s.sqrt();
            l[j * k] = d;
            for i in j + 1..(j + k).min(n) {
                let lo = i.saturating_sub(k - 1);
                let mut s = g.get(i, j);
                for p in lo..j {
                    s -= l[i * k + (i - p)] * l[j * k + (j - p)];
                }
                l[i * k + (i - j)] = s / d;
            }
        }
        Ok(Self { n, k, l })
    }

    /// Pivots `L_jj^2` of the factorization; all positive.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.l[j * self.k].powi(2)).collect()
    }

    /// Solves `G0 x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, k) = (self.n, self.k);
        for i in 0..n {
            let mut s = x[i];
            for p in i.saturating_sub(k - 1)..i {
                s -= self.l[i * k + (i - p)] * x[p];
            }
            x[i] = s / self.l[i * k];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for q in i + 1..(i + k).min(n) {
                s -= self.l[q * k + (q - i)] * x[q];
            }
            x[i] = s / self.l[i * k];
        }
    }
}

/// Solves `G0 c = rhs` through the banded Cholesky factorization.
pub fn solve_banded(g: &GramMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != g.n {
        return Err(Error::LengthMismatch {
            expected: g.n,
            got: rhs.len(),
        });
    }
    let chol = g.factor()?;
    let mut x = rhs.to_vec();
    chol.solve_in_place(&mut x);
    Ok(x)
}

/// Relative asymmetry above which inversion is treated as a bug.
pub const ASYMMETRY_LIMIT: f64 = 1e-8;

/// Dense `A = G0^{-1}`, symmetrized.
#[derive(Debug, Clone)]
pub struct InverseGram {
    n: usize,
    k: usize,
    a: Vec<f64>,
    /// `max |(G0 A - I)_ij|` before symmetrization.
    pub residual: f64,
    /// `max |a_ij - a_ji| / max(|a_ij|, |a_ji|)` before symmetrization.
    pub asymmetry: f64,
}

impl InverseGram {
    /// Inverts by `n` independent banded solves against identity columns,
    /// with one step of iterative refinement for any column whose residual
    /// exceeds `1e-12`.
    pub fn new(g: &GramMatrix) -> Result<Self> {
        let n = g.n;
        let chol = g.factor()?;
        let cols: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut x = vec![0.0; n];
                x[j] = 1.0;
                chol.solve_in_place(&mut x);
                let mut res = column_residual(g, &x, j);
                if res.iter().fold(0.0f64, |m, v| m.max(v.abs())) > 1e-12 {
                    chol.solve_in_place(&mut res);
                    x.iter_mut().zip(&res).for_each(|(xi, d)| *xi += d);
                    res = column_residual(g, &x, j);
                }
                let r = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (x, r)
            })
            .collect();
        let residual = cols.iter().map(|c| c.1).fold(0.0, f64::max);
        // cols[j][i] = a_ij
        let mut a = vec![0.0; n * n];
        let mut asymmetry = 0.0f64;
        let mut worst = (0, 0);
        for i in 0..n {
            for j in i..n {
                let (x, y) = (cols[j].0[i], cols[i].0[j]);
                let scale = x.abs().max(y.abs());
                if scale > 0.0 {
                    let rel = (x - y).abs() / scale;
                    if rel > asymmetry {
                        asymmetry = rel;
                        worst = (i, j);
                    }
                }
                let v = 0.5 * (x + y);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        if asymmetry > ASYMMETRY_LIMIT {
            return Err(Error::AsymmetricInverse {
                i: worst.0,
                j: worst.1,
                rel: asymmetry,
                limit: ASYMMETRY_LIMIT,
            });
        }
        Ok(Self {
            n,
            k: g.k,
            a,
            residual,
            asymmetry,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Row `i`: the coefficients of the dual function `N_i^* = sum_j a_ij N_j`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// Entries of `G^{-1}`: `b_ij = a_ij kappa_j / k`, row-major.
    pub fn scaled_inverse(&self, knots: &KnotSequence) -> Vec<f64> {
        let (kappa, _) = l1_factors(knots);
        let k = self.k as f64;
        let n = self.n;
        (0..n * n).map(|p| self.a[p] * kappa[p % n] / k).collect()
    }

    /// `max |(G0 A - I)_ij|` for the stored (symmetrized) matrix.
    pub fn residual_against(&self, g: &GramMatrix) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|j| {
                let col: Vec<f64> = (0..self.n).map(|i| self.get(i, j)).collect();
                column_residual(g, &col, j)
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `e_j - G0 x`.
fn column_residual(g: &GramMatrix, x: &[f64], j: usize) -> Vec<f64> {
    let mut r = g.matvec(x);
    r.iter_mut().for_each(|v| *v = -*v);
    r[j] += 1.0;
    r
}

/// Norms of the scaled Gram and its inverse; `||G||_inf = 1` exactly in
/// exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScaledNorms {
    pub g_inf: f64,
    pub g_one: f64,
    pub ginv_inf: f64,
    pub ginv_one: f64,
}

pub fn scaled_norms(g0: &GramMatrix, inverse: &InverseGram, knots: &KnotSequence) -> Result<ScaledNorms> {
    let g = g0.scaled(knots)?;
    let b = inverse.scaled_inverse(knots);
    let n = inverse.n;
    let ginv_inf = b
        .chunks(n)
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut cols = vec![0.0; n];
    for r in b.chunks(n) {
        for (c, v) in cols.iter_mut().zip(r) {
            *c += v.abs();
        }
    }
    Ok(ScaledNorms {
        g_inf: g.norm_inf(),
        g_one: g.norm_one(),
        ginv_inf,
        ginv_one: cols.into_iter().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knots::PartitionSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn order_one_gram_is_diagonal() {
        let s = KnotSequence::new(&[0.0, 0.5, 1.0], &[1], 1).unwrap();
        let g = GramMatrix::assemble(&s);
        assert_eq!(g.get(0, 0), 0.5);
        assert_eq!(g.get(1, 1), 0.5);
        assert_eq!(g.get(0, 1), 0.0);
        let inv = InverseGram::new(&g).unwrap();
        assert_abs_diff_eq!(inv.get(0, 0), 2.0, epsilon = 1e-15);
        assert_eq!(inv.get(0, 1), 0.0);
        let gs = g.scaled(&s).unwrap();
        assert_eq!(gs.get(0, 0), 1.0);
        assert_eq!(gs.get(1, 1), 1.0);
    }

    #[test]
    fn single_interval_linear() {
        let s = KnotSequence::new(&[0.0, 1.0], &[], 2).unwrap();
        let g = GramMatrix::assemble(&s);
        assert_abs_diff_eq!(g.get(0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(0, 1), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(1, 1), 1.0 / 3.0, epsilon = 1e-15);
        let gs = g.scaled(&s).unwrap();
        assert_abs_diff_eq!(gs.get(0, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gs.get(0, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gs.get(1, 0), 1.0 / 3.0, epsilon = 1e-15);
        let inv = InverseGram::new(&g).unwrap();
        assert_abs_diff_eq!(inv.get(0, 0), 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(inv.get(0, 1), -2.0, epsilon = 1e-13);
        let c = solve_banded(&g, &[1.0 / 3.0, 1.0 / 6.0]).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn uniform_linear_interior_rows() {
        let h = 0.125;
        let s = PartitionSpec::uniform(8).generate(2, 0.0, 1.0).unwrap();
        let g = GramMatrix::assemble(&s);
        for i in 1..8 {
            assert_abs_diff_eq!(g.get(i, i), 2.0 * h / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(g.get(i, i + 1), h / 6.0, epsilon = 1e-15);
            assert_abs_diff_eq!(g.get(i, i - 1), h / 6.0, epsilon = 1e-15);
            assert_eq!(g.get(i, i + 2), 0.0);
        }
    }

    #[test]
    fn solves_and_pivots() {
        for k in 1..=6 {
            let s = PartitionSpec::random(k as u64, 40).generate(k, 0.0, 1.0).unwrap();
            let g = GramMatrix::assemble(&s);
            let chol = g.factor().unwrap();
            assert!(chol.pivots().iter().all(|&p| p > 0.0));
            let rhs = g.row_sums();
            let c = solve_banded(&g, &rhs).unwrap();
            for v in c {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
            }
            let mut e1 = vec![0.0; g.dim()];
            e1[0] = 1.0;
            let rhs = g.matvec(&e1);
            let c = solve_banded(&g, &rhs).unwrap();
            for (i, v) in c.iter().enumerate() {
                assert_abs_diff_eq!(*v, e1[i], epsilon = 1e-10);
            }
            assert!(matches!(
                solve_banded(&g, &[1.0]),
                Err(Error::LengthMismatch { .. })
            ));
        }
    }

    #[test]
    fn not_positive_definite_is_reported() {
        let g = GramMatrix {
            n: 2,
            k: 2,
            band: vec![1.0, 2.0, 1.0, 0.0],
        };
        assert!(matches!(g.factor(), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn scaled_rows_sum_to_one() {
        for k in 1..=6 {
            let s = PartitionSpec::geometric(1.7, 25).generate(k, 0.0, 3.0).unwrap();
            let g = GramMatrix::assemble(&s).scaled(&s).unwrap();
            for r in g.row_sums() {
                assert_abs_diff_eq!(r, 1.0, epsilon = 1e-13);
            }
            assert_abs_diff_eq!(g.norm_inf(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn inverse_is_checkerboard_and_symmetric() {
        let s = PartitionSpec::random(3, 30).generate(4, 0.0, 1.0).unwrap();
        let g = GramMatrix::assemble(&s);
        let inv = InverseGram::new(&g).unwrap();
        assert!(inv.residual <= 1e-9);
        assert!(inv.asymmetry <= 1e-10);
        for i in 0..inv.dim() {
            for j in 0..inv.dim() {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                assert!(sign * inv.get(i, j) >= 0.0);
            }
        }
    }
}
