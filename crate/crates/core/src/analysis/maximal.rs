//! Hardy–Littlewood maximal function `M(f, x) = sup_{I ∋ x} |I|^{-1} int_I |f|`,
//! approximated from below by intervals with endpoints on a uniform grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::projection::uniform_grid;
use crate::quadrature::Adaptive;

/// Smallest accepted grid.
pub const MIN_GRID: usize = 16;

/// Prefix integrals of `|f|` on `m` uniform cells, and the grid maximal
/// function at every node and on every open cell.
#[derive(Debug, Clone)]
pub struct MaximalGrid {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    /// `int_a^{g_p} |f|`.
    pub prefix: Vec<f64>,
    node_max: Vec<f64>,
    cell_max: Vec<f64>,
}

impl MaximalGrid {
    pub fn new(f: &TestFunction, a: f64, b: f64, m: usize, tol: f64) -> Result<Self> {
        if m < MIN_GRID {
            return Err(Error::InvalidArgument(format!("maximal grid needs at least {MIN_GRID} cells, got {m}")));
        }
        let markers = f.markers();
        markers.validate()?;
        let nodes = uniform_grid(a, b, m);
        let q = Adaptive::new(tol / (b - a));
        let cells: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|c| q.integrate_scalar(nodes[c], nodes[c + 1], &markers, |x| f.eval(x).abs()).map(|r| r.0))
            .collect::<Result<_>>()?;
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(0.0);
        for c in &cells {
            prefix.push(prefix.last().unwrap() + c);
        }
        let (node_max, cell_max) = sweep(&nodes, &prefix);
        Ok(Self {
            a,
            b,
            nodes,
            prefix,
            node_max,
            cell_max,
        })
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Grid maximal function on each open cell `(g_c, g_{c+1})`.
    pub fn cell_values(&self) -> &[f64] {
        &self.cell_max
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_max
    }

    /// `int_a^b |f|` as integrated for the grid.
    pub fn l1_norm(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        if !(x >= self.a && x <= self.b) {
            return Err(Error::OutOfDomain { x, a: self.a, b: self.b });
        }
        let c = self.nodes.partition_point(|&g| g <= x) - 1;
        if self.nodes[c] == x {
            Ok(self.node_max[c])
        } else {
            Ok(self.cell_max[c])
        }
    }
}

/// For each left endpoint `p`, scan right endpoints `q` downward keeping
/// the best average over `[g_p, g_q']` with `q' >= q`: that interval
/// contains node `q` and cell `q - 1`, and node `p` itself.
fn sweep(nodes: &[f64], prefix: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = nodes.len() - 1;
    let zero = || (vec![0.0f64; m + 1], vec![0.0f64; m]);
    (0..m)
        .into_par_iter()
        .fold(zero, |(mut node, mut cell), p| {
            let mut best = 0.0f64;
            for q in (p + 1..=m).rev() {
                let avg = (prefix[q] - prefix[p]) / (nodes[q] - nodes[p]);
                best = best.max(avg);
                node[q] = node[q].max(best);
                cell[q - 1] = cell[q - 1].max(best);
            }
            node[p] = node[p].max(best);
            (node, cell)
        })
        .reduce(zero, |(mut n1, mut c1), (n2, c2)| {
            n1.iter_mut().zip(&n2).for_each(|(x, y)| *x = x.max(*y));
            c1.iter_mut().zip(&c2).for_each(|(x, y)| *x = x.max(*y));
            (n1, c1)
        })
}

/// `M(f, x)` from a fresh grid of `grid_size` cells on `[a, b]`.
pub fn maximal_function(f: &TestFunction, a: f64, b: f64, x: f64, grid_size: usize) -> Result<f64> {
    MaximalGrid::new(f, a, b, grid_size, 1e-12)?.value(x)
}
