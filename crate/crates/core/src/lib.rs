//! Orthogonal projection onto spline spaces of arbitrary order and knots,
//! with numerical checks of the quantities that control it: decay of the
//! inverse Gram matrix, Dirichlet-kernel bounds, maximal-function domination
//! and convergence under mesh refinement.

pub mod analysis;
pub mod bspline;
pub mod error;
pub mod function;
pub mod gram;
pub mod knots;
pub mod projection;
pub mod quadrature;

pub use bspline::{eval_basis_block, eval_spline, greville, l1_factors, BasisValueBlock};
pub use error::{Error, Result};
pub use function::{Smoothness, TestFunction};
pub use gram::{scaled_norms, solve_banded, GramMatrix, InverseGram, ScaledGram, ScaledNorms};
pub use knots::{Family, KnotSequence, Ladder, PartitionSpec};
pub use projection::{moments, DirichletKernel, Moments, Projection, Projector};
