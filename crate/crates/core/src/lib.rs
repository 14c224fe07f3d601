//! Minimax exponential-sum approximations and bounds of the Gaussian Q-function
//! and of polynomials in Q, with verification tools, quadrature baselines, and
//! closed-form error probabilities over Nakagami-m fading.

// `!(v > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod baselines;
pub mod coeffile;
pub mod error;
pub mod expsum;
pub mod fading;
pub mod minimax;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use expsum::{ErrorMeasure, ExpSum, TargetPoly};
pub use minimax::{Diagnostics, MinimaxSolution, SolveSpec, VariantKind};
pub use special::Probability;
