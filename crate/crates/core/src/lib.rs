//! Multitype branching processes in random environments.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: offspring laws, pgf evaluation, expectation matrices,
//!   environment distributions and the JSON model file codec.
//! * [`matcore`]: non-negative matrices, their column/row/sum reductions and
//!   the search for a word whose product is strictly positive.
//! * [`lyapunov`]: log-space products and batch-means estimates of the
//!   Lyapunov, column-sum and row-sum exponents.
//! * [`extinction`]: extinction vectors by backward pgf composition and
//!   direct population simulation.
//! * [`proofkit`]: the auxiliary maps used in the survival argument
//!   (`g`, `h`, `psi`, `phi`) and an oracle suite that checks their
//!   inequalities pointwise.
//! * [`classify`]: hypothesis checks and the survival/extinction verdict.
//! * [`carpet`]: the random Sierpinski carpet and its 45-degree projection.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod carpet;
pub mod classify;
mod error;
pub mod extinction;
pub mod lyapunov;
pub mod matcore;
pub mod model;
pub mod proofkit;
pub mod rng;

pub use error::{Error, Result};
pub use lyapunov::{ExponentKind, LyapunovEstimate};
pub use matcore::{NonNegMatrix, PositivityPattern};
pub use model::{
    CountVector, EnvironmentDistribution, EnvironmentLetter, ModelSpec, OffspringLaw, SValue,
};
