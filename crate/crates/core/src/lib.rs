//! Numerical periodic homogenization of monotone elliptic operators with
//! Musielak–Orlicz growth.
//!
//! The crate solves the fine-scale Dirichlet problem
//! `div A(x/ε, ∇u) = div F`, the periodic cell problem defining the
//! homogenized operator `Â(ξ) = ∫_Y A(y, ξ + ∇w_ξ) dy`, and provides the
//! diagnostics (two-scale unfolding, conjugate N-functions, ε-sweeps) used to
//! check the homogenization limit numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cell;
pub mod error;
pub mod fem;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod msolve;
pub mod nfunc;
pub mod opcat;
pub mod sampling;
pub mod unfold;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
