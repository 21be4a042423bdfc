//! Generalized effective Hamiltonians for the non-coercive Hamiltonian
//! `H(x, p) = σ(x) m(|p|)` on the flat torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the problem data and the coercive approximants `M_n`;
//! * [`scheme`] is the monotone Lax–Friedrichs discretization shared by the solvers;
//! * [`cell`] solves the approximate cell problems by vanishing discount;
//! * [`effective`] drives the `n`-ladder, classifies solvability and builds tables;
//! * [`onedim`] is the exact one-dimensional theory, used as an independent oracle;
//! * [`homog`] evolves the oscillatory and effective equations and measures
//!   homogenization and its failure.

// NaN must fail validation, hence `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cell;
pub mod descriptor;
pub mod effective;
pub mod error;
pub mod homog;
pub mod model;
pub(crate) mod numeric;
pub mod onedim;
pub mod scheme;

pub use error::{Error, Result};
pub use model::{Approximant, Hamiltonian, KineticLaw, KineticModel, Regime, SupplyField};
