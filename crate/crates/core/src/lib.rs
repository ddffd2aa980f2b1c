//! Proximal ADMM for linearly constrained separable convex programs, its
//! convergence diagnostics, and a three-block variant used as an iterative
//! regularization method for linear inverse problems.
//!
//! All numerics are generic over [`Scalar`] (`f64` or `f32`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod gravity;
pub mod illposed;
pub mod io;
pub mod metric;
pub mod operator;
pub mod padmm;
pub mod prox;
pub mod reference;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type Map = operator::LinearMap<f64>;
pub type Psd = operator::PsdMap<f64>;
pub type Prox = prox::ProxFunction<f64>;
pub type Problem = padmm::SeparableProblem<f64>;
pub type State = padmm::PadmmState<f64>;
pub type Trace = padmm::IterationTrace<f64>;
pub type InverseSpec = illposed::InverseProblemSpec<f64>;
pub type RegularizedState = illposed::RegState<f64>;
