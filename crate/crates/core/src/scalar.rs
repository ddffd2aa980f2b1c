//! Scalar abstraction shared by every solver in the crate.
//!
//! All numerical code is written against [`Scalar`], which is satisfied by
//! `f32` and `f64`. Tolerances that depend on the working precision are
//! exposed as trait methods so that the same code path can certify
//! subproblem solutions in either precision.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the working precision.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Residual threshold used when certifying subproblem optimality.
    fn certify_tol() -> Self;

    fn infinity() -> Self;

    fn is_finite_value(self) -> bool;
}

impl Scalar for f64 {
    fn certify_tol() -> Self {
        1e-7
    }

    fn infinity() -> Self {
        f64::INFINITY
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn certify_tol() -> Self {
        1e-3
    }

    fn infinity() -> Self {
        f32::INFINITY
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}
