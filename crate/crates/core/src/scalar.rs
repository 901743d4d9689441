//! Scalar abstraction shared by every set operation.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the set algebra is generic over (`f32` or `f64`).
///
/// Tolerances in this crate are written as `f64` literals; [`Scalar::tol`]
/// widens them to a small multiple of machine epsilon when the literal is
/// below what the type can resolve.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// `base`, or 16 machine epsilons if the type cannot resolve `base`.
    fn tol(base: f64) -> Self {
        let eps = Self::default_epsilon() * Self::lit(16.0);
        let b = Self::lit(base);
        if b > eps {
            b
        } else {
            eps
        }
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
