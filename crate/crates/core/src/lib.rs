//! Ellipsotopes: sets of the form `{c + Gβ : ‖β[J]‖_p ≤ 1 ∀J, Aβ = b}`.
//!
//! They contain zonotopes, constrained zonotopes, ellipsoids and capsules,
//! and are closed under affine maps, Minkowski sums, Cartesian products and
//! intersections. The crate provides that algebra ([`ops`]), convex
//! emptiness and containment checks ([`solve`]), order reduction
//! ([`reduce`]), boundary sampling ([`viz`]), a JSON exchange format
//! ([`io`]) and end-to-end simulations ([`apps`]).
//!
//! Everything except [`apps`] is generic over the [`Scalar`] type; the
//! aliases below fix it to `f64` (or `f32`).

pub mod apps;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ops;
pub mod reduce;
pub mod scalar;
pub mod set;
pub mod solve;
pub mod viz;

pub use error::{EtopeError, Result};
pub use ops::{AffineMap, CpzExport};
pub use scalar::Scalar;
pub use solve::{FeasibilityResult, SolverConfig, Verdict};
pub use set::{
    ball_product_membership, EllipsoidParams, Ellipsotope, Halfspace, Hyperplane, IndexSet,
    PNorm, Parts, Violation,
};

/// Double-precision ellipsotope, the type the CLI and simulations use.
pub type Etope = Ellipsotope<f64>;
pub type Etope32 = Ellipsotope<f32>;
pub type Ellipsoid = EllipsoidParams<f64>;
pub type Ellipsoid32 = EllipsoidParams<f32>;
