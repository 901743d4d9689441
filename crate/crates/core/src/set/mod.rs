//! Ellipsotope values, their invariants, and constructors from classical sets.

mod ellipsotope;
mod geometry;
mod index_set;
mod norm;
mod violation;

pub use ellipsotope::{ball_product_membership, Ellipsotope, Parts};
pub use geometry::{EllipsoidParams, Halfspace, Hyperplane};
pub use index_set::IndexSet;
pub use norm::PNorm;
pub use violation::Violation;
