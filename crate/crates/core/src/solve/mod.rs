//! Emptiness, point containment and ray tracing as convex feasibility
//! problems over the coefficient ball product.

mod feasibility;
mod projection;
mod ray;
pub mod reference;

pub use feasibility::{
    contains_point, is_empty, FeasibilityResult, SolverConfig, Verdict, TOL_ENV,
};
pub use projection::{project_ball_product, project_pball};
pub use ray::{ray_trace, ray_trace_to, RAY_TOL};
