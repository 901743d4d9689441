//! Order reduction: exact rewrites that drop redundant generators and
//! outer approximations that trade tightness for size.

mod components;
mod ellipsoid;
mod generators;

pub use components::{
    heuristic_volume, identify_components, reduce_2etope, select_pair_heuristic, Component,
    ComponentDecomposition,
};
pub use ellipsoid::{
    constrained_to_basic, mvoe_pair, reduce_basic_2, to_ellipsoid, zonotope_mvoe, MvoeResult,
    MVOE_MAX_ITERS, MVOE_TOL,
};
pub use generators::{
    dualize, eliminate_constraint, lift_then_reduce, pop_generator, reduce_pop_box, PopEnclosure,
};
