use nalgebra::DVector;

use crate::error::{EtopeError, Result};
use crate::scalar::Scalar;
use crate::set::Ellipsotope;
use crate::solve::feasibility::{contains_point, stacked_system, Program, SolverConfig, Stop, Verdict};

/// Absolute bisection tolerance on the ray length.
pub const RAY_TOL: f64 = 1e-8;

/// Floor of the squared-residual threshold used while bracketing the
/// boundary. The default feasibility tolerance would blur the boundary by
/// about its square root.
const TIGHT: f64 = 1e-20;

/// Largest `λ >= 0` with `x + λg ∈ e`, to within [`RAY_TOL`].
///
/// `x` must be contained in `e`. Points the inner solver cannot classify
/// within its budget count as outside, so the result errs toward the inside.
///
/// The bracket shrinks by bisection and by separating-hyperplane cuts: for
/// any residual `y = Mβ − r(λ)` of the stacked system `Mβ = r(λ)`, every
/// member satisfies `⟨y, r⟩ ≥ −σ(y)` where `σ` is the support function of
/// `{Mβ}`, which bounds `λ` from above. After a cut the next query sits just
/// below the new upper end, which settles smooth boundaries in a few solves.
pub fn ray_trace<T: Scalar>(
    e: &Ellipsotope<T>,
    x: &DVector<T>,
    g: &DVector<T>,
    cfg: &SolverConfig,
) -> Result<T> {
    ray_trace_to(e, x, g, cfg, RAY_TOL)
}

/// [`ray_trace`] with a caller-chosen absolute tolerance on `λ`.
pub fn ray_trace_to<T: Scalar>(
    e: &Ellipsotope<T>,
    x: &DVector<T>,
    g: &DVector<T>,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<T> {
    if !(tol > 0.0) {
        return Err(EtopeError::Precondition("ray tolerance must be positive".into()));
    }
    let start = contains_point(e, x, cfg)?;
    if start.contained() != Some(true) {
        return Err(EtopeError::NotContained(format!(
            "ray origin is not in the set ({})",
            start.verdict
        )));
    }
    let gn = g.norm();
    if !(gn > T::zero()) {
        return Err(EtopeError::Precondition("ray direction must be nonzero".into()));
    }
    let spread = e
        .generators()
        .column_iter()
        .fold(T::zero(), |acc, col| acc + col.norm());
    let mut hi = ((e.center() - x).norm() + spread) / gn + T::one();
    let mut lo = T::zero();

    let (a, b0) = stacked_system(e, x);
    let n = e.dim();
    let k = e.num_constraints();
    let prog = Program::new(a, e.index_set(), e.p());
    // Probes only need to resolve the boundary to a fraction of `tol`.
    let blur = (T::lit(0.1 * tol) * gn).powi(2).max(T::tol(TIGHT));
    let stop = Stop {
        accept: blur,
        reject: blur,
        max_iters: cfg.max_iters,
        restart: cfg.restart,
        // at this threshold a small gradient mapping does not imply emptiness
        stationary: None,
    };
    let mut warm = start.beta;
    let mut b = b0.clone();
    let tol = T::tol(tol);
    let half = T::lit(0.5);
    let mut optimistic = false;
    while hi - lo > tol {
        let q = if optimistic { hi - tol * half } else { (lo + hi) * half };
        if q <= lo || q >= hi {
            break;
        }
        b.rows_mut(k, n).copy_from(&(b0.rows(k, n) + g * q));
        let r = prog.run(&b, warm.clone(), &stop);
        let was_optimistic = optimistic;
        optimistic = false;
        if r.verdict == Verdict::Nonempty {
            lo = q;
            warm = r.beta;
            continue;
        }
        hi = q;
        let y = prog.matrix() * &r.beta - &b;
        let slope = -y.rows(k, n).dot(g);
        if slope > T::zero() {
            let cut = (y.dot(&b0) + prog.support(&y)) / slope;
            if cut < hi {
                hi = cut.max(lo);
                optimistic = !was_optimistic;
            }
        }
    }
    Ok(lo)
}
