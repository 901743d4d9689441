use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::set::{Ellipsotope, IndexSet, PNorm};
use crate::solve::projection::project_ball_product_in_place;

/// Environment variable that overrides [`SolverConfig::tol_feas`].
pub const TOL_ENV: &str = "ETOPE_SOLVER_TOL";

/// How often the duality-gap lower bound is evaluated.
const BOUND_EVERY: usize = 10;

/// Gradient-mapping norm below which a run with residual above tolerance is
/// declared EMPTY.
const STATIONARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Threshold on the squared residual `‖Aβ - b‖²`.
    pub tol_feas: f64,
    pub max_iters: usize,
    /// Reset momentum whenever the objective would increase.
    pub restart: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_feas: 1e-10,
            max_iters: 100_000,
            restart: true,
        }
    }
}

impl SolverConfig {
    /// Defaults, with `tol_feas` taken from `ETOPE_SOLVER_TOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(raw) = std::env::var(TOL_ENV) {
            cfg.tol_feas = raw.trim().parse().map_err(|_| {
                EtopeError::Precondition(format!("{TOL_ENV}={raw:?} is not a number"))
            })?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_feas = tol;
        self
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tol_feas > 0.0 && self.tol_feas.is_finite()) {
            return Err(EtopeError::Precondition(format!(
                "tol_feas must be positive, got {}",
                self.tol_feas
            )));
        }
        if self.max_iters == 0 {
            return Err(EtopeError::Precondition("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Nonempty,
    Empty,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Nonempty => "NONEMPTY",
            Verdict::Empty => "EMPTY",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult<T: Scalar> {
    pub beta: DVector<T>,
    /// Squared residual `‖Aβ - b‖²` at `beta`.
    pub residual: T,
    pub iterations: usize,
    pub verdict: Verdict,
}

impl<T: Scalar> FeasibilityResult<T> {
    /// `Some(true)` for an empty set, `None` when inconclusive.
    pub fn empty(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Nonempty => Some(false),
            Verdict::Empty => Some(true),
            Verdict::Inconclusive => None,
        }
    }

    /// Point-containment reading of the same verdict.
    pub fn contained(&self) -> Option<bool> {
        self.empty().map(|e| !e)
    }
}

/// `min ‖Aβ - b‖²` over a ball product, with the matrix-only data cached so
/// repeated solves with different right-hand sides stay cheap.
pub(crate) struct Program<'a, T: Scalar> {
    a: DMatrix<T>,
    at: DMatrix<T>,
    pinv: Option<DMatrix<T>>,
    lipschitz: T,
    blocks: &'a IndexSet,
    p: PNorm<T>,
    dual: PNorm<T>,
    /// Euclidean diameter of the ball product.
    diameter: T,
}

/// Solver stopping rules for one run.
pub(crate) struct Stop<T> {
    /// NONEMPTY once the residual drops to this.
    pub accept: T,
    /// EMPTY once the certified lower bound exceeds this.
    pub reject: T,
    pub max_iters: usize,
    pub restart: bool,
    /// Also declare EMPTY once the gradient mapping falls below this. Only
    /// meaningful when `reject` is well above rounding level.
    pub stationary: Option<T>,
}

impl<'a, T: Scalar> Program<'a, T> {
    pub fn new(a: DMatrix<T>, blocks: &'a IndexSet, p: PNorm<T>) -> Self {
        let s = linalg::spectral_norm(&a);
        let at = a.transpose();
        Self {
            lipschitz: T::lit(2.0) * s * s,
            at,
            a,
            pinv: None,
            diameter: ball_product_diameter(blocks, p),
            blocks,
            p,
            dual: p.dual(),
        }
    }

    pub fn with_pinv(mut self) -> Self {
        self.pinv = Some(linalg::pinv(&self.a));
        self
    }

    fn objective(&self, beta: &DVector<T>, b: &DVector<T>) -> T {
        (&self.a * beta - b).norm_squared()
    }

    fn gradient(&self, beta: &DVector<T>, b: &DVector<T>) -> DVector<T> {
        &self.at * (&self.a * beta - b) * T::lit(2.0)
    }

    /// `max_{β ∈ ball product} ⟨Aᵀy, β⟩`, the support of `{Aβ}` in direction `y`.
    pub fn support(&self, y: &DVector<T>) -> T {
        let aty = &self.at * y;
        let g = aty.as_slice();
        self.blocks
            .blocks()
            .iter()
            .fold(T::zero(), |acc, blk| acc + self.dual.norm_of(g, blk))
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.a
    }

    /// `f(β) + min_{z ∈ ball product} ⟨∇f(β), z - β⟩`, a lower bound on the optimum.
    fn lower_bound(&self, f: T, beta: &DVector<T>, grad: &DVector<T>) -> T {
        let g = grad.as_slice();
        let support = self
            .blocks
            .blocks()
            .iter()
            .fold(T::zero(), |acc, blk| acc + self.dual.norm_of(g, blk));
        f - grad.dot(beta) - support
    }

    fn project(&self, beta: &mut DVector<T>) {
        project_ball_product_in_place(beta, self.blocks, self.p);
    }

    /// Accelerated projected gradient with function-value restarts.
    pub fn run(&self, b: &DVector<T>, start: DVector<T>, stop: &Stop<T>) -> FeasibilityResult<T> {
        let mut x = start;
        self.project(&mut x);
        let mut fx = self.objective(&x, b);
        let done = |beta: DVector<T>, f: T, it: usize, v: Verdict| FeasibilityResult {
            beta,
            residual: f,
            iterations: it,
            verdict: v,
        };
        if fx <= stop.accept {
            return done(x, fx, 0, Verdict::Nonempty);
        }
        if self.lipschitz <= T::zero() {
            // A = 0: the residual is ‖b‖² for every β
            return done(x, fx, 0, Verdict::Empty);
        }
        let step = T::one() / self.lipschitz;
        let mut y = x.clone();
        let mut t = T::one();
        for it in 1..=stop.max_iters {
            let gy = self.gradient(&y, b);
            let mut xn = &y - gy * step;
            self.project(&mut xn);
            let fxn = self.objective(&xn, b);
            if stop.restart && fxn > fx {
                y.copy_from(&x);
                t = T::one();
            } else {
                let tn = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5);
                let momentum = (t - T::one()) / tn;
                y = &xn + (&xn - &x) * momentum;
                x = xn;
                fx = fxn;
                t = tn;
                if fx <= stop.accept {
                    return done(x, fx, it, Verdict::Nonempty);
                }
            }
            if it % BOUND_EVERY == 0 || it == stop.max_iters {
                let g = self.gradient(&x, b);
                if self.lower_bound(fx, &x, &g) > stop.reject {
                    return done(x, fx, it, Verdict::Empty);
                }
                if let Some(limit) = stop.stationary {
                    let mut probe = &x - &g * step;
                    self.project(&mut probe);
                    let mapping = (&x - &probe).norm() * self.lipschitz;
                    // f* >= f(probe) - ‖mapping‖·diam keeps the shortcut sound
                    // when the residual is near the threshold.
                    let floor = self.objective(&probe, b) - mapping * self.diameter;
                    if mapping <= limit && floor > stop.reject {
                        return done(x, fx, it, Verdict::Empty);
                    }
                }
            }
        }
        done(x, fx, stop.max_iters, Verdict::Inconclusive)
    }
}

/// Twice the largest Euclidean norm over the unit ball product.
fn ball_product_diameter<T: Scalar>(blocks: &IndexSet, p: PNorm<T>) -> T {
    let sq = blocks.blocks().iter().fold(T::zero(), |acc, blk| {
        let d = T::lit(blk.len() as f64);
        let r2 = match p.value() {
            None => d,
            Some(q) if q > T::lit(2.0) => d.powf(T::one() - T::lit(2.0) / q),
            Some(_) => T::one(),
        };
        acc + r2
    });
    T::lit(2.0) * sq.sqrt()
}

fn default_stop<T: Scalar>(cfg: &SolverConfig) -> Stop<T> {
    let tol = T::tol(cfg.tol_feas);
    Stop {
        accept: tol,
        reject: tol,
        max_iters: cfg.max_iters,
        restart: cfg.restart,
        stationary: Some(T::lit(STATIONARY_TOL)),
    }
}

/// Feasibility of `Aβ = b` over the ball product of `blocks`.
pub(crate) fn solve_system<T: Scalar>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    blocks: &IndexSet,
    p: PNorm<T>,
    cfg: &SolverConfig,
) -> FeasibilityResult<T> {
    let m = a.ncols();
    if a.nrows() == 0 {
        return FeasibilityResult {
            beta: DVector::zeros(m),
            residual: T::zero(),
            iterations: 0,
            verdict: Verdict::Nonempty,
        };
    }
    let stop = default_stop(cfg);
    let prog = Program::new(a.clone(), blocks, p).with_pinv();
    let start = prog.pinv.as_ref().expect("pinv cached") * b;
    let ls_residual = (a * &start - b).norm_squared();
    if ls_residual > stop.accept {
        // Aβ = b has no solution at all
        return FeasibilityResult {
            beta: start,
            residual: ls_residual,
            iterations: 0,
            verdict: Verdict::Empty,
        };
    }
    prog.run(b, start, &stop)
}

/// Decides whether `e` is empty by minimising `‖Aβ - b‖²` over its ball product.
pub fn is_empty<T: Scalar>(e: &Ellipsotope<T>, cfg: &SolverConfig) -> FeasibilityResult<T> {
    solve_system(e.constraints(), e.rhs(), e.index_set(), e.p(), cfg)
}

/// Whether `x ∈ e`, via feasibility of `[A; G]β = [b; x - c]`.
pub fn contains_point<T: Scalar>(
    e: &Ellipsotope<T>,
    x: &DVector<T>,
    cfg: &SolverConfig,
) -> Result<FeasibilityResult<T>> {
    if x.len() != e.dim() {
        return Err(EtopeError::Dimension(format!(
            "point has {} entries, set lives in R^{}",
            x.len(),
            e.dim()
        )));
    }
    let (a, b) = stacked_system(e, x);
    Ok(solve_system(&a, &b, e.index_set(), e.p(), cfg))
}

pub(crate) fn stacked_system<T: Scalar>(
    e: &Ellipsotope<T>,
    x: &DVector<T>,
) -> (DMatrix<T>, DVector<T>) {
    let a = linalg::vstack(&[e.constraints(), e.generators()]);
    let b = linalg::vcat(&[e.rhs(), &(x - e.center())]);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::ball_product_membership;
    use nalgebra::{dmatrix, dvector};

    fn unit_square_with(a: DMatrix<f64>, b: DVector<f64>) -> Ellipsotope<f64> {
        Ellipsotope::from_constrained_zonotope(dvector![0.0, 0.0], DMatrix::identity(2, 2), a, b)
            .unwrap()
    }

    #[test]
    fn basic_set_is_nonempty_at_zero() {
        let e = Ellipsotope::basic(PNorm::two(), dvector![1.0, 2.0], DMatrix::identity(2, 2)).unwrap();
        let r = is_empty(&e, &SolverConfig::default());
        assert_eq!(r.verdict, Verdict::Nonempty);
        assert_eq!(r.beta, dvector![0.0, 0.0]);
    }

    #[test]
    fn square_slices() {
        let cfg = SolverConfig::default();
        let r = is_empty(&unit_square_with(dmatrix![1.0, 0.0], dvector![0.5]), &cfg);
        assert_eq!(r.verdict, Verdict::Nonempty);
        assert!((r.beta[0] - 0.5).abs() < 1e-5);
        let r = is_empty(&unit_square_with(dmatrix![1.0, 0.0], dvector![3.0]), &cfg);
        assert_eq!(r.verdict, Verdict::Empty);
        assert!(r.residual > 1.0);
    }

    #[test]
    fn inconsistent_linear_system_is_empty_without_iterating() {
        let e = unit_square_with(dmatrix![1.0, 0.0; 1.0, 0.0], dvector![0.1, 0.2]);
        let r = is_empty(&e, &SolverConfig::default());
        assert_eq!(r.verdict, Verdict::Empty);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn disk_membership() {
        let e = Ellipsotope::basic(PNorm::two(), dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(contains_point(&e, &dvector![0.0, 0.0], &cfg).unwrap().contained(), Some(true));
        assert_eq!(contains_point(&e, &dvector![1.0, 0.0], &cfg).unwrap().contained(), Some(true));
        assert_eq!(
            contains_point(&e, &dvector![1.0 + 1e-3, 0.0], &cfg).unwrap().contained(),
            Some(false)
        );
        assert!(contains_point(&e, &dvector![1.0], &cfg).is_err());
    }

    #[test]
    fn zonotope_vertex_membership() {
        let z = Ellipsotope::from_zonotope(dvector![0.0, 0.0], dmatrix![1.0, 1.0; 0.0, 1.0]).unwrap();
        let cfg = SolverConfig::default();
        let r = contains_point(&z, &dvector![2.0, 1.0], &cfg).unwrap();
        assert_eq!(r.contained(), Some(true));
        assert!((r.beta - dvector![1.0, 1.0]).norm() < 1e-4);
        assert_eq!(contains_point(&z, &dvector![2.0, 1.5], &cfg).unwrap().contained(), Some(false));
    }

    #[test]
    fn nonempty_witness_is_sound() {
        let e = Ellipsotope::new(
            PNorm::Finite(3.0),
            dvector![0.0, 0.0],
            DMatrix::identity(3, 3).rows(0, 2).into_owned(),
            dmatrix![1.0, 1.0, 1.0],
            dvector![1.2],
            IndexSet::new(vec![vec![0, 1], vec![2]], 3).unwrap(),
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let r = is_empty(&e, &cfg);
        assert_eq!(r.verdict, Verdict::Nonempty);
        let (ok, _) = ball_product_membership(&r.beta, e.index_set(), e.p());
        assert!(ok);
        let res = (e.constraints() * &r.beta - e.rhs()).norm();
        assert!(res <= cfg.tol_feas.sqrt() * (1.0 + e.rhs().norm()));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().with_tol(0.0).check().is_err());
        assert!(SolverConfig::default().with_max_iters(0).check().is_err());
    }
}
