use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::set::{EllipsoidParams, Ellipsotope, PNorm};

/// Stopping tolerance on the MVOE fixed-point residual.
pub const MVOE_TOL: f64 = 1e-10;
/// Iteration cap for the MVOE fixed point.
pub const MVOE_MAX_ITERS: usize = 10_000;

fn require_two<T: Scalar>(e: &Ellipsotope<T>, what: &str) -> Result<()> {
    if !e.p().is_two() {
        return Err(EtopeError::Precondition(format!("{what} needs p = 2, got p = {}", e.p())));
    }
    Ok(())
}

fn require_basic_two<T: Scalar>(e: &Ellipsotope<T>, what: &str) -> Result<()> {
    require_two(e, what)?;
    if e.num_constraints() > 0 || e.index_set().len() > 1 {
        return Err(EtopeError::Precondition(format!(
            "{what} needs a basic ellipsotope (one block, no constraints); got {} blocks and {} constraints",
            e.index_set().len(),
            e.num_constraints()
        )));
    }
    Ok(())
}

/// Shape matrix `Q = (G†)ᵀG†` of a basic 2-ellipsotope with full-row-rank `G`.
pub fn to_ellipsoid<T: Scalar>(e: &Ellipsotope<T>) -> Result<EllipsoidParams<T>> {
    require_basic_two(e, "to_ellipsoid")?;
    let g = e.generators();
    let r = linalg::rank(g);
    if r < e.dim() || e.dim() == 0 {
        return Err(EtopeError::RankDeficient(format!(
            "generator matrix has rank {r} in R^{}",
            e.dim()
        )));
    }
    let gp = linalg::pinv(g);
    let q = gp.transpose() * gp;
    EllipsoidParams::new(e.center().clone(), (&q + q.transpose()) * T::lit(0.5))
}

/// Rewrites a one-block constrained 2-ellipsotope as a basic one,
/// `⟨c + Gt, ρ G N⟩` with `t = A†b`, `N` a kernel basis of `A` and
/// `ρ = √(1 - ‖t‖²)`.
pub fn constrained_to_basic<T: Scalar>(e: &Ellipsotope<T>) -> Result<Ellipsotope<T>> {
    require_two(e, "constrained_to_basic")?;
    if e.index_set().len() > 1 {
        return Err(EtopeError::Precondition(format!(
            "constrained_to_basic needs a single index block, got {}",
            e.index_set().len()
        )));
    }
    if e.num_constraints() == 0 {
        return Ok(e.clone());
    }
    let a = e.constraints();
    let b = e.rhs();
    let t = linalg::pinv(a) * b;
    let mismatch = (a * &t - b).norm();
    if mismatch > T::tol(1e-10) * (T::one() + b.norm()) {
        return Err(EtopeError::EmptySet(format!(
            "constraints are inconsistent (residual {mismatch})"
        )));
    }
    let tn = t.norm();
    let slack = T::tol(1e-10);
    if tn > T::one() + slack {
        return Err(EtopeError::EmptySet(format!(
            "minimum-norm coefficient has norm {tn} > 1"
        )));
    }
    let center = e.center() + e.generators() * &t;
    if (tn - T::one()).abs() <= slack {
        return Ok(Ellipsotope::point(PNorm::two(), center));
    }
    let kernel = linalg::null_space(a);
    if kernel.ncols() == 0 {
        return Ok(Ellipsotope::point(PNorm::two(), center));
    }
    let rho = (T::one() - tn * tn).sqrt();
    let g = e.generators() * kernel * rho;
    Ellipsotope::basic(PNorm::two(), center, g)
}

/// Exact reduction of a basic 2-ellipsotope to `n` generators,
/// `G̃ = (√((G†)ᵀG†))⁻¹`.
pub fn reduce_basic_2<T: Scalar>(e: &Ellipsotope<T>) -> Result<Ellipsotope<T>> {
    let q = to_ellipsoid(e)?;
    Ellipsotope::from_ellipsoid(&q)
}

/// Outer ellipsoid of `E₁ ⊕ E₂` from the fixed point `ζ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvoeResult<T: Scalar> {
    pub center: DVector<T>,
    pub q_sum: DMatrix<T>,
    pub zeta: T,
    pub iterations: usize,
    /// `Σ (1 - ζ²λᵢ)/(1 + ζλᵢ)` at the returned `ζ`.
    pub residual: T,
}

impl<T: Scalar> MvoeResult<T> {
    pub fn ellipsoid(&self) -> Result<EllipsoidParams<T>> {
        EllipsoidParams::new(self.center.clone(), self.q_sum.clone())
    }
}

/// Eigenvalues of `Q₁Q₂⁻¹`, computed on the similar symmetric matrix `L⁻¹Q₁L⁻ᵀ`.
fn relative_eigenvalues<T: Scalar>(q1: &DMatrix<T>, q2: &DMatrix<T>) -> Result<DVector<T>> {
    let chol = Cholesky::new(q2.clone())
        .ok_or_else(|| EtopeError::NotPositiveDefinite("second shape matrix".into()))?;
    let l = chol.l();
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| EtopeError::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let s = &li * q1 * li.transpose();
    let s = (&s + s.transpose()) * T::lit(0.5);
    Ok(SymmetricEigen::new(s).eigenvalues)
}

fn mvoe_residual<T: Scalar>(zeta: T, lambda: &DVector<T>) -> T {
    lambda
        .iter()
        .fold(T::zero(), |a, &l| a + (T::one() - zeta * zeta * l) / (T::one() + zeta * l))
}

/// Minimum-volume outer ellipsoid of the sum of two ellipsoids by the
/// fixed-point iteration on `ζ`, started at `ζ₀ = 0`.
pub fn mvoe_pair<T: Scalar>(e1: &EllipsoidParams<T>, e2: &EllipsoidParams<T>) -> Result<MvoeResult<T>> {
    if e1.dim() != e2.dim() {
        return Err(EtopeError::Dimension(format!(
            "ellipsoids live in R^{} and R^{}",
            e1.dim(),
            e2.dim()
        )));
    }
    let q1 = e1.shape();
    let q2 = e2.shape();
    let q1i = linalg::inv_pd(q1)?;
    let q2i = linalg::inv_pd(q2)?;
    let lambda = relative_eigenvalues(q1, q2)?;
    let tol = T::tol(MVOE_TOL);
    let mut zeta = T::zero();
    let mut residual = mvoe_residual(zeta, &lambda);
    let mut iterations = 0;
    while residual.abs() > tol {
        if iterations >= MVOE_MAX_ITERS {
            return Err(EtopeError::NoConvergence(format!(
                "MVOE fixed point: residual {residual} after {iterations} iterations"
            )));
        }
        let (num, den) = lambda.iter().fold((T::zero(), T::zero()), |(n, d), &l| {
            let w = T::one() / (T::one() + zeta * l);
            (n + w, d + l * w)
        });
        zeta = (num / den).sqrt();
        residual = mvoe_residual(zeta, &lambda);
        iterations += 1;
    }
    let sum = q1i * (T::one() + T::one() / zeta) + q2i * (T::one() + zeta);
    let q_sum = linalg::inv_pd(&sum)?;
    Ok(MvoeResult {
        center: e1.center() + e2.center(),
        q_sum: (&q_sum + q_sum.transpose()) * T::lit(0.5),
        zeta,
        iterations,
        residual,
    })
}

/// Ellipsoid enclosing the zonotope `Z(c, G)`: with `E₀ = m GGᵀ`,
/// `G₀ = E₀^{-1/2} G` and the row sums `λᵢ = Σⱼ |(G₀ᵀG₀)ᵢⱼ|`, the shape
/// matrix is `(r E₀)⁻¹` for `r = Σ λᵢ`.
pub fn zonotope_mvoe<T: Scalar>(c: &DVector<T>, g: &DMatrix<T>) -> Result<EllipsoidParams<T>> {
    if g.nrows() != c.len() {
        return Err(EtopeError::Dimension(format!(
            "center has {} entries, generators {} rows",
            c.len(),
            g.nrows()
        )));
    }
    let rank = linalg::rank(g);
    if rank < g.nrows() || g.nrows() == 0 {
        return Err(EtopeError::RankDeficient(format!(
            "zonotope generators have rank {rank} in R^{}",
            g.nrows()
        )));
    }
    let m = T::from_usize_lossy(g.ncols());
    let e0 = g * g.transpose() * m;
    let g0 = linalg::inv_sqrtm_pd(&e0)? * g;
    let gram = g0.transpose() * &g0;
    let r = gram.iter().fold(T::zero(), |a, x| a + x.abs());
    let shape = linalg::inv_pd(&(e0 * r))?;
    EllipsoidParams::new(c.clone(), (&shape + shape.transpose()) * T::lit(0.5))
}
