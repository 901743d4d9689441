use nalgebra::{DMatrix, DVector};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::set::{EllipsoidParams, IndexSet, PNorm, Violation};

/// Unvalidated description of an ellipsotope, as read from disk or assembled by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct Parts<T: Scalar> {
    pub p: PNorm<T>,
    pub center: DVector<T>,
    pub generators: DMatrix<T>,
    pub constraints: DMatrix<T>,
    pub rhs: DVector<T>,
    pub blocks: Vec<Vec<usize>>,
}

impl<T: Scalar> Parts<T> {
    /// Every invariant violation; empty when the description is a valid ellipsotope.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let PNorm::Finite(p) = self.p {
            if !p.is_finite() || p < T::one() + T::lit(1e-12) {
                out.push(Violation::InvalidNorm { p: p.to_string() });
            }
        }
        let n = self.center.len();
        let m = self.generators.ncols();
        if self.generators.nrows() != n {
            out.push(Violation::CenterGeneratorMismatch {
                center: n,
                generator_rows: self.generators.nrows(),
            });
        }
        if self.constraints.ncols() != m {
            out.push(Violation::GeneratorConstraintMismatch {
                generator_cols: m,
                constraint_cols: self.constraints.ncols(),
            });
        }
        if self.constraints.nrows() != self.rhs.len() {
            out.push(Violation::ConstraintDimensionMismatch {
                constraint_rows: self.constraints.nrows(),
                rhs_len: self.rhs.len(),
            });
        }
        out.extend(IndexSet::check(&self.blocks, m));
        let finite = |s: &[T]| s.iter().all(|x| x.is_finite());
        if !finite(self.center.as_slice()) {
            out.push(Violation::NonFinite { field: "center" });
        }
        if !finite(self.generators.as_slice()) {
            out.push(Violation::NonFinite { field: "generators" });
        }
        if !finite(self.constraints.as_slice()) || !finite(self.rhs.as_slice()) {
            out.push(Violation::NonFinite { field: "constraints" });
        }
        out
    }
}

/// `{ c + Gβ : ‖β[J]‖_p ≤ 1 for every block J, Aβ = b }`.
///
/// Immutable once built; every constructor validates the dimensions and the
/// index-set partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsotope<T: Scalar> {
    p: PNorm<T>,
    center: DVector<T>,
    generators: DMatrix<T>,
    constraints: DMatrix<T>,
    rhs: DVector<T>,
    index_set: IndexSet,
}

impl<T: Scalar> Ellipsotope<T> {
    pub fn new(
        p: PNorm<T>,
        center: DVector<T>,
        generators: DMatrix<T>,
        constraints: DMatrix<T>,
        rhs: DVector<T>,
        index_set: IndexSet,
    ) -> Result<Self> {
        Self::from_parts(Parts {
            p,
            center,
            generators,
            constraints,
            rhs,
            blocks: index_set.into_blocks(),
        })
    }

    pub fn from_parts(parts: Parts<T>) -> Result<Self> {
        let v = parts.validate();
        if !v.is_empty() {
            return Err(EtopeError::Invalid(v));
        }
        let m = parts.generators.ncols();
        Ok(Self {
            p: parts.p,
            center: parts.center,
            generators: parts.generators,
            constraints: parts.constraints,
            rhs: parts.rhs,
            index_set: IndexSet::from_blocks_unchecked(parts.blocks, m),
        })
    }

    /// Builds without the partition check. Callers guarantee validity.
    pub(crate) fn assemble(
        p: PNorm<T>,
        center: DVector<T>,
        generators: DMatrix<T>,
        constraints: DMatrix<T>,
        rhs: DVector<T>,
        index_set: IndexSet,
    ) -> Self {
        let e = Self {
            p,
            center,
            generators,
            constraints,
            rhs,
            index_set,
        };
        debug_assert!(e.validate().is_empty(), "{:?}", e.validate());
        e
    }

    pub fn into_parts(self) -> Parts<T> {
        Parts {
            p: self.p,
            center: self.center,
            generators: self.generators,
            constraints: self.constraints,
            rhs: self.rhs,
            blocks: self.index_set.into_blocks(),
        }
    }

    pub fn to_parts(&self) -> Parts<T> {
        self.clone().into_parts()
    }

    /// Basic ellipsotope: one block, no constraints.
    pub fn basic(p: PNorm<T>, center: DVector<T>, generators: DMatrix<T>) -> Result<Self> {
        let m = generators.ncols();
        Self::new(
            p,
            center,
            generators,
            DMatrix::zeros(0, m),
            DVector::zeros(0),
            IndexSet::single_block(m),
        )
    }

    /// Indexed ellipsotope: no constraints.
    pub fn indexed(
        p: PNorm<T>,
        center: DVector<T>,
        generators: DMatrix<T>,
        index_set: IndexSet,
    ) -> Result<Self> {
        let m = generators.ncols();
        Self::new(p, center, generators, DMatrix::zeros(0, m), DVector::zeros(0), index_set)
    }

    /// Constrained ellipsotope with a single block.
    pub fn constrained(
        p: PNorm<T>,
        center: DVector<T>,
        generators: DMatrix<T>,
        constraints: DMatrix<T>,
        rhs: DVector<T>,
    ) -> Result<Self> {
        let m = generators.ncols();
        Self::new(p, center, generators, constraints, rhs, IndexSet::single_block(m))
    }

    /// The single point `c` (no generators).
    pub fn point(p: PNorm<T>, center: DVector<T>) -> Self {
        let n = center.len();
        Self::assemble(
            p,
            center,
            DMatrix::zeros(n, 0),
            DMatrix::zeros(0, 0),
            DVector::zeros(0),
            IndexSet::singletons(0),
        )
    }

    /// Zonotope `Z(c, G)`: singleton blocks make the norm order irrelevant;
    /// `p = 2` is recorded so the result combines with 2-ellipsotopes.
    pub fn from_zonotope(center: DVector<T>, generators: DMatrix<T>) -> Result<Self> {
        Self::from_zonotope_with_norm(PNorm::two(), center, generators)
    }

    pub fn from_zonotope_with_norm(
        p: PNorm<T>,
        center: DVector<T>,
        generators: DMatrix<T>,
    ) -> Result<Self> {
        let m = generators.ncols();
        Self::indexed(p, center, generators, IndexSet::singletons(m))
    }

    /// Constrained zonotope `{c + Gβ : ‖β‖∞ ≤ 1, Aβ = b}`.
    pub fn from_constrained_zonotope(
        center: DVector<T>,
        generators: DMatrix<T>,
        constraints: DMatrix<T>,
        rhs: DVector<T>,
    ) -> Result<Self> {
        let m = generators.ncols();
        Self::new(PNorm::two(), center, generators, constraints, rhs, IndexSet::singletons(m))
    }

    /// Ellipsoid `{x : (x-c)ᵀQ(x-c) ≤ 1}` as the basic 2-ellipsotope `⟨c, (√Q)⁻¹⟩`.
    pub fn from_ellipsoid(e: &EllipsoidParams<T>) -> Result<Self> {
        let g = linalg::inv_sqrtm_pd(e.shape())?;
        Self::basic(PNorm::two(), e.center().clone(), g)
    }

    /// Capsule: segment `[q1, q2]` swept by a ball of radius `r`.
    pub fn capsule(q1: &DVector<T>, q2: &DVector<T>, r: T) -> Result<Self> {
        if q1.len() != q2.len() {
            return Err(EtopeError::Dimension(format!(
                "capsule endpoints have {} and {} entries",
                q1.len(),
                q2.len()
            )));
        }
        if !(r > T::zero()) {
            return Err(EtopeError::Precondition(format!("capsule radius {r} must be positive")));
        }
        let n = q1.len();
        let half = T::lit(0.5);
        let center = (q1 + q2) * half;
        let seg = (q2 - q1) * half;
        let mut g = DMatrix::zeros(n, n + 1);
        g.set_column(0, &seg);
        for i in 0..n {
            g[(i, i + 1)] = r;
        }
        let blocks = vec![vec![0], (1..=n).collect()];
        Self::indexed(PNorm::two(), center, g, IndexSet::new(blocks, n + 1)?)
    }

    pub fn p(&self) -> PNorm<T> {
        self.p
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    /// Constraint matrix `A` (`k x m`).
    pub fn constraints(&self) -> &DMatrix<T> {
        &self.constraints
    }

    /// Constraint right-hand side `b`.
    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.nrows()
    }

    pub fn is_basic(&self) -> bool {
        self.num_constraints() == 0 && self.index_set.len() <= 1
    }

    pub fn validate(&self) -> Vec<Violation> {
        self.to_parts().validate()
    }

    /// Workspace point `c + Gβ` for a coefficient vector.
    pub fn point_at(&self, beta: &DVector<T>) -> DVector<T> {
        &self.center + &self.generators * beta
    }

    /// Whether `β` lies in the ball product and satisfies `Aβ = b` within `tol`.
    pub fn is_feasible_coefficient(&self, beta: &DVector<T>, tol: T) -> bool {
        if beta.len() != self.num_generators() {
            return false;
        }
        let (inside, _) = ball_product_membership(beta, &self.index_set, self.p);
        inside && (&self.constraints * beta - &self.rhs).norm() <= tol
    }

    /// Same set with a different norm order recorded (only meaningful for
    /// singleton-block sets, where `p` does not change the set).
    pub fn with_norm(&self, p: PNorm<T>) -> Result<Self> {
        let mut parts = self.to_parts();
        parts.p = p;
        Self::from_parts(parts)
    }
}

/// Membership of `β` in the ball product of `index_set`; also returns the
/// largest block norm. Block norms up to `1 + 1e-12` count as inside.
pub fn ball_product_membership<T: Scalar>(
    beta: &DVector<T>,
    index_set: &IndexSet,
    p: PNorm<T>,
) -> (bool, T) {
    let v = beta.as_slice();
    let worst = index_set
        .blocks()
        .iter()
        .map(|b| p.norm_of(v, b))
        .fold(T::zero(), |a, x| a.max(x));
    (worst <= T::one() + T::tol(1e-12), worst)
}
