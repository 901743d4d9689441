//! Closed set operations on ellipsotopes.
//!
//! All operations are exact unless stated otherwise: the result represents
//! precisely the stated set. None of them check emptiness.

use nalgebra::{DMatrix, DVector};

use crate::error::{EtopeError, Result};
use crate::linalg::{block_diag, hstack, vcat, vstack};
use crate::scalar::Scalar;
use crate::set::{Ellipsotope, Halfspace, Hyperplane, PNorm};

/// Affine map `x ↦ Tx + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<T: Scalar> {
    pub matrix: DMatrix<T>,
    pub translation: DVector<T>,
}

impl<T: Scalar> AffineMap<T> {
    pub fn new(matrix: DMatrix<T>, translation: DVector<T>) -> Result<Self> {
        if matrix.nrows() != translation.len() {
            return Err(EtopeError::Dimension(format!(
                "map has {} output rows but translation has {} entries",
                matrix.nrows(),
                translation.len()
            )));
        }
        Ok(Self { matrix, translation })
    }

    pub fn linear(matrix: DMatrix<T>) -> Self {
        let t = DVector::zeros(matrix.nrows());
        Self {
            matrix,
            translation: t,
        }
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &AffineMap<T>) -> Result<Self> {
        if self.matrix.ncols() != inner.matrix.nrows() {
            return Err(EtopeError::Dimension("maps do not compose".into()));
        }
        Ok(Self {
            matrix: &self.matrix * &inner.matrix,
            translation: &self.matrix * &inner.translation + &self.translation,
        })
    }
}

/// Constrained-polynomial-zonotope form of an ellipsotope.
///
/// The factors are the `m` coefficients followed by one slack per index
/// block. Monomial `r` of the constraint system has exponent row
/// `constraint_exponents.row(r)` over the factors. Each block `J` contributes
/// `Σ_{j∈J} β_j^p + ½ s_J = ½`, and linear constraints contribute degree-one
/// monomials. Exact for even `p`; for odd `p` the monomials are signed powers.
#[derive(Debug, Clone, PartialEq)]
pub struct CpzExport<T: Scalar> {
    pub center: DVector<T>,
    /// `[G, 0]` with one zero column per slack factor.
    pub generators: DMatrix<T>,
    /// Generator exponents (identity: each generator is linear in its factor).
    pub exponents: DMatrix<u32>,
    pub constraint_coeffs: DMatrix<T>,
    pub constraint_rhs: DVector<T>,
    pub constraint_exponents: DMatrix<u32>,
}

impl<T: Scalar> Ellipsotope<T> {
    fn same_space(&self, other: &Self, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(EtopeError::Dimension(format!(
                "{what}: operands live in R^{} and R^{}",
                self.dim(),
                other.dim()
            )));
        }
        self.same_norm(other)
    }

    fn same_norm(&self, other: &Self) -> Result<()> {
        if self.p() != other.p() {
            return Err(EtopeError::NormMismatch(self.p().to_string(), other.p().to_string()));
        }
        Ok(())
    }

    /// `TE + t`: center and generators move, constraints and blocks stay.
    pub fn affine_map(&self, map: &AffineMap<T>) -> Result<Self> {
        if map.matrix.ncols() != self.dim() {
            return Err(EtopeError::Dimension(format!(
                "map expects R^{} input, set lives in R^{}",
                map.matrix.ncols(),
                self.dim()
            )));
        }
        Ok(Self::assemble(
            self.p(),
            &map.matrix * self.center() + &map.translation,
            &map.matrix * self.generators(),
            self.constraints().clone(),
            self.rhs().clone(),
            self.index_set().clone(),
        ))
    }

    pub fn translate(&self, t: &DVector<T>) -> Result<Self> {
        let n = self.dim();
        self.affine_map(&AffineMap::new(DMatrix::identity(n, n), t.clone())?)
    }

    /// `sE` for a scalar `s`.
    pub fn scale(&self, s: T) -> Self {
        Self::assemble(
            self.p(),
            self.center() * s,
            self.generators() * s,
            self.constraints().clone(),
            self.rhs().clone(),
            self.index_set().clone(),
        )
    }

    /// Exact Minkowski sum: generators concatenate, constraints stack block-diagonally.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "Minkowski sum")?;
        Ok(Self::assemble(
            self.p(),
            self.center() + other.center(),
            hstack(&[self.generators(), other.generators()]),
            block_diag(self.constraints(), other.constraints()),
            vcat(&[self.rhs(), other.rhs()]),
            self.index_set().concat(other.index_set()),
        ))
    }

    /// `E1 × E2 ⊂ R^{n1+n2}`.
    pub fn cartesian_product(&self, other: &Self) -> Result<Self> {
        self.same_norm(other)?;
        Ok(Self::assemble(
            self.p(),
            vcat(&[self.center(), other.center()]),
            block_diag(self.generators(), other.generators()),
            block_diag(self.constraints(), other.constraints()),
            vcat(&[self.rhs(), other.rhs()]),
            self.index_set().concat(other.index_set()),
        ))
    }

    /// Exact intersection. The operand with more generators keeps its center
    /// and generators so the appended zero block is the smaller one; ties keep
    /// `self` first.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "intersection")?;
        if other.num_generators() > self.num_generators() {
            other.intersect_generalized(self, &DMatrix::identity(self.dim(), self.dim()))
        } else {
            self.intersect_generalized(other, &DMatrix::identity(self.dim(), self.dim()))
        }
    }

    /// `{x ∈ self : Rx ∈ other}` for `R : R^{n1} → R^{n2}`.
    pub fn intersect_generalized(&self, other: &Self, r: &DMatrix<T>) -> Result<Self> {
        self.same_norm(other)?;
        if r.ncols() != self.dim() || r.nrows() != other.dim() {
            return Err(EtopeError::Dimension(format!(
                "reduction matrix is {}x{}, expected {}x{}",
                r.nrows(),
                r.ncols(),
                other.dim(),
                self.dim()
            )));
        }
        let (n, m2) = (self.dim(), other.num_generators());
        let neg_g2 = -other.generators();
        let coupling = hstack(&[&(r * self.generators()), &neg_g2]);
        let a = vstack(&[&block_diag(self.constraints(), other.constraints()), &coupling]);
        let b = vcat(&[self.rhs(), other.rhs(), &(other.center() - r * self.center())]);
        Ok(Self::assemble(
            self.p(),
            self.center().clone(),
            hstack(&[self.generators(), &DMatrix::zeros(n, m2)]),
            a,
            b,
            self.index_set().concat(other.index_set()),
        ))
    }

    /// Intersection with `{x : Hx = f}`.
    pub fn intersect_hyperplane(&self, plane: &Hyperplane<T>) -> Result<Self> {
        if plane.h.ncols() != self.dim() || plane.h.nrows() != plane.f.len() {
            return Err(EtopeError::Dimension(format!(
                "hyperplane is {}x{}, set lives in R^{}",
                plane.h.nrows(),
                plane.h.ncols(),
                self.dim()
            )));
        }
        let a = vstack(&[self.constraints(), &(&plane.h * self.generators())]);
        let b = vcat(&[self.rhs(), &(&plane.f - &plane.h * self.center())]);
        Ok(Self::assemble(
            self.p(),
            self.center().clone(),
            self.generators().clone(),
            a,
            b,
            self.index_set().clone(),
        ))
    }

    /// Intersection with `{x : hᵀx ≤ s}` via one slack coefficient.
    ///
    /// The slack `γ = s - hᵀx` is bounded by `s - hᵀc + |hᵀG|·1` over the
    /// enclosing zonotope and mapped onto `d(β_s + 1)`, `β_s ∈ [-1, 1]`. A
    /// negative bound means the halfspace misses the set entirely; `d` is then
    /// clamped to zero, leaving the (empty) slice `hᵀx = s`.
    pub fn intersect_halfspace(&self, half: &Halfspace<T>) -> Result<Self> {
        if half.h.len() != self.dim() {
            return Err(EtopeError::Dimension(format!(
                "halfspace normal has {} entries, set lives in R^{}",
                half.h.len(),
                self.dim()
            )));
        }
        let (n, m, k) = (self.dim(), self.num_generators(), self.num_constraints());
        let htg = half.h.transpose() * self.generators();
        let offset = half.s - half.h.dot(self.center());
        let spread = htg.iter().fold(T::zero(), |a, x| a + x.abs());
        let d = ((offset + spread) * T::lit(0.5)).max(T::zero());

        let mut a = DMatrix::zeros(k + 1, m + 1);
        a.view_mut((0, 0), (k, m)).copy_from(self.constraints());
        a.view_mut((k, 0), (1, m)).copy_from(&htg);
        a[(k, m)] = d;
        let b = vcat(&[self.rhs(), &DVector::from_element(1, offset - d)]);
        Ok(Self::assemble(
            self.p(),
            self.center().clone(),
            hstack(&[self.generators(), &DMatrix::zeros(n, 1)]),
            a,
            b,
            self.index_set().with_singletons(1),
        ))
    }

    /// Ellipsotope containing `conv(E1 ∪ E2)`.
    ///
    /// Coefficients are `(β1, β2, β0, s)` with `β0 = 2λ - 1` selecting the
    /// mixing weight and `2(m1+m2)` slack coefficients bounding `|β_i| ≤ λ`
    /// (resp. `1-λ`).
    pub fn convex_hull_overapprox(&self, other: &Self) -> Result<Self> {
        self.same_space(other, "convex hull")?;
        let (n, m1, m2) = (self.dim(), self.num_generators(), other.num_generators());
        let (k1, k2) = (self.num_constraints(), other.num_constraints());
        let m3 = m1 + m2;
        let half = T::lit(0.5);
        let cols = 3 * m3 + 1;

        let mut g = DMatrix::zeros(n, cols);
        g.view_mut((0, 0), (n, m1)).copy_from(self.generators());
        g.view_mut((0, m1), (n, m2)).copy_from(other.generators());
        g.set_column(m3, &((self.center() - other.center()) * half));

        let rows = k1 + k2 + 2 * m3;
        let mut a = DMatrix::zeros(rows, cols);
        let mut b = DVector::zeros(rows);
        a.view_mut((0, 0), (k1, m1)).copy_from(self.constraints());
        for i in 0..k1 {
            a[(i, m3)] = -self.rhs()[i] * half;
            b[i] = self.rhs()[i] * half;
        }
        a.view_mut((k1, m1), (k2, m2)).copy_from(other.constraints());
        for i in 0..k2 {
            a[(k1 + i, m3)] = other.rhs()[i] * half;
            b[k1 + i] = other.rhs()[i] * half;
        }
        // slack rows: [I; -I; 0; 0] β1 + [0; 0; I; -I] β2 + [-½; -½; ½; ½] β0 + s = -½
        let r0 = k1 + k2;
        let slack0 = m3 + 1;
        for j in 0..m1 {
            let (up, down) = (r0 + j, r0 + m1 + j);
            a[(up, j)] = T::one();
            a[(down, j)] = -T::one();
            a[(up, m3)] = -half;
            a[(down, m3)] = -half;
        }
        for j in 0..m2 {
            let (up, down) = (r0 + 2 * m1 + j, r0 + 2 * m1 + m2 + j);
            a[(up, m1 + j)] = T::one();
            a[(down, m1 + j)] = -T::one();
            a[(up, m3)] = half;
            a[(down, m3)] = half;
        }
        for i in 0..2 * m3 {
            a[(r0 + i, slack0 + i)] = T::one();
            b[r0 + i] = -half;
        }

        Ok(Self::assemble(
            self.p(),
            (self.center() + other.center()) * half,
            g,
            a,
            b,
            self.index_set().concat(other.index_set()).with_singletons(1 + 2 * m3),
        ))
    }

    /// Lifted ellipsotope `⟨(c, -b), [G; A], I⟩ ⊂ R^{n+k}`: `x ∈ E` iff `(x, 0)` is in it.
    pub fn lift(&self) -> Result<Self> {
        let k = self.num_constraints();
        if k == 0 {
            return Err(EtopeError::Precondition("no constraints to lift".into()));
        }
        let m = self.num_generators();
        Ok(Self::assemble(
            self.p(),
            vcat(&[self.center(), &(-self.rhs())]),
            vstack(&[self.generators(), self.constraints()]),
            DMatrix::zeros(0, m),
            DVector::zeros(0),
            self.index_set().clone(),
        ))
    }

    /// Removes generators whose generator and constraint columns are both zero.
    /// Such a coefficient never helps reach a point, so the set is unchanged.
    pub fn drop_zero_generators(&self) -> Self {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| {
                self.generators().column(j).iter().any(|x| *x != T::zero())
                    || self.constraints().column(j).iter().any(|x| *x != T::zero())
            })
            .collect();
        if keep.len() == self.num_generators() {
            return self.clone();
        }
        Self::assemble(
            self.p(),
            self.center().clone(),
            crate::linalg::select_cols(self.generators(), &keep),
            crate::linalg::select_cols(self.constraints(), &keep),
            self.rhs().clone(),
            self.index_set().restrict(&keep),
        )
    }

    /// Constrained polynomial zonotope export; needs a positive integer `p`.
    pub fn to_cpz(&self) -> Result<CpzExport<T>> {
        let p = match self.p() {
            PNorm::Finite(p) if p.round() == p && p >= T::one() => {
                p.as_f64() as u32
            }
            other => {
                return Err(EtopeError::Unsupported(format!(
                    "polynomial export needs an integer norm order, got {other}"
                )))
            }
        };
        let (n, m, k) = (self.dim(), self.num_generators(), self.num_constraints());
        let blocks = self.index_set().blocks();
        let nb = blocks.len();
        let factors = m + nb;

        let generators = hstack(&[self.generators(), &DMatrix::zeros(n, nb)]);
        let exponents = DMatrix::<u32>::identity(factors, factors);

        // monomials: β_j^p (m), s_J (nb), then β_j (m) when linear constraints exist
        let linear = if k > 0 { m } else { 0 };
        let monomials = m + nb + linear;
        let mut mono = DMatrix::<u32>::zeros(monomials, factors);
        for j in 0..m {
            mono[(j, j)] = p;
        }
        for s in 0..nb {
            mono[(m + s, m + s)] = 1;
        }
        for j in 0..linear {
            mono[(m + nb + j, j)] = 1;
        }

        let half = T::lit(0.5);
        let mut coeffs = DMatrix::zeros(nb + k, monomials);
        let mut rhs = DVector::zeros(nb + k);
        for (s, block) in blocks.iter().enumerate() {
            for &j in block {
                coeffs[(s, j)] = T::one();
            }
            coeffs[(s, m + s)] = half;
            rhs[s] = half;
        }
        for i in 0..k {
            for j in 0..m {
                coeffs[(nb + i, m + nb + j)] = self.constraints()[(i, j)];
            }
            rhs[nb + i] = self.rhs()[i];
        }
        Ok(CpzExport {
            center: self.center().clone(),
            generators,
            exponents,
            constraint_coeffs: coeffs,
            constraint_rhs: rhs,
            constraint_exponents: mono,
        })
    }
}
