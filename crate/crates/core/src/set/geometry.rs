use nalgebra::{DMatrix, DVector};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Affine subspace `{x : Hx = f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane<T: Scalar> {
    pub h: DMatrix<T>,
    pub f: DVector<T>,
}

impl<T: Scalar> Hyperplane<T> {
    pub fn new(h: DMatrix<T>, f: DVector<T>) -> Result<Self> {
        if h.nrows() != f.len() {
            return Err(EtopeError::Dimension(format!(
                "hyperplane has {} rows but {} offsets",
                h.nrows(),
                f.len()
            )));
        }
        Ok(Self { h, f })
    }

    /// Single hyperplane `{x : hᵀx = f}`.
    pub fn single(h: &DVector<T>, f: T) -> Self {
        Self {
            h: DMatrix::from_row_slice(1, h.len(), h.as_slice()),
            f: DVector::from_element(1, f),
        }
    }
}

/// Halfspace `{x : hᵀx ≤ s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace<T: Scalar> {
    pub h: DVector<T>,
    pub s: T,
}

impl<T: Scalar> Halfspace<T> {
    pub fn new(h: DVector<T>, s: T) -> Result<Self> {
        if h.iter().all(|x| *x == T::zero()) {
            return Err(EtopeError::Precondition("halfspace normal is zero".into()));
        }
        Ok(Self { h, s })
    }

    pub fn contains(&self, x: &DVector<T>) -> bool {
        self.h.dot(x) <= self.s
    }
}

/// Ellipsoid `{x : (x-c)ᵀQ(x-c) ≤ 1}` with symmetric positive-definite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidParams<T: Scalar> {
    center: DVector<T>,
    shape: DMatrix<T>,
}

impl<T: Scalar> EllipsoidParams<T> {
    pub fn new(center: DVector<T>, shape: DMatrix<T>) -> Result<Self> {
        if shape.nrows() != center.len() || !shape.is_square() {
            return Err(EtopeError::Dimension(format!(
                "shape matrix {}x{} for center of length {}",
                shape.nrows(),
                shape.ncols(),
                center.len()
            )));
        }
        if !linalg::is_symmetric(&shape, 1e-10) {
            return Err(EtopeError::NotPositiveDefinite("shape matrix is not symmetric".into()));
        }
        linalg::pd_eigen(&shape)?;
        let shape = (&shape + shape.transpose()) * T::lit(0.5);
        Ok(Self { center, shape })
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    /// Shape matrix `Q`.
    pub fn shape(&self) -> &DMatrix<T> {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `(x-c)ᵀQ(x-c)`; at most one inside the ellipsoid.
    pub fn level(&self, x: &DVector<T>) -> T {
        let d = x - &self.center;
        d.dot(&(&self.shape * &d))
    }

    /// `√det(Q⁻¹)`, proportional to the volume.
    pub fn volume_proxy(&self) -> T {
        T::one() / linalg::det_pd(&self.shape).unwrap_or(T::zero()).sqrt()
    }

    pub fn translated(&self, t: &DVector<T>) -> Self {
        Self {
            center: &self.center + t,
            shape: self.shape.clone(),
        }
    }
}
