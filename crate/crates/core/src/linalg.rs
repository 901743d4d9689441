//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{EtopeError, Result};
use crate::scalar::Scalar;

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

pub fn hstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

pub fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn vcat<T: Scalar>(parts: &[&DVector<T>]) -> DVector<T> {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(*p);
        at += p.len();
    }
    out
}

pub fn block_diag<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Selects the given columns, in order.
pub fn select_cols<T: Scalar>(m: &DMatrix<T>, cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn select_rows<T: Scalar>(m: &DMatrix<T>, rows: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_entries<T: Scalar>(v: &DVector<T>, idx: &[usize]) -> DVector<T> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    let s = m.clone().singular_values();
    s.iter().fold(T::zero(), |acc, &x| acc.max(x))
}

/// Numerical rank with singular values below `RANK_TOL * sigma_max` treated as zero.
pub fn rank<T: Scalar>(m: &DMatrix<T>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().fold(T::zero(), |acc, &x| acc.max(x));
    if smax <= T::zero() {
        return 0;
    }
    let cut = smax * T::tol(RANK_TOL);
    s.iter().filter(|&&x| x > cut).count()
}

/// Moore-Penrose pseudoinverse.
pub fn pinv<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let cut = smax * T::tol(RANK_TOL);
    let u = svd.u.as_ref().expect("u computed");
    let vt = svd.v_t.as_ref().expect("v_t computed");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > T::zero() {
            let vi = vt.row(i).transpose();
            let ui = u.column(i).transpose();
            out += (vi * ui) / s;
        }
    }
    out
}

/// Orthonormal basis of the kernel of `a` (columns), size `ncols(a) x d`.
pub fn null_space<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let m = a.ncols();
    if m == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    // pad to at least square so the SVD returns a full right basis
    let padded = if a.nrows() < m {
        let mut p = DMatrix::zeros(m, m);
        p.view_mut((0, 0), a.shape()).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t computed");
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let cut = if smax > T::zero() {
        smax * T::tol(RANK_TOL)
    } else {
        T::one()
    };
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(m, keep.len(), |i, j| vt[(keep[j], i)])
}

pub fn is_symmetric<T: Scalar>(q: &DMatrix<T>, rel: f64) -> bool {
    if !q.is_square() {
        return false;
    }
    let scale = q.norm().max(T::one());
    (q - q.transpose()).norm() <= T::tol(rel) * scale
}

/// Symmetric eigendecomposition of a positive-definite matrix; rejects
/// eigenvalues at or below `1e-12 * lambda_max`.
pub fn pd_eigen<T: Scalar>(q: &DMatrix<T>) -> Result<SymmetricEigen<T, nalgebra::Dyn>> {
    if !q.is_square() || q.nrows() == 0 {
        return Err(EtopeError::NotPositiveDefinite(format!(
            "expected a non-empty square matrix, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(EtopeError::NotPositiveDefinite("non-finite entry".into()));
    }
    let sym = (q + q.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, &x| a.max(x));
    let lmin = eig.eigenvalues.iter().fold(lmax, |a, &x| a.min(x));
    if lmax <= T::zero() || lmin <= lmax * T::tol(1e-12) {
        return Err(EtopeError::NotPositiveDefinite(format!(
            "eigenvalue range [{lmin}, {lmax}]"
        )));
    }
    Ok(eig)
}

fn eigen_fn<T: Scalar>(eig: &SymmetricEigen<T, nalgebra::Dyn>, f: impl Fn(T) -> T) -> DMatrix<T> {
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    v * d * v.transpose()
}

/// Principal square root of a positive-definite matrix.
pub fn sqrtm_pd<T: Scalar>(q: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(eigen_fn(&pd_eigen(q)?, |x| x.sqrt()))
}

/// Inverse principal square root of a positive-definite matrix.
pub fn inv_sqrtm_pd<T: Scalar>(q: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(eigen_fn(&pd_eigen(q)?, |x| T::one() / x.sqrt()))
}

pub fn inv_pd<T: Scalar>(q: &DMatrix<T>) -> Result<DMatrix<T>> {
    Ok(eigen_fn(&pd_eigen(q)?, |x| T::one() / x))
}

pub fn det_pd<T: Scalar>(q: &DMatrix<T>) -> Result<T> {
    Ok(pd_eigen(q)?.eigenvalues.iter().fold(T::one(), |a, &x| a * x))
}
