//! Slow reference formulation of the emptiness test, for cross-checking the
//! main solver on small instances.

use nalgebra::DVector;

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::set::{Ellipsotope, PNorm};

/// `min { max_J ‖β[J]‖_p : Aβ = b }` by projected subgradient descent on the
/// affine solution set. The set is nonempty iff the value is at most 1.
///
/// Returns the best value seen after `iters` steps.
pub fn minimax_cost<T: Scalar>(e: &Ellipsotope<T>, iters: usize) -> Result<T> {
    let a = e.constraints();
    let b = e.rhs();
    let pinv = linalg::pinv(a);
    let base = &pinv * b;
    if (a * &base - b).norm() > T::tol(1e-9) * (T::one() + b.norm()) {
        return Err(EtopeError::EmptySet("Aβ = b has no solution".into()));
    }
    let null = if a.nrows() == 0 {
        nalgebra::DMatrix::identity(a.ncols(), a.ncols())
    } else {
        linalg::null_space(a)
    };
    let p = e.p();
    let blocks = e.index_set().blocks();
    let cost = |beta: &DVector<T>| -> (T, usize) {
        let s = beta.as_slice();
        blocks
            .iter()
            .enumerate()
            .map(|(i, blk)| (p.norm_of(s, blk), i))
            .fold((T::zero(), 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let mut z = DVector::zeros(null.ncols());
    let mut best = cost(&base).0;
    if null.ncols() == 0 || blocks.is_empty() {
        return Ok(best);
    }
    let scale = best.max(T::one());
    for k in 0..iters {
        let beta = &base + &null * &z;
        let (val, arg) = cost(&beta);
        best = best.min(val);
        if val == T::zero() {
            break;
        }
        let mut sub = DVector::zeros(beta.len());
        for &j in &blocks[arg] {
            sub[j] = block_gradient(beta[j], val, p, &beta, &blocks[arg]);
        }
        let gz = null.transpose() * sub;
        let gn = gz.norm();
        if gn == T::zero() {
            break;
        }
        let step = scale / (T::from_usize_lossy(k + 1).sqrt() * gn);
        z -= gz * step;
    }
    Ok(best)
}

fn block_gradient<T: Scalar>(x: T, norm: T, p: PNorm<T>, beta: &DVector<T>, blk: &[usize]) -> T {
    match p {
        PNorm::Inf => {
            let top = blk.iter().fold(T::zero(), |a, &j| a.max(beta[j].abs()));
            if x.abs() == top {
                x.signum()
            } else {
                T::zero()
            }
        }
        PNorm::Finite(q) => x.signum() * (x.abs() / norm).powf(q - T::one()),
    }
}
