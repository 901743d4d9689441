use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::reduce::ellipsoid::{reduce_basic_2, zonotope_mvoe};
use crate::scalar::Scalar;
use crate::set::{Ellipsotope, IndexSet, PNorm};

/// Exact reduction of a 2-ellipsotope to at most `(n + k)` generators per
/// block: each block of the lifted generator matrix `[G; A]` with more than
/// `n + k` columns is replaced by an equivalent `n + k` (or fewer) column block.
pub fn lift_then_reduce<T: Scalar>(e: &Ellipsotope<T>) -> Result<Ellipsotope<T>> {
    if !e.p().is_two() {
        return Err(EtopeError::Precondition(format!(
            "lift_then_reduce needs p = 2, got p = {}",
            e.p()
        )));
    }
    let n = e.dim();
    let k = e.num_constraints();
    let lifted = linalg::vstack(&[e.generators(), e.constraints()]);
    let mut columns: Vec<DMatrix<T>> = Vec::new();
    let mut blocks = Vec::new();
    let mut at = 0;
    for blk in e.index_set().blocks() {
        let g = linalg::select_cols(&lifted, blk);
        let reduced = if blk.len() > n + k {
            reduce_block(g)?
        } else {
            g
        };
        let w = reduced.ncols();
        if w > 0 {
            blocks.push((at..at + w).collect::<Vec<_>>());
            at += w;
            columns.push(reduced);
        }
    }
    let refs: Vec<&DMatrix<T>> = columns.iter().collect();
    let stacked = if refs.is_empty() {
        DMatrix::zeros(n + k, 0)
    } else {
        linalg::hstack(&refs)
    };
    Ellipsotope::new(
        PNorm::two(),
        e.center().clone(),
        stacked.rows(0, n).into_owned(),
        stacked.rows(n, k).into_owned(),
        e.rhs().clone(),
        IndexSet::new(blocks, at)?,
    )
}

/// `{Gβ : ‖β‖₂ ≤ 1}` with as few columns as the rank of `G`.
fn reduce_block<T: Scalar>(g: DMatrix<T>) -> Result<DMatrix<T>> {
    let rows = g.nrows();
    let r = linalg::rank(&g);
    if r == rows {
        let e = Ellipsotope::basic(PNorm::two(), DVector::zeros(rows), g)?;
        return Ok(reduce_basic_2(&e)?.generators().clone());
    }
    // flat block: the image of the unit ball under G = UΣVᵀ is that under U_rΣ_r
    let svd = SVD::new(g, true, false);
    let u = svd.u.expect("u computed");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(DMatrix::from_fn(rows, r, |i, j| {
        let c = order[j];
        u[(i, c)] * svd.singular_values[c]
    }))
}

/// Moves generator `j` into its own block. The result contains `e`.
pub fn pop_generator<T: Scalar>(e: &Ellipsotope<T>, j: usize) -> Result<Ellipsotope<T>> {
    let m = e.num_generators();
    if j >= m {
        return Err(EtopeError::Precondition(format!(
            "generator {j} out of range for {m} generators"
        )));
    }
    let owner = e.index_set().block_of(j).expect("partition covers j");
    let blocks = e.index_set().blocks();
    if blocks[owner].len() == 1 {
        log::warn!("generator {j} is already in a singleton block; nothing to pop");
        return Ok(e.clone());
    }
    let mut new_blocks: Vec<Vec<usize>> = Vec::with_capacity(blocks.len() + 1);
    for (bi, b) in blocks.iter().enumerate() {
        if bi == owner {
            new_blocks.push(b.iter().copied().filter(|&x| x != j).collect());
        } else {
            new_blocks.push(b.clone());
        }
    }
    new_blocks.push(vec![j]);
    Ellipsotope::new(
        e.p(),
        e.center().clone(),
        e.generators().clone(),
        e.constraints().clone(),
        e.rhs().clone(),
        IndexSet::new(new_blocks, m)?,
    )
}

/// How popped generators are enclosed by [`reduce_pop_box`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PopEnclosure {
    /// Axis-aligned interval hull `diag(Σ|g|)`.
    #[default]
    Box,
    /// Outer ellipsoid of the popped zonotope (needs `p = 2`).
    Ellipsoid,
}

/// Removes `n_r` generators: the `n_r + n` shortest ones are popped and their
/// zonotope replaced by an `n`-generator enclosure. The result contains `e`.
pub fn reduce_pop_box<T: Scalar>(
    e: &Ellipsotope<T>,
    n_r: usize,
    enclosure: PopEnclosure,
) -> Result<Ellipsotope<T>> {
    let n = e.dim();
    let m = e.num_generators();
    let count = n_r + n;
    if count > m || m - n_r < 1 {
        return Err(EtopeError::Precondition(format!(
            "cannot remove {n_r} of {m} generators in R^{n}: need n_r + n <= m"
        )));
    }
    let g = e.generators();
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<T> = (0..m).map(|j| g.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut victims: Vec<usize> = order[..count].to_vec();
    victims.sort_unstable();
    let a = e.constraints();
    if let Some(&bad) = victims.iter().find(|&&j| a.column(j).iter().any(|x| *x != T::zero())) {
        return Err(EtopeError::Precondition(format!(
            "generator {bad} is constrained and cannot be popped"
        )));
    }
    let keep: Vec<usize> = (0..m).filter(|j| victims.binary_search(j).is_err()).collect();
    let popped = linalg::select_cols(g, &victims);
    let kept = Ellipsotope::new(
        e.p(),
        e.center().clone(),
        linalg::select_cols(g, &keep),
        linalg::select_cols(a, &keep),
        e.rhs().clone(),
        e.index_set().restrict(&keep),
    )?;
    let zero = DVector::zeros(n);
    let cover = match enclosure {
        PopEnclosure::Box => {
            let radii = DVector::from_fn(n, |i, _| popped.row(i).iter().fold(T::zero(), |s, x| s + x.abs()));
            Ellipsotope::from_zonotope_with_norm(e.p(), zero, DMatrix::from_diagonal(&radii))?
        }
        PopEnclosure::Ellipsoid => {
            if !e.p().is_two() {
                return Err(EtopeError::Precondition(
                    "ellipsoidal enclosure needs p = 2".into(),
                ));
            }
            Ellipsotope::from_ellipsoid(&zonotope_mvoe(&zero, &popped)?)?
        }
    };
    kept.minkowski_sum(&cover)
}

/// General constraint dualization with `Γ` (`n × k`) and `Λ` (`k × k`):
/// `⟨c + Γb, G - ΓA, A - ΛA, b - Λb⟩`, which contains `e`. Rows of `[A, b]`
/// that become zero are removed.
pub fn dualize<T: Scalar>(e: &Ellipsotope<T>, gamma: &DMatrix<T>, lambda: &DMatrix<T>) -> Result<Ellipsotope<T>> {
    let n = e.dim();
    let k = e.num_constraints();
    if gamma.shape() != (n, k) || lambda.shape() != (k, k) {
        return Err(EtopeError::Dimension(format!(
            "expected Γ {n}x{k} and Λ {k}x{k}, got {:?} and {:?}",
            gamma.shape(),
            lambda.shape()
        )));
    }
    let a = e.constraints();
    let b = e.rhs();
    let center = e.center() + gamma * b;
    let g = e.generators() - gamma * a;
    let new_a = a - lambda * a;
    let new_b = b - lambda * b;
    let rows: Vec<usize> = (0..k)
        .filter(|&i| new_a.row(i).iter().any(|x| *x != T::zero()) || new_b[i] != T::zero())
        .collect();
    Ellipsotope::new(
        e.p(),
        center,
        g,
        linalg::select_rows(&new_a, &rows),
        linalg::select_entries(&new_b, &rows),
        e.index_set().clone(),
    )
}

/// Drops constraint row `i` (dualization with `Γ = 0` and `Λ = eᵢeᵢᵀ`).
pub fn eliminate_constraint<T: Scalar>(e: &Ellipsotope<T>, i: usize) -> Result<Ellipsotope<T>> {
    let k = e.num_constraints();
    if i >= k {
        return Err(EtopeError::Precondition(format!(
            "constraint row {i} out of range for {k} constraints"
        )));
    }
    let mut lambda = DMatrix::zeros(k, k);
    lambda[(i, i)] = T::one();
    dualize(e, &DMatrix::zeros(e.dim(), k), &lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn pop_disk_gives_square() {
        let disk = Ellipsotope::basic(PNorm::two(), dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let sq = pop_generator(&disk, 1).unwrap();
        assert_eq!(sq.index_set().blocks(), &[vec![0], vec![1]]);
        assert_eq!(pop_generator(&sq, 1).unwrap(), sq);
        assert!(pop_generator(&disk, 2).is_err());
    }

    #[test]
    fn pop_box_interval_hull() {
        let z = Ellipsotope::from_zonotope(
            dvector![0.0, 0.0],
            dmatrix![1.0, 0.0, 0.1, 0.0; 0.0, 1.0, 0.0, 0.1],
        )
        .unwrap();
        let r = reduce_pop_box(&z, 2, PopEnclosure::Box).unwrap();
        assert_eq!(r.num_generators(), 2);
        assert!((r.generators() - dmatrix![1.1, 0.0; 0.0, 1.1]).norm() < 1e-12);
        let seg = Ellipsotope::from_zonotope(dvector![0.0], dmatrix![-2.0]).unwrap();
        let r = reduce_pop_box(&seg, 0, PopEnclosure::Box).unwrap();
        assert_eq!(r.generators(), &dmatrix![2.0]);
        assert!(reduce_pop_box(&seg, 1, PopEnclosure::Box).is_err());
    }

    #[test]
    fn pop_box_rejects_constrained_victims() {
        let e = Ellipsotope::from_constrained_zonotope(
            dvector![0.0],
            dmatrix![1.0, 0.1],
            dmatrix![0.0, 1.0],
            dvector![0.0],
        )
        .unwrap();
        assert!(reduce_pop_box(&e, 0, PopEnclosure::Box).is_err());
    }

    #[test]
    fn eliminating_segment_constraint_restores_square() {
        let seg = Ellipsotope::from_constrained_zonotope(
            dvector![0.0, 0.0],
            DMatrix::identity(2, 2),
            dmatrix![1.0, 0.0],
            dvector![0.0],
        )
        .unwrap();
        let sq = eliminate_constraint(&seg, 0).unwrap();
        assert_eq!(sq.num_constraints(), 0);
        assert_eq!(sq.generators(), seg.generators());
        assert!(eliminate_constraint(&seg, 1).is_err());
        let same = dualize(&seg, &DMatrix::zeros(2, 1), &DMatrix::zeros(1, 1)).unwrap();
        assert_eq!(same, seg);
    }

    #[test]
    fn lift_reduce_block_counts() {
        let g = DMatrix::from_fn(2, 10, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let a = DMatrix::from_fn(1, 10, |_, j| (j % 3) as f64 - 1.0);
        let e = Ellipsotope::constrained(PNorm::two(), dvector![0.0, 0.0], g, a, dvector![0.2]).unwrap();
        let r = lift_then_reduce(&e).unwrap();
        assert!(r.num_generators() <= 3);
        assert_eq!(r.num_constraints(), 1);
        let small = Ellipsotope::basic(PNorm::two(), dvector![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        assert_eq!(lift_then_reduce(&small).unwrap(), small);
    }
}
