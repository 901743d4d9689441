use nalgebra::{DMatrix, DVector};

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::reduce::ellipsoid::{constrained_to_basic, mvoe_pair, to_ellipsoid};
use crate::scalar::Scalar;
use crate::set::{EllipsoidParams, Ellipsotope, IndexSet, PNorm};

/// One Minkowski summand of an ellipsotope: the generators of a group of
/// index blocks together with the constraint rows that touch them.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<T: Scalar> {
    /// Original generator indices, in order.
    pub columns: Vec<usize>,
    /// Original constraint row indices, in order.
    pub rows: Vec<usize>,
    pub generators: DMatrix<T>,
    pub constraints: DMatrix<T>,
    pub rhs: DVector<T>,
    /// Blocks renumbered to the local column order.
    pub blocks: IndexSet,
    pub has_center: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecomposition<T: Scalar> {
    pub p: PNorm<T>,
    pub center: DVector<T>,
    pub components: Vec<Component<T>>,
}

impl<T: Scalar> Component<T> {
    /// The summand as a set, centered at `center`.
    pub fn to_ellipsotope(&self, p: PNorm<T>, center: DVector<T>) -> Result<Ellipsotope<T>> {
        Ellipsotope::new(
            p,
            center,
            self.generators.clone(),
            self.constraints.clone(),
            self.rhs.clone(),
            self.blocks.clone(),
        )
    }
}

impl<T: Scalar> ComponentDecomposition<T> {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Minkowski sum of the components, the first one carrying the center.
    pub fn reassemble(&self) -> Result<Ellipsotope<T>> {
        let zero = DVector::zeros(self.center.len());
        let mut acc = Ellipsotope::point(self.p, self.center.clone());
        for comp in &self.components {
            acc = acc.minkowski_sum(&comp.to_ellipsotope(self.p, zero.clone())?)?;
        }
        Ok(acc)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Splits `e` into independent summands: index blocks are grouped whenever a
/// constraint row has nonzero entries in both. Constraint rows with no
/// support go to the first component.
pub fn identify_components<T: Scalar>(e: &Ellipsotope<T>) -> ComponentDecomposition<T> {
    let blocks = e.index_set().blocks();
    let a = e.constraints();
    let nb = blocks.len();
    let mut parent: Vec<usize> = (0..nb).collect();
    let mut owner = vec![0usize; e.num_generators()];
    for (bi, blk) in blocks.iter().enumerate() {
        for &j in blk {
            owner[j] = bi;
        }
    }
    let mut row_root: Vec<Option<usize>> = vec![None; a.nrows()];
    for (i, root) in row_root.iter_mut().enumerate() {
        let mut first: Option<usize> = None;
        for j in 0..a.ncols() {
            if a[(i, j)] != T::zero() {
                let b = owner[j];
                match first {
                    None => first = Some(b),
                    Some(f) => {
                        let (rf, rb) = (find(&mut parent, f), find(&mut parent, b));
                        if rf != rb {
                            parent[rb] = rf;
                        }
                    }
                }
            }
        }
        *root = first;
    }
    // group blocks by root in order of first appearance
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for bi in 0..nb {
        let r = find(&mut parent, bi);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(bi),
            None => groups.push((r, vec![bi])),
        }
    }
    let mut comps = Vec::with_capacity(groups.len());
    for (ci, (root, group)) in groups.iter().enumerate() {
        let mut columns: Vec<usize> = group.iter().flat_map(|&b| blocks[b].iter().copied()).collect();
        columns.sort_unstable();
        let rows: Vec<usize> = (0..a.nrows())
            .filter(|&i| match row_root[i] {
                Some(b) => find(&mut parent, b) == *root,
                None => ci == 0,
            })
            .collect();
        let local = IndexSet::from_blocks_unchecked(
            group
                .iter()
                .map(|&b| {
                    blocks[b]
                        .iter()
                        .map(|j| columns.binary_search(j).expect("column in group"))
                        .collect()
                })
                .collect(),
            columns.len(),
        );
        let sub_a = linalg::select_cols(&linalg::select_rows(a, &rows), &columns);
        comps.push(Component {
            generators: linalg::select_cols(e.generators(), &columns),
            constraints: sub_a,
            rhs: linalg::select_entries(e.rhs(), &rows),
            blocks: local,
            has_center: ci == 0,
            columns,
            rows,
        });
    }
    ComponentDecomposition {
        p: e.p(),
        center: e.center().clone(),
        components: comps,
    }
}

/// Heuristic merge score `det(2Q₁⁻¹ + 2Q₂⁻¹)^{1/2}`, proportional to the
/// volume of the `ζ = 1` outer ellipsoid of the pair.
pub fn heuristic_volume<T: Scalar>(q1_inv: &DMatrix<T>, q2_inv: &DMatrix<T>) -> T {
    let m = (q1_inv + q2_inv) * T::lit(2.0);
    m.determinant().abs().sqrt()
}

/// Pair whose `ζ = 1` merged ellipsoid `(2Qᵢ⁻¹ + 2Qⱼ⁻¹)⁻¹` has the largest
/// determinant, i.e. the smallest volume. Ties go to the lexicographically
/// smallest pair.
pub fn select_pair_heuristic<T: Scalar>(components: &[EllipsoidParams<T>]) -> Result<(usize, usize)> {
    if components.len() < 2 {
        return Err(EtopeError::Precondition(format!(
            "need at least two components, got {}",
            components.len()
        )));
    }
    let inv: Vec<DMatrix<T>> = components
        .iter()
        .map(|c| linalg::inv_pd(c.shape()))
        .collect::<Result<_>>()?;
    select_pair_from_inverses(&inv)
}

fn select_pair_from_inverses<T: Scalar>(inv: &[DMatrix<T>]) -> Result<(usize, usize)> {
    let mut best: Option<((usize, usize), T)> = None;
    let margin = T::one() + T::lit(1e-12);
    for i in 0..inv.len() {
        for j in i + 1..inv.len() {
            let v = heuristic_volume(&inv[i], &inv[j]);
            match best {
                Some((_, b)) if !(v * margin < b) => {}
                _ => best = Some(((i, j), v)),
            }
        }
    }
    Ok(best.expect("at least one pair").0)
}

/// A summand during MVOE merging.
enum Piece<T: Scalar> {
    Ellipsoid(EllipsoidParams<T>),
    Raw(Ellipsotope<T>),
}

/// Outer ellipsoid of a possibly flat basic 2-ellipsotope: exact when `G` has
/// full row rank, otherwise inflated by a small multiple of the identity.
fn enclosing_ellipsoid<T: Scalar>(e: &Ellipsotope<T>) -> Result<EllipsoidParams<T>> {
    match to_ellipsoid(e) {
        Ok(q) => Ok(q),
        Err(EtopeError::RankDeficient(_)) => {
            let n = e.dim();
            let g = e.generators();
            let ggt = g * g.transpose();
            let scale = (ggt.trace() / T::from_usize_lossy(n.max(1))).max(T::one());
            let inflated = ggt + DMatrix::identity(n, n) * (scale * T::lit(1e-9));
            // {Gβ : ‖β‖ ≤ 1} ⊆ {x : xᵀ(GGᵀ + δI)⁻¹x ≤ 1}
            EllipsoidParams::new(e.center().clone(), linalg::inv_pd(&inflated)?)
        }
        Err(err) => Err(err),
    }
}

/// Reduces a 2-ellipsotope to at most `target` summands by repeatedly merging
/// the heuristic pair of component ellipsoids into its MVOE.
///
/// Components coupled across several blocks are kept exact unless the target
/// cannot be reached otherwise; then their constraints are dropped (an outer
/// relaxation) and their blocks merged like any other. When no merge is
/// needed the input is returned unchanged.
pub fn reduce_2etope<T: Scalar>(e: &Ellipsotope<T>, target: usize) -> Result<Ellipsotope<T>> {
    if !e.p().is_two() {
        return Err(EtopeError::Precondition(format!(
            "reduce_2etope needs p = 2, got p = {}",
            e.p()
        )));
    }
    let target = target.max(1);
    let dec = identify_components(e);
    if dec.len() <= target {
        return Ok(e.clone());
    }
    let n = e.dim();
    let zero = DVector::<T>::zeros(n);
    let mut center = e.center().clone();
    let mut pieces: Vec<Piece<T>> = Vec::new();
    let mut coupled: Vec<Ellipsotope<T>> = Vec::new();
    for comp in &dec.components {
        let part = comp.to_ellipsotope(PNorm::two(), zero.clone())?;
        if comp.blocks.len() > 1 {
            coupled.push(part);
            continue;
        }
        push_basic(&mut pieces, &mut center, constrained_to_basic(&part)?)?;
    }
    // relax coupled components only when the target is otherwise out of reach
    while pieces.len() + coupled.len() > target && !coupled.is_empty() && ellipsoid_count(&pieces) < 2 {
        let part = coupled.remove(0);
        relax_into(&mut pieces, &mut center, &part)?;
    }
    pieces.extend(coupled.into_iter().map(Piece::Raw));
    while pieces.len() > target {
        let idx: Vec<usize> = (0..pieces.len())
            .filter(|&i| matches!(pieces[i], Piece::Ellipsoid(_)))
            .collect();
        if idx.len() < 2 {
            match pieces.iter().position(|p| matches!(p, Piece::Raw(_))) {
                Some(r) => {
                    let Piece::Raw(part) = pieces.remove(r) else { unreachable!() };
                    relax_into(&mut pieces, &mut center, &part)?;
                    continue;
                }
                None => break,
            }
        }
        let inv: Vec<DMatrix<T>> = idx
            .iter()
            .map(|&i| match &pieces[i] {
                Piece::Ellipsoid(q) => linalg::inv_pd(q.shape()),
                Piece::Raw(_) => unreachable!(),
            })
            .collect::<Result<_>>()?;
        let (a, b) = select_pair_from_inverses(&inv)?;
        let (ia, ib) = (idx[a], idx[b]);
        let (Piece::Ellipsoid(qa), Piece::Ellipsoid(qb)) = (&pieces[ia], &pieces[ib]) else {
            unreachable!()
        };
        let merged = mvoe_pair(qa, qb)?.ellipsoid()?;
        pieces[ia] = Piece::Ellipsoid(merged);
        pieces.remove(ib);
    }
    let mut acc = Ellipsotope::point(PNorm::two(), center);
    for piece in pieces {
        let part = match piece {
            Piece::Ellipsoid(q) => Ellipsotope::from_ellipsoid(&q)?,
            Piece::Raw(r) => r,
        };
        acc = acc.minkowski_sum(&part)?;
    }
    Ok(acc)
}

fn ellipsoid_count<T: Scalar>(pieces: &[Piece<T>]) -> usize {
    pieces.iter().filter(|p| matches!(p, Piece::Ellipsoid(_))).count()
}

/// Adds a basic 2-ellipsotope as an ellipsoid piece, folding points into the center.
fn push_basic<T: Scalar>(
    pieces: &mut Vec<Piece<T>>,
    center: &mut DVector<T>,
    basic: Ellipsotope<T>,
) -> Result<()> {
    if basic.num_generators() == 0 || basic.generators().iter().all(|x| *x == T::zero()) {
        *center += basic.center();
        return Ok(());
    }
    let q = enclosing_ellipsoid(&basic)?;
    *center += q.center();
    pieces.push(Piece::Ellipsoid(q.translated(&-q.center())));
    Ok(())
}

/// Drops all constraints of a coupled component and adds its blocks as
/// separate ellipsoid pieces.
fn relax_into<T: Scalar>(
    pieces: &mut Vec<Piece<T>>,
    center: &mut DVector<T>,
    part: &Ellipsotope<T>,
) -> Result<()> {
    log::debug!("relaxing a coupled component with {} constraints", part.num_constraints());
    *center += part.center();
    let n = part.dim();
    for blk in part.index_set().blocks() {
        let g = linalg::select_cols(part.generators(), blk);
        push_basic(pieces, center, Ellipsotope::basic(PNorm::two(), DVector::zeros(n), g)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn ball(scale: f64) -> EllipsoidParams<f64> {
        EllipsoidParams::new(dvector![0.0, 0.0], DMatrix::identity(2, 2) * scale).unwrap()
    }

    #[test]
    fn heuristic_ties_and_sizes() {
        assert_eq!(select_pair_heuristic(&[ball(1.0), ball(1.0), ball(1.0)]).unwrap(), (0, 1));
        assert_eq!(select_pair_heuristic(&[ball(0.01), ball(100.0), ball(100.0)]).unwrap(), (1, 2));
        assert!(select_pair_heuristic(&[ball(1.0)]).is_err());
    }

    #[test]
    fn components_follow_constraint_coupling() {
        let g = dmatrix![1.0, 0.0, 1.0, 0.0; 0.0, 1.0, 0.0, 1.0];
        let blocks = IndexSet::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let diag = Ellipsotope::new(
            PNorm::two(),
            dvector![0.0, 0.0],
            g.clone(),
            dmatrix![1.0, 0.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0],
            dvector![0.1, 0.2],
            blocks.clone(),
        )
        .unwrap();
        let d = identify_components(&diag);
        assert_eq!(d.len(), 2);
        assert_eq!(d.components[1].rows, vec![1]);
        let dense = Ellipsotope::new(
            PNorm::two(),
            dvector![0.0, 0.0],
            g.clone(),
            dmatrix![1.0, 0.0, 1.0, 0.0],
            dvector![0.1],
            blocks,
        )
        .unwrap();
        assert_eq!(identify_components(&dense).len(), 1);
        let free = Ellipsotope::indexed(
            PNorm::two(),
            dvector![0.0, 0.0],
            dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 1.0],
            IndexSet::singletons(3),
        )
        .unwrap();
        let d = identify_components(&free);
        assert_eq!(d.len(), 3);
        assert!(d.components[0].has_center && !d.components[1].has_center);
        let back = d.reassemble().unwrap();
        assert_eq!(back.num_generators(), 3);
        assert_eq!(back.center(), free.center());
    }

    #[test]
    fn three_unit_balls_merge_to_radius_three() {
        let g = linalg::hstack(&[
            &DMatrix::<f64>::identity(2, 2),
            &DMatrix::identity(2, 2),
            &DMatrix::identity(2, 2),
        ]);
        let e = Ellipsotope::indexed(
            PNorm::two(),
            dvector![0.0, 0.0],
            g,
            IndexSet::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]], 6).unwrap(),
        )
        .unwrap();
        let r = reduce_2etope(&e, 1).unwrap();
        assert_eq!(r.num_generators(), 2);
        let q = to_ellipsoid(&r).unwrap();
        assert!((q.level(&dvector![3.0, 0.0]) - 1.0).abs() < 1e-9);
        assert_eq!(reduce_2etope(&e, 3).unwrap(), e);
    }
}
