//! Shared generators and independent geometric oracles for the
//! integration tests. Nothing here calls the library's solvers.

#![allow(dead_code)]

use etope::{Etope, PNorm, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solver settings for checks that must resolve points near a boundary.
pub fn tight() -> SolverConfig {
    SolverConfig::default().with_tol(1e-14).with_max_iters(200_000)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
}

pub fn uniform_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..=scale))
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric positive definite matrix with eigenvalues in a sane range.
pub fn random_pd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = uniform_matrix(rng, n, n, 1.0);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.2
}

/// Random partition of `0..m` into consecutive blocks of size 1..=max_block.
pub fn random_partition<R: Rng>(rng: &mut R, m: usize, max_block: usize) -> Vec<Vec<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < m {
        let len = rng.random_range(1..=max_block).min(m - start);
        blocks.push((start..start + len).collect());
        start += len;
    }
    blocks
}

pub fn random_p<R: Rng>(rng: &mut R) -> PNorm<f64> {
    match rng.random_range(0..4) {
        0 => PNorm::Inf,
        1 => PNorm::Finite(1.5),
        2 => PNorm::Finite(3.0),
        _ => PNorm::two(),
    }
}

/// Unconstrained 2-D set with `m` generators and a random partition.
pub fn random_indexed<R: Rng>(rng: &mut R, n: usize, m: usize, p: PNorm<f64>) -> Etope {
    let c = uniform_vector(rng, n, 1.0);
    let g = uniform_matrix(rng, n, m, 1.0);
    let blocks = random_partition(rng, m, 3);
    Etope::new(p, c, g, DMatrix::zeros(0, m), DVector::zeros(0), etope::IndexSet::new(blocks, m).unwrap())
        .unwrap()
}

/// Basic (single-block) set.
pub fn random_basic<R: Rng>(rng: &mut R, n: usize, m: usize, p: PNorm<f64>) -> Etope {
    Etope::basic(p, uniform_vector(rng, n, 1.0), uniform_matrix(rng, n, m, 1.0)).unwrap()
}

fn block_direction<R: Rng>(rng: &mut R, d: usize, p: PNorm<f64>) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = p.norm(g.iter().copied());
        if norm > 1e-9 {
            return g.iter().map(|x| x / norm).collect();
        }
    }
}

/// Coefficients on the unit sphere of every block (boundary of the ball
/// product), optionally scaled by a random radius in `[0, 1]` per block.
pub fn coefficient<R: Rng>(rng: &mut R, e: &Etope, on_boundary: bool) -> DVector<f64> {
    let mut beta = DVector::zeros(e.num_generators());
    for block in e.index_set().blocks() {
        let dir = block_direction(rng, block.len(), e.p());
        let r = if on_boundary { 1.0 } else { rng.random::<f64>() };
        for (&j, x) in block.iter().zip(dir) {
            beta[j] = r * x;
        }
    }
    beta
}

/// A point of an unconstrained set: half on the image of the ball-product
/// boundary, half interior.
pub fn sample_point<R: Rng>(rng: &mut R, e: &Etope) -> DVector<f64> {
    assert_eq!(e.num_constraints(), 0, "sample_point needs an unconstrained set");
    let on_boundary = rng.random::<bool>();
    let beta = coefficient(rng, e, on_boundary);
    e.center() + e.generators() * beta
}

fn max_block_norm(e: &Etope, beta: &DVector<f64>) -> f64 {
    e.index_set()
        .blocks()
        .iter()
        .map(|b| e.p().norm(b.iter().map(|&j| beta[j])))
        .fold(0.0, f64::max)
}

/// Orthonormal basis of ker(A), from the eigenvectors of AᵀA.
fn kernel(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return DMatrix::identity(m, m);
    }
    let eig = (a.transpose() * a).symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |s, &x| s.max(x)).max(1e-300);
    let cols: Vec<_> = (0..m)
        .filter(|&i| eig.eigenvalues[i] <= 1e-12 * top)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Adds `k` random constraints to an unconstrained `base`, with the right
/// side generated by a coefficient vector whose block norms all equal
/// `scale`. Returns the set and that vector (feasible when `scale <= 1`).
pub fn constrain<R: Rng>(rng: &mut R, base: &Etope, k: usize, scale: f64) -> (Etope, DVector<f64>) {
    let m = base.num_generators();
    let a = uniform_matrix(rng, k, m, 1.0);
    let beta = coefficient(rng, base, true) * scale;
    let b = &a * &beta;
    let e = Etope::new(base.p(), base.center().clone(), base.generators().clone(), a, b, base.index_set().clone())
        .unwrap();
    (e, beta)
}

/// Largest `t` with `beta + t·u` in the ball product, by doubling and bisection.
fn reach(e: &Etope, beta: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let feasible = |b: &DVector<f64>| max_block_norm(e, b) <= 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while feasible(&(beta + u * hi)) && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(&(beta + u * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn kernel_direction<R: Rng>(rng: &mut R, k: &DMatrix<f64>) -> DVector<f64> {
    let u = k * gaussian_vector(rng, k.ncols());
    &u / u.norm().max(1e-300)
}

/// Hit-and-run walk through the feasible coefficients of a constrained set,
/// starting from a feasible `beta0`. Returns `count` points.
pub fn hit_and_run<R: Rng>(rng: &mut R, e: &Etope, beta0: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let k = kernel(e.constraints(), e.num_generators());
    let mut beta = beta0.clone();
    if k.ncols() == 0 {
        return vec![e.point_at(&beta); count];
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..3 {
            let u = kernel_direction(rng, &k);
            let a = reach(e, &beta, &u);
            let b = reach(e, &beta, &(-&u));
            let t = rng.random_range(-b..=a);
            beta += &u * t;
        }
        out.push(e.point_at(&beta));
    }
    out
}

/// Points of a constrained set whose coefficients sit on the ball-product
/// boundary: ends of random chords through `beta0` within ker(A).
pub fn chord_endpoints<R: Rng>(rng: &mut R, e: &Etope, beta0: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let k = kernel(e.constraints(), e.num_generators());
    if k.ncols() == 0 {
        return vec![e.point_at(beta0); count];
    }
    (0..count)
        .map(|_| {
            let u = kernel_direction(rng, &k);
            e.point_at(&(beta0 + &u * reach(e, beta0, &u)))
        })
        .collect()
}

/// `count` points of any set: half chord endpoints, half hit-and-run.
/// `beta0` must be a feasible coefficient vector.
pub fn points_of<R: Rng>(rng: &mut R, e: &Etope, beta0: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let mut pts = chord_endpoints(rng, e, beta0, count / 2);
    pts.extend(hit_and_run(rng, e, beta0, count - count / 2));
    pts
}

/// Support function of an unconstrained set: `max dᵀx` over the set.
pub fn support(e: &Etope, d: &DVector<f64>) -> f64 {
    assert_eq!(e.num_constraints(), 0, "support needs an unconstrained set");
    let gd = e.generators().transpose() * d;
    let q = e.p().dual();
    d.dot(e.center())
        + e.index_set()
            .blocks()
            .iter()
            .map(|b| q.norm(b.iter().map(|&j| gd[j])))
            .sum::<f64>()
}

pub fn circle_directions(count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / count as f64;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect()
}

/// Signed distance to an unconstrained 2-D set from its support function:
/// positive outside (the distance), negative inside (minus the distance to
/// the boundary). The best of the evenly spaced `dirs` is refined by a
/// golden-section search on the angle.
pub fn signed_distance(e: &Etope, x: &DVector<f64>, dirs: &[DVector<f64>]) -> f64 {
    let gap = |d: &DVector<f64>| d.dot(x) - support(e, d);
    let (best, coarse) = dirs
        .iter()
        .enumerate()
        .map(|(i, d)| (i, gap(d)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if x.len() != 2 {
        return coarse;
    }
    let at = |t: f64| gap(&DVector::from_vec(vec![t.cos(), t.sin()]));
    let step = std::f64::consts::TAU / dirs.len() as f64;
    let t0 = dirs[best][1].atan2(dirs[best][0]);
    let (mut lo, mut hi) = (t0 - step, t0 + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if at(a) > at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    coarse.max(at(0.5 * (lo + hi)))
}

/// First two coordinates of each point.
pub fn to_xy(points: &[DVector<f64>]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], p[1]]).collect()
}

/// Fixed single-block planar sets used to compare the two boundary
/// samplers. Covers smooth and polyhedral norms, a projection of a
/// 3-coefficient ball, and sliced sets.
pub fn sampling_shapes() -> Vec<(&'static str, Etope)> {
    use etope::{Halfspace, IndexSet};
    use nalgebra::{dmatrix, dvector};
    let z = || DVector::zeros(2);
    let wide = dmatrix![1.0, 0.0, 0.5; 0.0, 1.0, 0.5];
    let disk = Etope::basic(PNorm::two(), z(), DMatrix::identity(2, 2)).unwrap();
    let cut = Halfspace::new(dvector![1.0, 1.0], 0.5).unwrap();
    vec![
        ("disk", disk.clone()),
        ("ellipse", Etope::basic(PNorm::two(), dvector![1.0, -0.5], dmatrix![2.0, 0.5; 0.0, 1.0]).unwrap()),
        ("p3 ball", Etope::basic(PNorm::Finite(3.0), z(), dmatrix![1.0, 0.3; 0.2, 1.0]).unwrap()),
        ("p1.5 ball", Etope::basic(PNorm::Finite(1.5), z(), dmatrix![0.8, -0.6; 0.6, 0.8]).unwrap()),
        ("square", Etope::basic(PNorm::Inf, z(), DMatrix::identity(2, 2)).unwrap()),
        ("parallelogram", Etope::from_zonotope(z(), dmatrix![1.0, 0.5; 0.0, 1.0]).unwrap()),
        ("projected ball", Etope::basic(PNorm::two(), z(), wide.clone()).unwrap()),
        (
            "sliced ball",
            Etope::new(PNorm::two(), z(), wide, dmatrix![0.0, 0.0, 1.0], dvector![0.5], IndexSet::single_block(3)).unwrap(),
        ),
        ("disk under a halfspace", disk.intersect_halfspace(&cut).unwrap()),
        (
            "sliced p3 ball",
            Etope::new(
                PNorm::Finite(3.0),
                z(),
                dmatrix![1.0, 0.2, 0.0; 0.0, 1.0, 0.4],
                dmatrix![1.0, 1.0, 1.0],
                dvector![0.3],
                IndexSet::single_block(3),
            )
            .unwrap(),
        ),
    ]
}

/// Planar sets with several norm blocks, where coefficient sampling
/// rarely lands on the silhouette.
pub fn multi_block_shapes() -> Vec<(&'static str, Etope)> {
    use etope::IndexSet;
    use nalgebra::{dmatrix, dvector};
    vec![
        ("capsule", Etope::capsule(&dvector![-1.0, 0.0], &dvector![1.0, 0.5], 0.5).unwrap()),
        (
            "disk sum",
            Etope::new(
                PNorm::two(),
                DVector::zeros(2),
                dmatrix![1.0, 0.0, 0.3, 0.0; 0.0, 1.0, 0.0, 0.3],
                DMatrix::zeros(0, 4),
                DVector::zeros(0),
                IndexSet::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap(),
            )
            .unwrap(),
        ),
    ]
}

/// `{x : (x-c)ᵀQ(x-c) ≤ 1}` points, via `Q^{-1/2}` from an eigendecomposition.
pub fn ellipsoid_points<R: Rng>(rng: &mut R, q: &DMatrix<f64>, c: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let eig = q.clone().symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let n = c.len();
    (0..count)
        .map(|i| {
            let u = gaussian_vector(rng, n).normalize();
            // alternate boundary and interior points
            let r = if i % 2 == 0 { 1.0 } else { rng.random::<f64>() };
            c + &inv_sqrt * u * r
        })
        .collect()
}
