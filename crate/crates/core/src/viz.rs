//! Boundary sampling of 2-D and 3-D ellipsotopes and polygon output.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::set::Ellipsotope;
use crate::solve::{self, SolverConfig};

/// Bisection tolerance on the coefficient step length.
pub const COEFF_TOL: f64 = 1e-10;

/// Points on (or near) the boundary of a set, with the order in which they
/// form a convex polygon. In 3-D no hull is computed and `hull_order` lists
/// every point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample<T: Scalar> {
    pub points: Vec<DVector<T>>,
    pub hull_order: Vec<usize>,
}

impl<T: Scalar> BoundarySample<T> {
    fn new(points: Vec<DVector<T>>) -> Self {
        let hull_order = if points.first().is_some_and(|p| p.len() == 2) {
            convex_hull_2d(&points)
        } else {
            (0..points.len()).collect()
        };
        Self { points, hull_order }
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// Hull vertices in counterclockwise order (2-D only).
    pub fn polygon(&self) -> Vec<[f64; 2]> {
        self.hull_order
            .iter()
            .map(|&i| [self.points[i][0].as_f64(), self.points[i][1].as_f64()])
            .collect()
    }

    /// Area enclosed by the hull polygon; zero outside 2-D.
    pub fn area(&self) -> f64 {
        if self.dim() != 2 {
            return 0.0;
        }
        polygon_area(&self.polygon())
    }
}

fn check_plot_dim<T: Scalar>(e: &Ellipsotope<T>) -> Result<()> {
    if !(2..=3).contains(&e.dim()) {
        return Err(EtopeError::Unsupported(format!(
            "boundary sampling needs a 2-D or 3-D set, got R^{}",
            e.dim()
        )));
    }
    Ok(())
}

fn witness<T: Scalar>(e: &Ellipsotope<T>, cfg: &SolverConfig) -> Result<DVector<T>> {
    let r = solve::is_empty(e, cfg);
    match r.empty() {
        Some(false) => Ok(r.beta),
        Some(true) => Err(EtopeError::EmptySet("cannot sample the boundary of an empty set".into())),
        None => Err(EtopeError::NoConvergence(format!(
            "emptiness check inconclusive after {} iterations",
            r.iterations
        ))),
    }
}

/// Unit directions: evenly spaced angles in 2-D, a Fibonacci lattice in 3-D.
/// Seed 0 gives the unrotated scheme, other seeds a random rotation offset.
pub fn directions(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let offset = if seed == 0 {
        0.0
    } else {
        ChaCha8Rng::seed_from_u64(seed).random::<f64>()
    };
    let tau = std::f64::consts::TAU;
    match dim {
        2 => (0..count)
            .map(|k| {
                let t = tau * (k as f64 + offset) / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * k as f64 + tau * offset;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
    }
}

/// Samples the boundary by ray tracing from an interior point along
/// `n_points` evenly spread directions.
pub fn sample_boundary_ray<T: Scalar>(
    e: &Ellipsotope<T>,
    n_points: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<BoundarySample<T>> {
    sample_boundary_ray_to(e, n_points, seed, cfg, solve::RAY_TOL)
}

/// [`sample_boundary_ray`] with a caller-chosen tolerance on each ray length.
pub fn sample_boundary_ray_to<T: Scalar>(
    e: &Ellipsotope<T>,
    n_points: usize,
    seed: u64,
    cfg: &SolverConfig,
    ray_tol: f64,
) -> Result<BoundarySample<T>> {
    check_plot_dim(e)?;
    let beta = witness(e, cfg)?;
    let start = e.point_at(&beta);
    let n = e.dim();
    // average of axis-aligned boundary hits lies inside even when the witness is on the boundary
    let mut origin = DVector::zeros(n);
    for i in 0..n {
        for s in [T::one(), -T::one()] {
            let mut g = DVector::zeros(n);
            g[i] = s;
            let l = solve::ray_trace_to(e, &start, &g, cfg, ray_tol)?;
            origin += &start + g * l;
        }
    }
    let origin = origin / T::from_usize_lossy(2 * n);
    let dirs = directions(n, n_points, seed);
    let points: Vec<DVector<T>> = dirs
        .par_iter()
        .map(|d| {
            let g = d.map(T::lit);
            let l = solve::ray_trace_to(e, &origin, &g, cfg, ray_tol)?;
            Ok(&origin + g * l)
        })
        .collect::<Result<_>>()?;
    Ok(BoundarySample::new(points))
}

/// Largest step `α` with `β₀ + αu` still in the ball product, by bisection.
fn coefficient_step<T: Scalar>(e: &Ellipsotope<T>, beta0: &DVector<T>, u: &DVector<T>) -> T {
    let p = e.p();
    let blocks = e.index_set().blocks();
    let excess = |a: T| {
        let b = beta0 + u * a;
        blocks
            .iter()
            .map(|blk| p.norm_of(b.as_slice(), blk))
            .fold(T::zero(), |acc, v| acc.max(v))
            - T::one()
    };
    let mut hi = T::one();
    let mut guard = 0;
    while excess(hi) <= T::zero() && guard < 200 {
        hi *= T::lit(2.0);
        guard += 1;
    }
    let mut lo = T::zero();
    let tol = T::tol(COEFF_TOL);
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Samples the boundary by walking from a feasible coefficient vector along
/// directions in the kernel of `A` until a block norm reaches 1, and mapping
/// the results through `c + Gβ`. Kernels of dimension 2 or 3 use the
/// [`directions`] scheme in kernel coordinates, larger ones Gaussian
/// directions; both are fixed by `seed`.
pub fn sample_boundary_coeff<T: Scalar>(
    e: &Ellipsotope<T>,
    n_points: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<BoundarySample<T>> {
    check_plot_dim(e)?;
    let beta_w = witness(e, cfg)?;
    let kernel = if e.num_constraints() == 0 {
        DMatrix::identity(e.num_generators(), e.num_generators())
    } else {
        linalg::null_space(e.constraints())
    };
    let d = kernel.ncols();
    if d == 0 {
        return Ok(BoundarySample::new(vec![e.point_at(&beta_w)]));
    }
    // recenter: the mean of the ±basis endpoints is feasible and away from the boundary
    let mut beta0 = DVector::zeros(e.num_generators());
    for i in 0..d {
        for s in [T::one(), -T::one()] {
            let u = kernel.column(i) * s;
            let a = coefficient_step(e, &beta_w, &u);
            beta0 += &beta_w + u * a;
        }
    }
    let beta0 = beta0 / T::from_usize_lossy(2 * d);
    // Low-dimensional kernels get the evenly spread scheme of the ray method;
    // random directions leave wide gaps at these sample counts.
    let dirs: Vec<DVector<T>> = if d == 2 || d == 3 {
        directions(d, n_points, seed)
            .into_iter()
            .map(|z| &kernel * z.map(T::lit))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_points)
            .map(|_| loop {
                let z = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
                let nz = z.norm();
                if nz > 1e-12 {
                    break &kernel * (z / nz).map(T::lit);
                }
            })
            .collect()
    };
    let points = dirs
        .par_iter()
        .map(|u| {
            let a = coefficient_step(e, &beta0, u);
            e.point_at(&(&beta0 + u * a))
        })
        .collect();
    Ok(BoundarySample::new(points))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counterclockwise hull by the monotone chain, dropping collinear points.
/// Returns indices into `points`.
pub fn convex_hull_2d<T: Scalar>(points: &[DVector<T>]) -> Vec<usize> {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect();
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a]
            .partial_cmp(&pts[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs())).max(1.0);
    let eps = 1e-14 * scale * scale;
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in 0..2 {
        let start = hull.len();
        let seq: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in seq {
            while hull.len() >= start + 2
                && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= eps
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        // all points collinear: keep the two extremes
        return vec![idx[0], idx[idx.len() - 1]];
    }
    hull
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let s: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * s.abs()
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Distance from `p` to the convex polygon `poly` (counterclockwise); zero inside.
pub fn distance_to_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => ((p[0] - poly[0][0]).powi(2) + (p[1] - poly[0][1]).powi(2)).sqrt(),
        n => {
            let inside = n >= 3 && (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= 0.0);
            if inside {
                return 0.0;
            }
            (0..n)
                .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Hausdorff distance between two convex polygons (as filled regions).
pub fn hausdorff_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one_way = |x: &[[f64; 2]], y: &[[f64; 2]]| {
        x.iter().map(|&p| distance_to_polygon(p, y)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Svg,
}

fn fmt_num(x: f64) -> String {
    // avoid "-0" in output
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

/// Renders a 2-D sample: CSV rows `x,y` in hull order closed by the first
/// vertex, or an SVG with one closed path (y axis pointing up).
pub fn render_polygon<T: Scalar>(sample: &BoundarySample<T>, format: PlotFormat) -> Result<String> {
    if sample.dim() != 2 {
        return Err(EtopeError::Unsupported(format!(
            "polygon output needs a 2-D sample, got {}-D",
            sample.dim()
        )));
    }
    let poly = sample.polygon();
    match format {
        PlotFormat::Csv => {
            let mut out = String::new();
            for v in &poly {
                writeln!(out, "{},{}", fmt_num(v[0]), fmt_num(v[1])).expect("string write");
            }
            if poly.len() > 1 {
                writeln!(out, "{},{}", fmt_num(poly[0][0]), fmt_num(poly[0][1])).expect("string write");
            }
            Ok(out)
        }
        PlotFormat::Svg => {
            let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for v in &poly {
                x0 = x0.min(v[0]);
                x1 = x1.max(v[0]);
                y0 = y0.min(-v[1]);
                y1 = y1.max(-v[1]);
            }
            let pad = |lo: f64, hi: f64| {
                let span = hi - lo;
                if span > 0.0 { 0.05 * span } else { 0.05 * lo.abs().max(1.0) }
            };
            let (px, py) = (pad(x0, x1), pad(y0, y1));
            let mut d = String::new();
            for (i, v) in poly.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                write!(d, "{cmd}{} {} ", fmt_num(v[0]), fmt_num(-v[1])).expect("string write");
            }
            d.push('Z');
            let w = x1 - x0 + 2.0 * px;
            let h = y1 - y0 + 2.0 * py;
            let stroke = 0.005 * w.max(h);
            Ok(format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
                 <path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>\n</svg>\n",
                fmt_num(x0 - px),
                fmt_num(y0 - py),
                fmt_num(w),
                fmt_num(h),
                fmt_num(stroke)
            ))
        }
    }
}

/// Writes [`render_polygon`] output to `path`.
pub fn emit_polygon<T: Scalar>(sample: &BoundarySample<T>, format: PlotFormat, path: &Path) -> Result<()> {
    let text = render_polygon(sample, format)?;
    std::fs::write(path, text).map_err(|e| EtopeError::Io(format!("{}: {e}", path.display())))
}
