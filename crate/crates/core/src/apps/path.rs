//! Reachable-tube collision checking for a Dubins robot with a rectangular
//! body, Gaussian state uncertainty and range-beacon measurements.
//!
//! Per step the reachable set is the heading-swept body (circumscribing
//! circle cut by four halfspaces) plus the position confidence ellipse.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{as_two_norm, box_set, rows};
use crate::error::{EtopeError, Result};
use crate::linalg::sqrtm_pd;
use crate::set::{Ellipsotope, Halfspace, PNorm};
use crate::solve::{is_empty, SolverConfig, Verdict};
use crate::viz::sample_boundary_ray_to;

/// Constant `(v, ω)` held for `steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub v: f64,
    pub omega: f64,
    pub steps: usize,
}

fn d_width() -> f64 {
    1.0
}
fn d_length() -> f64 {
    2.0
}
fn d_dt() -> f64 {
    0.1
}
fn d_segments() -> Vec<Segment> {
    vec![
        Segment { v: 3.0, omega: 0.0, steps: 60 },
        Segment { v: 3.0, omega: 0.2, steps: 27 },
        Segment { v: 3.0, omega: 0.0, steps: 40 },
    ]
}
fn d_q() -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![1e-3, 1e-3, 1e-4]))
}
fn d_sigma0() -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_vec(vec![1e-2, 1e-2, 1e-3]))
}
fn d_beacons() -> Vec<[f64; 2]> {
    vec![[0.0, 15.0], [40.0, 15.0], [0.0, -15.0], [40.0, -15.0]]
}
fn d_low() -> f64 {
    0.4
}
fn d_high() -> f64 {
    10.0
}
fn d_boundary() -> f64 {
    30.0
}
fn d_heading_var() -> f64 {
    1e-3
}
fn d_alpha() -> f64 {
    0.95
}
fn d_samples() -> usize {
    64
}
fn d_ray_tol() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotScenario {
    #[serde(default = "d_width")]
    pub body_width: f64,
    #[serde(default = "d_length")]
    pub body_length: f64,
    #[serde(default = "d_dt")]
    pub dt: f64,
    /// Initial pose `[x1, x2, θ]`.
    #[serde(default)]
    pub start: [f64; 3],
    #[serde(default = "d_segments")]
    pub segments: Vec<Segment>,
    #[serde(default = "d_q", with = "rows")]
    pub process_noise: DMatrix<f64>,
    #[serde(default = "d_sigma0", with = "rows")]
    pub initial_covariance: DMatrix<f64>,
    #[serde(default = "d_beacons")]
    pub beacons: Vec<[f64; 2]>,
    /// Range variance where `x1 < noise_boundary`.
    #[serde(default = "d_low")]
    pub range_var_low: f64,
    #[serde(default = "d_high")]
    pub range_var_high: f64,
    #[serde(default = "d_boundary")]
    pub noise_boundary: f64,
    #[serde(default = "d_heading_var")]
    pub heading_var: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    /// `None` plants one obstacle on the path and one 10 m beside it.
    #[serde(default)]
    pub obstacles: Option<Vec<Ellipsotope<f64>>>,
    /// Boundary rays per step for the area estimate.
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Also measure areas at this multiple of `samples`.
    #[serde(default)]
    pub refine_factor: Option<usize>,
    /// Absolute tolerance on each boundary ray length.
    #[serde(default = "d_ray_tol")]
    pub ray_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for RobotScenario {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RobotScenario {
    pub fn steps(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(EtopeError::Precondition(m.into()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.body_width > 0.0 && self.body_length > 0.0) {
            return bad("body dimensions must be positive");
        }
        if !(self.dt > 0.0 && self.ray_tol > 0.0) || self.samples < 3 {
            return bad("dt and ray_tol must be positive and samples at least 3");
        }
        if self.process_noise.shape() != (3, 3) || self.initial_covariance.shape() != (3, 3) {
            return Err(EtopeError::Dimension("covariances must be 3x3".into()));
        }
        if !(self.range_var_low > 0.0 && self.range_var_high > 0.0 && self.heading_var > 0.0) {
            return bad("measurement variances must be positive");
        }
        if let Some(obs) = &self.obstacles {
            if obs.iter().any(|o| o.dim() != 2) {
                return Err(EtopeError::Dimension("obstacles must be planar".into()));
            }
        }
        self.solver.check()
    }

    /// Radius of the body's circumscribing circle.
    pub fn body_radius(&self) -> f64 {
        0.5 * self.body_width.hypot(self.body_length)
    }

    /// Explicit obstacles, or the planted pair: a 1 m box on the nominal
    /// path at mid-trajectory and the same box 10 m to its left.
    pub fn obstacle_sets(&self) -> Result<Vec<Ellipsotope<f64>>> {
        match &self.obstacles {
            Some(obs) => obs.iter().map(as_two_norm).collect(),
            None => {
                let traj = nominal_trajectory(self);
                let [x, y, th] = traj[traj.len() / 2];
                let side = DVector::from_vec(vec![-th.sin(), th.cos()]) * 10.0;
                let on = DVector::from_vec(vec![x, y]);
                Ok(vec![box_set(on.clone(), &[0.5, 0.5]), box_set(on + side, &[0.5, 0.5])])
            }
        }
    }
}

/// Noise-free poses `x̌(0..=T)`.
pub fn nominal_trajectory(s: &RobotScenario) -> Vec<[f64; 3]> {
    let mut out = vec![s.start];
    let mut x = s.start;
    for seg in &s.segments {
        for _ in 0..seg.steps {
            x = [
                x[0] + seg.v * x[2].cos() * s.dt,
                x[1] + seg.v * x[2].sin() * s.dt,
                x[2] + seg.omega * s.dt,
            ];
            out.push(x);
        }
    }
    out
}

/// Normals and offsets `(h, s)` of the halfspaces `hᵀx ≤ s` bounding the
/// body swept over headings `θ ± Δ`. Normals follow the body axes at `θ`;
/// an offset is the largest support over the heading interval. Offsets that
/// reach the circumscribing radius are dropped as redundant.
pub fn heading_halfspaces(
    width: f64,
    length: f64,
    theta: f64,
    delta: f64,
) -> Vec<(DVector<f64>, f64)> {
    let radius = 0.5 * width.hypot(length);
    let support = |along: f64, across: f64| {
        // max over |δ| ≤ Δ of along·cos δ + across·sin |δ|.
        if delta >= (across / along).atan() {
            radius
        } else {
            along * delta.cos() + across * delta.sin()
        }
    };
    let (hl, hw) = (0.5 * length, 0.5 * width);
    let u = DVector::from_vec(vec![theta.cos(), theta.sin()]);
    let n = DVector::from_vec(vec![-theta.sin(), theta.cos()]);
    let mut out = Vec::new();
    for (dir, s) in [(u, support(hl, hw)), (n, support(hw, hl))] {
        if s < radius * (1.0 - 1e-12) {
            out.push((-&dir, s));
            out.push((dir, s));
        }
    }
    out
}

/// Zero-centred set covering the body at every heading in `θ ± Δ`.
/// Above `Δ = π/4` the plain circumscribing circle is used.
pub fn swept_body(width: f64, length: f64, theta: f64, delta: f64) -> Result<Ellipsotope<f64>> {
    let radius = 0.5 * width.hypot(length);
    let mut body = Ellipsotope::basic(
        PNorm::two(),
        DVector::zeros(2),
        DMatrix::identity(2, 2) * radius,
    )?;
    if delta <= FRAC_PI_4 {
        for (h, s) in heading_halfspaces(width, length, theta, delta) {
            body = body.intersect_halfspace(&Halfspace::new(h, s)?)?;
        }
    }
    Ok(body)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleVerdict {
    pub obstacle: usize,
    /// Solver verdict on `reach ∩ obstacle`.
    pub verdict: Verdict,
    /// Collision unless emptiness is certified.
    pub collides: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeStep {
    pub t: usize,
    pub nominal: [f64; 3],
    pub delta_theta: f64,
    pub reach: Ellipsotope<f64>,
    pub area: f64,
    #[serde(default)]
    pub area_refined: Option<f64>,
    pub verdicts: Vec<ObstacleVerdict>,
    pub time_reach_ms: f64,
    pub time_check_ms: f64,
    pub time_area_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    pub obstacles: Vec<Ellipsotope<f64>>,
    pub steps: Vec<TubeStep>,
    /// Obstacles hit at any step.
    pub colliding_obstacles: Vec<usize>,
    pub total_area: f64,
    /// Largest relative area change between base and refined sampling.
    #[serde(default)]
    pub max_area_change: Option<f64>,
    pub time_total_ms: f64,
}

impl TubeReport {
    /// Re-runs every emptiness check from the stored sets and reports the
    /// steps whose verdict differs.
    pub fn reverify(&self, cfg: &SolverConfig) -> Result<Vec<(usize, usize)>> {
        let mut mismatches = Vec::new();
        for step in &self.steps {
            for v in &step.verdicts {
                let hit = step.reach.intersect(&self.obstacles[v.obstacle])?;
                if is_empty(&hit, cfg).verdict != v.verdict {
                    mismatches.push((step.t, v.obstacle));
                }
            }
        }
        Ok(mismatches)
    }
}

fn range_jacobian(p: [f64; 2], beacons: &[[f64; 2]]) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(beacons.len() + 1, 3);
    for (i, b) in beacons.iter().enumerate() {
        let (dx, dy) = (p[0] - b[0], p[1] - b[1]);
        let r = dx.hypot(dy).max(1e-9);
        c[(i, 0)] = dx / r;
        c[(i, 1)] = dy / r;
    }
    c[(beacons.len(), 2)] = 1.0;
    c
}

/// Linearised filter covariance along the nominal trajectory: predict with
/// the motion Jacobian, update with beacon ranges and heading. The
/// position-heading coupling is zeroed after each update.
fn covariances(s: &RobotScenario, traj: &[[f64; 3]]) -> Result<Vec<Matrix3<f64>>> {
    let q = Matrix3::from_iterator(s.process_noise.iter().copied());
    let mut sigma = Matrix3::from_iterator(s.initial_covariance.iter().copied());
    let inputs: Vec<Segment> = s
        .segments
        .iter()
        .flat_map(|seg| std::iter::repeat_n(*seg, seg.steps))
        .collect();
    let mut out = Vec::with_capacity(inputs.len());
    for (t, seg) in inputs.iter().enumerate() {
        let th = traj[t][2];
        let mut a = Matrix3::identity();
        a[(0, 2)] = -seg.v * th.sin() * s.dt;
        a[(1, 2)] = seg.v * th.cos() * s.dt;
        let prior = a * sigma * a.transpose() + q;
        let next = traj[t + 1];
        let c = range_jacobian([next[0], next[1]], &s.beacons);
        let var = if next[0] < s.noise_boundary { s.range_var_low } else { s.range_var_high };
        let mut r = DMatrix::identity(c.nrows(), c.nrows()) * var;
        r[(c.nrows() - 1, c.nrows() - 1)] = s.heading_var;
        let p = DMatrix::from_iterator(3, 3, prior.iter().copied());
        let innov = &c * &p * c.transpose() + r;
        let gain = &p * c.transpose() * innov.try_inverse().ok_or_else(|| {
            EtopeError::NotPositiveDefinite(format!("innovation covariance at step {}", t + 1))
        })?;
        let post = (DMatrix::identity(3, 3) - &gain * &c) * p;
        let mut post = Matrix3::from_iterator(post.iter().copied());
        post = (post + post.transpose()) * 0.5;
        for i in 0..2 {
            post[(i, 2)] = 0.0;
            post[(2, i)] = 0.0;
        }
        if post.cholesky().is_none() {
            return Err(EtopeError::NotPositiveDefinite(format!(
                "state covariance at step {}",
                t + 1
            )));
        }
        sigma = post;
        out.push(post);
    }
    Ok(out)
}

/// Builds the reachable tube, checks each obstacle and estimates areas.
pub fn path_verification_sim(s: &RobotScenario) -> Result<TubeReport> {
    s.check()?;
    let start = Instant::now();
    let traj = nominal_trajectory(s);
    let covs = covariances(s, &traj)?;
    let obstacles = s.obstacle_sets()?;
    let eps = -2.0 * (1.0 - s.alpha).ln();
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + s.alpha));

    let mut steps = Vec::with_capacity(covs.len());
    let mut colliding = vec![false; obstacles.len()];
    let (mut total_area, mut max_change) = (0.0, None::<f64>);
    for (i, sigma) in covs.iter().enumerate() {
        let t = i + 1;
        let pose = traj[t];
        let t0 = Instant::now();
        let delta = z * sigma[(2, 2)].sqrt();
        let sp = DMatrix::from_fn(2, 2, |r, c| eps * sigma[(r, c)]);
        let unc = Ellipsotope::basic(
            PNorm::two(),
            DVector::from_vec(vec![pose[0], pose[1]]),
            sqrtm_pd(&sp)?,
        )?;
        let reach = swept_body(s.body_width, s.body_length, pose[2], delta)?.minkowski_sum(&unc)?;
        let time_reach_ms = t0.elapsed().as_secs_f64() * 1e3;

        let t1 = Instant::now();
        let mut verdicts = Vec::with_capacity(obstacles.len());
        for (k, obs) in obstacles.iter().enumerate() {
            let res = is_empty(&reach.intersect(obs)?, &s.solver);
            let collides = res.verdict != Verdict::Empty;
            colliding[k] |= collides;
            verdicts.push(ObstacleVerdict {
                obstacle: k,
                verdict: res.verdict,
                collides,
                residual: res.residual,
            });
        }
        let time_check_ms = t1.elapsed().as_secs_f64() * 1e3;

        let t2 = Instant::now();
        let area = sample_boundary_ray_to(&reach, s.samples, s.seed, &s.solver, s.ray_tol)?.area();
        let area_refined = match s.refine_factor {
            Some(f) if f > 1 => {
                let fine = sample_boundary_ray_to(&reach, s.samples * f, s.seed, &s.solver, s.ray_tol)?.area();
                let change = (fine - area).abs() / fine.max(f64::MIN_POSITIVE);
                max_change = Some(max_change.map_or(change, |m| m.max(change)));
                Some(fine)
            }
            _ => None,
        };
        let time_area_ms = t2.elapsed().as_secs_f64() * 1e3;
        total_area += area;
        steps.push(TubeStep {
            t,
            nominal: pose,
            delta_theta: delta,
            reach,
            area,
            area_refined,
            verdicts,
            time_reach_ms,
            time_check_ms,
            time_area_ms,
        });
    }
    Ok(TubeReport {
        obstacles,
        steps,
        colliding_obstacles: (0..colliding.len()).filter(|&k| colliding[k]).collect(),
        total_area,
        max_area_change: max_change,
        time_total_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
