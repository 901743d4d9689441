//! Solver benchmarks: emptiness-check timing on random constrained
//! 2-ellipsotopes, and the pair-merge heuristic against true MVOE volumes.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use crate::error::{EtopeError, Result};
use crate::linalg;
use crate::reduce::{heuristic_volume, mvoe_pair};
use crate::set::{Ellipsotope, IndexSet, PNorm};
use crate::Ellipsoid;
use crate::solve::{is_empty, SolverConfig, Verdict};

fn pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map(|p| p.install(f))
        .map_err(|e| EtopeError::Precondition(format!("thread pool: {e}")))
}

fn cell_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |h, &x| h.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(x + 1))
}

fn d_dims() -> Vec<usize> {
    vec![2, 8, 14]
}
fn d_max_m() -> usize {
    20
}
fn d_trials() -> usize {
    10
}
fn d_repeats() -> usize {
    20
}
fn d_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptinessBenchConfig {
    #[serde(default = "d_dims")]
    pub dims: Vec<usize>,
    /// Generator counts `1..=max_m`.
    #[serde(default = "d_max_m")]
    pub max_m: usize,
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Timed repetitions per solve; the mean is recorded.
    #[serde(default = "d_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for EmptinessBenchConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessRow {
    pub n: usize,
    pub m: usize,
    /// `true` for the `b = 2m·1` arm.
    pub empty_arm: bool,
    pub trials: usize,
    pub correct: usize,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

impl EmptinessRow {
    pub const CSV_HEADER: &'static str = "n,m,arm,trials,correct,mean_s,min_s,max_s";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:e}",
            self.n,
            self.m,
            if self.empty_arm { "empty" } else { "nonempty" },
            self.trials,
            self.correct,
            self.mean_s,
            self.min_s,
            self.max_s
        )
    }
}

/// Random 2-ellipsotope in `R^n` with `m` generators of length at most
/// `1/m`, one unit-norm constraint row and a random partition into blocks.
fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, rhs: f64) -> Ellipsotope<f64> {
    let mut g = DMatrix::zeros(n, m);
    for j in 0..m {
        let dir: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let len = rng.random_range(0.0..=1.0) / m as f64;
        g.set_column(j, &(dir.normalize() * len));
    }
    let a: DMatrix<f64> = DMatrix::from_fn(1, m, |_, _| StandardNormal.sample(rng));
    let a = &a / a.norm();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let take = rng.random_range(1..=rest.len().min(3));
        blocks.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    Ellipsotope::new(
        PNorm::two(),
        DVector::zeros(n),
        g,
        a,
        DVector::from_element(1, rhs),
        IndexSet::new(blocks, m).expect("partition"),
    )
    .expect("well-formed instance")
}

/// Times the emptiness check on both arms (`b = 0`, feasible at `β = 0`;
/// `b = 2m`, infeasible because `|Aβ| ≤ ‖β‖ ≤ √m`). Rows are ordered by
/// `(n, m, arm)`.
pub fn emptiness_bench(cfg: &EmptinessBenchConfig) -> Result<Vec<EmptinessRow>> {
    cfg.solver.check()?;
    if cfg.trials == 0 || cfg.repeats == 0 {
        return Err(EtopeError::Precondition("trials and repeats must be positive".into()));
    }
    let cells: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&n| (1..=cfg.max_m).map(move |m| (n, m)))
        .collect();
    let rows = pool(cfg.jobs, || {
        cells
            .par_iter()
            .map(|&(n, m)| {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, &[n as u64, m as u64]));
                let mut out = Vec::with_capacity(2);
                for empty_arm in [false, true] {
                    let rhs = if empty_arm { 2.0 * m as f64 } else { 0.0 };
                    let expect = if empty_arm { Verdict::Empty } else { Verdict::Nonempty };
                    let mut times = Vec::with_capacity(cfg.trials);
                    let mut correct = 0;
                    for _ in 0..cfg.trials {
                        let e = random_instance(&mut rng, n, m, rhs);
                        let start = Instant::now();
                        let mut verdict = Verdict::Inconclusive;
                        for _ in 0..cfg.repeats {
                            verdict = is_empty(&e, &cfg.solver).verdict;
                        }
                        times.push(start.elapsed().as_secs_f64() / cfg.repeats as f64);
                        correct += usize::from(verdict == expect);
                    }
                    out.push(EmptinessRow {
                        n,
                        m,
                        empty_arm,
                        trials: cfg.trials,
                        correct,
                        mean_s: times.iter().sum::<f64>() / times.len() as f64,
                        min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
                        max_s: times.iter().copied().fold(0.0, f64::max),
                    });
                }
                out
            })
            .collect::<Vec<_>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

fn d_components() -> usize {
    6
}
fn d_h_trials() -> usize {
    50
}
fn d_h_repeats() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicBenchConfig {
    pub n: usize,
    #[serde(default = "d_h_trials")]
    pub trials: usize,
    /// Ellipsoids summed per trial.
    #[serde(default = "d_components")]
    pub components: usize,
    #[serde(default = "d_h_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_jobs")]
    pub jobs: usize,
    /// Use identical unit balls instead of random ellipsoids.
    #[serde(default)]
    pub identical: bool,
}

impl HeuristicBenchConfig {
    pub fn new(n: usize, trials: usize) -> Self {
        Self {
            n,
            trials,
            components: d_components(),
            repeats: d_h_repeats(),
            seed: 0,
            jobs: 1,
            identical: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSample {
    pub trial: usize,
    pub i: usize,
    pub j: usize,
    /// `√det(Q⊕⁻¹)`, proportional to the MVOE volume.
    pub mvoe_volume: f64,
    pub heuristic: f64,
    pub mvoe_s: f64,
    pub heuristic_s: f64,
}

impl HeuristicSample {
    pub const CSV_HEADER: &'static str = "trial,i,j,mvoe_volume,heuristic,mvoe_s,heuristic_s";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e},{:e}",
            self.trial, self.i, self.j, self.mvoe_volume, self.heuristic, self.mvoe_s, self.heuristic_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicReport {
    pub n: usize,
    pub samples: Vec<HeuristicSample>,
    /// Squared Pearson correlation; `None` when either series is constant.
    pub r2: Option<f64>,
    pub tie: bool,
    pub mean_mvoe_s: f64,
    pub mean_heuristic_s: f64,
}

/// Squared Pearson correlation, or `None` for a (numerically) constant
/// series.
pub fn pearson_r2(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let flat = |v: &[f64]| {
        let sd = v.std_dev();
        let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        !(sd > 1e-9 * scale)
    };
    if flat(x) || flat(y) {
        return None;
    }
    let r = x.covariance(y) / (x.std_dev() * y.std_dev());
    Some(r * r)
}

/// For every trial, sums `components` random ellipsoids `{Gβ : ‖β‖ ≤ 1}`
/// with `G` uniform in `[−1/√n, 1/√n]`, and scores every pair both ways.
pub fn reduction_heuristic_bench(cfg: &HeuristicBenchConfig) -> Result<HeuristicReport> {
    let n = cfg.n;
    if n < 2 || cfg.components < 2 || cfg.trials == 0 || cfg.repeats == 0 {
        return Err(EtopeError::Precondition(
            "need n ≥ 2, at least two components, and positive trials/repeats".into(),
        ));
    }
    let bound = 1.0 / (n as f64).sqrt();
    let per_trial = pool(cfg.jobs, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<HeuristicSample>> {
                let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(cfg.seed, &[n as u64, trial as u64]));
                let gens: Vec<DMatrix<f64>> = (0..cfg.components)
                    .map(|_| {
                        if cfg.identical {
                            DMatrix::identity(n, n)
                        } else {
                            DMatrix::from_fn(n, n, |_, _| rng.random_range(-bound..=bound))
                        }
                    })
                    .collect();
                let shapes: Vec<Ellipsoid> = gens
                    .iter()
                    .map(|g| Ellipsoid::new(DVector::zeros(n), linalg::inv_pd(&(g * g.transpose()))?))
                    .collect::<Result<_>>()?;
                let mut out = Vec::new();
                for i in 0..cfg.components {
                    for j in i + 1..cfg.components {
                        let t = Instant::now();
                        let mut heuristic = 0.0;
                        for _ in 0..cfg.repeats {
                            let qi = &gens[i] * gens[i].transpose();
                            let qj = &gens[j] * gens[j].transpose();
                            heuristic = heuristic_volume(&qi, &qj);
                        }
                        let heuristic_s = t.elapsed().as_secs_f64() / cfg.repeats as f64;
                        let t = Instant::now();
                        let mut q_sum = DMatrix::zeros(0, 0);
                        for _ in 0..cfg.repeats {
                            q_sum = mvoe_pair(&shapes[i], &shapes[j])?.q_sum;
                        }
                        let mvoe_s = t.elapsed().as_secs_f64() / cfg.repeats as f64;
                        out.push(HeuristicSample {
                            trial,
                            i,
                            j,
                            mvoe_volume: 1.0 / q_sum.determinant().sqrt(),
                            heuristic,
                            mvoe_s,
                            heuristic_s,
                        });
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let samples: Vec<HeuristicSample> = per_trial.into_iter().flatten().collect();
    let vols: Vec<f64> = samples.iter().map(|s| s.mvoe_volume).collect();
    let heur: Vec<f64> = samples.iter().map(|s| s.heuristic).collect();
    let r2 = pearson_r2(&vols, &heur);
    let count = samples.len() as f64;
    Ok(HeuristicReport {
        n,
        r2,
        tie: r2.is_none(),
        mean_mvoe_s: samples.iter().map(|s| s.mvoe_s).sum::<f64>() / count,
        mean_heuristic_s: samples.iter().map(|s| s.heuristic_s).sum::<f64>() / count,
        samples,
    })
}
