//! Set-based fault detection for a linear system.
//!
//! The estimator runs the nominal model while the true state evolves under
//! the faulty one. Each step predicts `X̄ = A X ⊕ B u ⊕ D W`, then intersects
//! it with the measurement-consistent set `{x : Cx ∈ y ⊕ (−V)}`. An empty
//! intersection means the measurement cannot be explained by the nominal
//! model, so a fault is declared.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{as_two_norm, box_set, rows, sample_uniform};
use crate::error::{EtopeError, Result};
use crate::ops::AffineMap;
use crate::set::Ellipsotope;
use crate::solve::{is_empty, SolverConfig, Verdict};

/// `x⁺ = A x + B u + D w`, `y = C x + v` with `w ∈ W`, `v ∈ V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystemModel {
    #[serde(with = "rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "rows")]
    pub b: DMatrix<f64>,
    #[serde(with = "rows")]
    pub c: DMatrix<f64>,
    #[serde(with = "rows")]
    pub d: DMatrix<f64>,
    pub w: Ellipsotope<f64>,
    pub v: Ellipsotope<f64>,
}

impl LinearSystemModel {
    fn matrices(scale: f64, d: [[f64; 2]; 2], dt: f64) -> Self {
        Self {
            a: DMatrix::identity(2, 2) * (scale * dt),
            b: DMatrix::from_column_slice(2, 1, &[scale * dt, 0.0]),
            c: DMatrix::identity(2, 2),
            d: DMatrix::from_row_slice(2, 2, &[d[0][0], d[0][1], d[1][0], d[1][1]]),
            w: box_set(DVector::zeros(2), &[0.1, 0.1]),
            v: box_set(DVector::zeros(2), &[0.003, 0.003]),
        }
    }

    /// Reference nominal model with step `dt`.
    pub fn nominal(dt: f64) -> Self {
        Self::matrices(1.0, [[-0.1, -0.2], [-0.2, 0.1]], dt)
    }

    /// Reference faulty model with step `dt`.
    pub fn faulty(dt: f64) -> Self {
        Self::matrices(2.0, [[-0.2, -0.2], [-0.1, 0.1]], dt)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn check(&self, inputs: usize) -> Result<()> {
        let n = self.a.nrows();
        let dim = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(EtopeError::Dimension(format!("model matrix {what} has inconsistent shape")))
            }
        };
        dim("A", self.a.ncols() == n)?;
        dim("B", self.b.nrows() == n && self.b.ncols() == inputs)?;
        dim("C", self.c.ncols() == n)?;
        dim("D", self.d.nrows() == n && self.d.ncols() == self.w.dim())?;
        dim("V", self.v.dim() == self.c.nrows())?;
        Ok(())
    }
}

fn default_dt() -> f64 {
    0.001
}
fn default_horizon() -> usize {
    100
}
fn default_runs() -> usize {
    5
}
fn default_input() -> Vec<f64> {
    vec![1.0]
}
fn default_x0() -> Ellipsotope<f64> {
    box_set(DVector::zeros(2), &[0.1, 0.1])
}

/// Scenario configuration. Missing models fall back to the reference
/// matrices built from `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultScenario {
    #[serde(default)]
    pub nominal: Option<LinearSystemModel>,
    #[serde(default)]
    pub faulty: Option<LinearSystemModel>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of seeded runs in a sweep (seeds `seed, seed+1, …`).
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Constant input `u`.
    #[serde(default = "default_input")]
    pub input: Vec<f64>,
    /// Initial estimate; the true initial state is drawn from it.
    #[serde(default = "default_x0")]
    pub initial_set: Ellipsotope<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for FaultScenario {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl FaultScenario {
    pub fn nominal_model(&self) -> LinearSystemModel {
        self.nominal.clone().unwrap_or_else(|| LinearSystemModel::nominal(self.dt))
    }

    pub fn faulty_model(&self) -> LinearSystemModel {
        self.faulty.clone().unwrap_or_else(|| LinearSystemModel::faulty(self.dt))
    }

    /// Control run: the truth follows the nominal model.
    pub fn control(&self) -> Self {
        Self {
            faulty: Some(self.nominal_model()),
            ..self.clone()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(EtopeError::Precondition("dt must be positive".into()));
        }
        let (nom, fty) = (self.nominal_model(), self.faulty_model());
        nom.check(self.input.len())?;
        fty.check(self.input.len())?;
        if nom.state_dim() != fty.state_dim() || nom.c.nrows() != fty.c.nrows() {
            return Err(EtopeError::Dimension("nominal and faulty models differ in size".into()));
        }
        if self.initial_set.dim() != nom.state_dim() {
            return Err(EtopeError::Dimension("initial set has the wrong dimension".into()));
        }
        self.solver.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultStep {
    pub t: usize,
    pub verdict: Verdict,
    /// Squared constraint residual at the solver's final iterate.
    pub residual: f64,
    pub iterations: usize,
    pub generators: usize,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultReport {
    pub seed: u64,
    /// First step whose measurement contradicts the estimate.
    pub detection_step: Option<usize>,
    pub steps: Vec<FaultStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSweep {
    pub runs: Vec<FaultReport>,
    pub detected_runs: usize,
    pub mean_detection_step: Option<f64>,
    pub std_detection_step: Option<f64>,
    /// Detections in the control runs (truth follows the nominal model).
    pub control_detections: usize,
}

/// Interval hull of the set with its constraints dropped, as 2-norm
/// singletons. Used to keep the estimate's size fixed between steps.
fn interval_hull(e: &Ellipsotope<f64>) -> Ellipsotope<f64> {
    let radius: Vec<f64> = (0..e.dim()).map(|i| e.generators().row(i).abs().sum()).collect();
    box_set(e.center().clone(), &radius)
}

/// One simulation with the scenario's own seed.
pub fn fault_detection_sim(s: &FaultScenario) -> Result<FaultReport> {
    run(s, s.seed)
}

fn run(s: &FaultScenario, seed: u64) -> Result<FaultReport> {
    s.check()?;
    let nom = s.nominal_model();
    let fty = s.faulty_model();
    let self_test = nom == fty;
    let (w_nom, v_nom) = (as_two_norm(&nom.w)?, as_two_norm(&nom.v)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DVector::from_column_slice(&s.input);

    let noise = AffineMap::linear(nom.d.clone());
    let drive = &nom.b * &u;
    let neg_v = v_nom.scale(-1.0);
    let mut estimate = as_two_norm(&s.initial_set)?;
    let mut x = sample_uniform(&s.initial_set, &mut rng)?;
    let mut steps = Vec::with_capacity(s.horizon);
    let mut detection_step = None;

    for t in 1..=s.horizon {
        let w = sample_uniform(&fty.w, &mut rng)?;
        x = &fty.a * &x + &fty.b * &u + &fty.d * w;
        let y = &fty.c * &x + sample_uniform(&fty.v, &mut rng)?;

        let start = Instant::now();
        let prior = interval_hull(&estimate)
            .affine_map(&AffineMap::linear(nom.a.clone()))?
            .translate(&drive)?
            .minkowski_sum(&w_nom.affine_map(&noise)?)?;
        let measured = neg_v.translate(&y)?;
        let posterior = prior.intersect_generalized(&measured, &nom.c)?;
        let res = is_empty(&posterior, &s.solver);
        let time_ms = start.elapsed().as_secs_f64() * 1e3;

        steps.push(FaultStep {
            t,
            verdict: res.verdict,
            residual: res.residual,
            iterations: res.iterations,
            generators: posterior.num_generators(),
            time_ms,
        });
        match res.verdict {
            Verdict::Empty if self_test => {
                return Err(EtopeError::Precondition(format!(
                    "estimate became empty at step {t} with truth following the nominal model"
                )));
            }
            Verdict::Empty => {
                detection_step = Some(t);
                break;
            }
            Verdict::Nonempty => estimate = posterior,
            // Keep the prediction: the update could not be certified.
            Verdict::Inconclusive => estimate = prior,
        }
    }
    Ok(FaultReport {
        seed,
        detection_step,
        steps,
    })
}

/// `runs` seeded simulations plus a control run per seed, merged in seed
/// order.
pub fn fault_detection_sweep(s: &FaultScenario) -> Result<FaultSweep> {
    s.check()?;
    let seeds: Vec<u64> = (0..s.runs as u64).map(|i| s.seed + i).collect();
    let control = s.control();
    let pairs: Vec<(FaultReport, FaultReport)> = seeds
        .par_iter()
        .map(|&seed| Ok((run(s, seed)?, run(&control, seed)?)))
        .collect::<Result<_>>()?;
    let (runs, controls): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let hits: Vec<f64> = runs.iter().filter_map(|r| r.detection_step.map(|t| t as f64)).collect();
    let (mean, std) = if hits.is_empty() {
        (None, None)
    } else {
        let mean = hits.iter().sum::<f64>() / hits.len() as f64;
        let var = hits.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / hits.len() as f64;
        (Some(mean), Some(var.sqrt()))
    };
    Ok(FaultSweep {
        detected_runs: hits.len(),
        mean_detection_step: mean,
        std_detection_step: std,
        control_detections: controls.iter().filter(|r| r.detection_step.is_some()).count(),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_use_reference_matrices() {
        let s = FaultScenario::default();
        let f = s.faulty_model();
        assert_eq!(f.a, DMatrix::identity(2, 2) * 0.002);
        assert_eq!(f.d[(1, 0)], -0.1);
        assert_eq!(s.nominal_model().b[(0, 0)], 0.001);
        assert_eq!(s.horizon, 100);
    }

    #[test]
    fn control_run_never_detects() {
        let s = FaultScenario {
            horizon: 60,
            ..FaultScenario::default()
        };
        let r = fault_detection_sim(&s.control()).unwrap();
        assert_eq!(r.detection_step, None);
        assert_eq!(r.steps.len(), 60);
        assert!(r.steps.iter().all(|st| st.verdict == Verdict::Nonempty));
    }

    #[test]
    fn same_seed_same_outcome() {
        let s = FaultScenario::default();
        let a = fault_detection_sim(&s).unwrap();
        let b = fault_detection_sim(&s).unwrap();
        assert_eq!(a.detection_step, b.detection_step);
        assert!(a.detection_step.is_some());
    }

    #[test]
    fn rejects_mismatched_models() {
        let mut m = LinearSystemModel::nominal(0.001);
        m.d = DMatrix::identity(3, 3);
        let s = FaultScenario {
            nominal: Some(m),
            ..FaultScenario::default()
        };
        assert!(matches!(s.check(), Err(EtopeError::Dimension(_))));
    }
}
