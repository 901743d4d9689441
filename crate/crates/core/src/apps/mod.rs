//! End-to-end experiments built on the set algebra: set-based fault
//! detection, robot path verification, and two solver benchmarks.
//!
//! Everything here is `f64`. Simulations are deterministic given their seed
//! and configuration; only the recorded wall-clock timings vary between runs.

mod bench;
mod fault;
mod path;

pub use bench::{
    emptiness_bench, pearson_r2, reduction_heuristic_bench, EmptinessBenchConfig, EmptinessRow,
    HeuristicBenchConfig, HeuristicReport, HeuristicSample,
};
pub use fault::{
    fault_detection_sim, fault_detection_sweep, FaultReport, FaultScenario, FaultStep, FaultSweep,
    LinearSystemModel,
};
pub use path::{
    heading_halfspaces, nominal_trajectory, path_verification_sim, swept_body, ObstacleVerdict,
    RobotScenario, Segment, TubeReport, TubeStep,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EtopeError, Result};
use crate::set::{Ellipsotope, IndexSet, PNorm};

/// Re-expresses a set under the 2-norm. An ∞-norm block is a box, which is
/// the same set as its coordinates taken as 2-norm singletons.
pub fn as_two_norm(e: &Ellipsotope<f64>) -> Result<Ellipsotope<f64>> {
    match e.p() {
        PNorm::Finite(p) if p == 2.0 => Ok(e.clone()),
        PNorm::Inf => {
            let mut parts = e.to_parts();
            parts.p = PNorm::two();
            parts.blocks = IndexSet::singletons(e.num_generators()).into_blocks();
            Ellipsotope::from_parts(parts)
        }
        p => Err(EtopeError::Unsupported(format!(
            "experiments combine sets under the 2-norm; cannot convert p = {p:?}"
        ))),
    }
}

/// Draws `c + Gβ` with `β` uniform on each block's unit ball.
/// Constrained sets are rejected.
pub fn sample_uniform<R: Rng + ?Sized>(e: &Ellipsotope<f64>, rng: &mut R) -> Result<DVector<f64>> {
    if e.num_constraints() > 0 {
        return Err(EtopeError::Unsupported(
            "uniform sampling needs an unconstrained set".into(),
        ));
    }
    let mut beta = DVector::zeros(e.num_generators());
    for block in e.index_set().blocks() {
        let d = block.len();
        let draw: Vec<f64> = match e.p() {
            PNorm::Inf => (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            PNorm::Finite(p) if p == 2.0 => {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = rng.random::<f64>().powf(1.0 / d as f64);
                g.iter().map(|x| x / norm * r).collect()
            }
            PNorm::Finite(p) => loop {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                if v.iter().map(|x| x.abs().powf(p)).sum::<f64>() <= 1.0 {
                    break v;
                }
            },
        };
        for (&j, x) in block.iter().zip(draw) {
            beta[j] = x;
        }
    }
    Ok(e.point_at(&beta))
}

pub(crate) mod rows {
    //! `DMatrix<f64>` as a JSON list of rows.
    use nalgebra::DMatrix;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("matrix rows have different lengths"));
        }
        Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }
}

pub(crate) fn box_set(center: DVector<f64>, half_widths: &[f64]) -> Ellipsotope<f64> {
    let g = DMatrix::from_diagonal(&DVector::from_column_slice(half_widths));
    Ellipsotope::from_zonotope_with_norm(PNorm::two(), center, g).expect("box is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{contains_point, SolverConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inf_box_becomes_two_norm_singletons() {
        let e = Ellipsotope::basic(PNorm::Inf, DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let f = as_two_norm(&e).unwrap();
        assert!(f.p().is_two());
        assert!(f.index_set().is_singletons());
        let corner = DVector::from_vec(vec![1.0, 1.0]);
        let tight = SolverConfig::default().with_tol(1e-14);
        assert_eq!(contains_point(&f, &corner, &tight).unwrap().contained(), Some(true));
    }

    #[test]
    fn uniform_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let disk = Ellipsotope::basic(PNorm::two(), DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let cube = Ellipsotope::basic(PNorm::Inf, DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let p3 = Ellipsotope::basic(PNorm::Finite(3.0), DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        for _ in 0..200 {
            assert!(sample_uniform(&disk, &mut rng).unwrap().norm() <= 1.0);
            assert!(sample_uniform(&cube, &mut rng).unwrap().amax() <= 1.0);
            let x = sample_uniform(&p3, &mut rng).unwrap();
            assert!(x.iter().map(|v| v.abs().powi(3)).sum::<f64>() <= 1.0);
        }
    }
}
