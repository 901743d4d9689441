//! End-to-end simulation properties: specificity, reproducibility,
//! persistence and the effect of measurement noise on the tube.

use etope::apps::{
    emptiness_bench, fault_detection_sim, fault_detection_sweep, path_verification_sim, reduction_heuristic_bench,
    EmptinessBenchConfig, FaultScenario, HeuristicBenchConfig, RobotScenario, Segment, TubeReport,
};
use etope::SolverConfig;

fn short_path() -> RobotScenario {
    RobotScenario {
        segments: vec![
            Segment { v: 3.0, omega: 0.0, steps: 12 },
            Segment { v: 3.0, omega: 0.3, steps: 8 },
        ],
        noise_boundary: 2.0,
        samples: 32,
        ..RobotScenario::default()
    }
}

fn without_timings(mut r: TubeReport) -> TubeReport {
    r.time_total_ms = 0.0;
    for s in &mut r.steps {
        s.time_reach_ms = 0.0;
        s.time_check_ms = 0.0;
        s.time_area_ms = 0.0;
    }
    r
}

#[test]
fn nominal_truth_never_triggers_a_detection() {
    let s = FaultScenario { runs: 4, horizon: 100, seed: 17, ..FaultScenario::default() }.control();
    let sweep = fault_detection_sweep(&s).unwrap();
    assert_eq!(sweep.detected_runs, 0);
    assert!(sweep.runs.iter().all(|r| r.detection_step.is_none() && r.steps.len() == 100));
}

#[test]
fn injected_fault_is_caught_within_the_horizon() {
    let s = FaultScenario { runs: 2, horizon: 100, seed: 3, ..FaultScenario::default() };
    let sweep = fault_detection_sweep(&s).unwrap();
    assert_eq!(sweep.detected_runs, 2);
    for run in &sweep.runs {
        let t = run.detection_step.unwrap();
        assert!((1..=100).contains(&t));
    }
    assert_eq!(sweep.control_detections, 0);
}

#[test]
fn fault_runs_repeat_exactly() {
    let s = FaultScenario { horizon: 40, seed: 9, ..FaultScenario::default() };
    let (a, b) = (fault_detection_sim(&s).unwrap(), fault_detection_sim(&s).unwrap());
    assert_eq!(a.detection_step, b.detection_step);
    assert_eq!(a.steps.len(), b.steps.len());
    for (x, y) in a.steps.iter().zip(&b.steps) {
        assert_eq!((x.t, x.verdict, x.iterations, x.generators), (y.t, y.verdict, y.iterations, y.generators));
        assert_eq!(x.residual.to_bits(), y.residual.to_bits());
    }
}

#[test]
fn tube_verdicts_survive_a_trip_through_disk() {
    let report = path_verification_sim(&short_path()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tube.json");
    std::fs::write(&path, serde_json::to_string(&report).unwrap()).unwrap();
    let loaded: TubeReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(loaded, report);
    assert!(loaded.reverify(&SolverConfig::default()).unwrap().is_empty());
}

#[test]
fn tube_runs_repeat_bit_for_bit() {
    let s = short_path();
    let a = without_timings(path_verification_sim(&s).unwrap());
    let b = without_timings(path_verification_sim(&s).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn noisier_ranges_widen_the_tube() {
    let noisy = short_path();
    let quiet = RobotScenario { range_var_high: noisy.range_var_low, ..noisy.clone() };
    let a = path_verification_sim(&noisy).unwrap();
    let b = path_verification_sim(&quiet).unwrap();
    let mut wider = 0;
    for (sa, sb) in a.steps.iter().zip(&b.steps) {
        if sa.nominal[0] < noisy.noise_boundary {
            assert_eq!(sa.area, sb.area, "step {}: same noise, same area", sa.t);
        } else {
            assert!(sa.area >= sb.area * (1.0 - 1e-3), "step {}: {} < {}", sa.t, sa.area, sb.area);
            if sa.area > sb.area * 1.01 {
                wider += 1;
            }
        }
    }
    assert!(wider > 0, "high-noise region never widened the tube");
}

#[test]
fn emptiness_bench_ignores_worker_count() {
    let cfg = EmptinessBenchConfig { dims: vec![2, 4], max_m: 5, trials: 3, repeats: 1, ..Default::default() };
    let one = emptiness_bench(&cfg).unwrap();
    let many = emptiness_bench(&EmptinessBenchConfig { jobs: 3, ..cfg }).unwrap();
    assert_eq!(one.len(), many.len());
    for (a, b) in one.iter().zip(&many) {
        assert_eq!((a.n, a.m, a.empty_arm, a.correct, a.trials), (b.n, b.m, b.empty_arm, b.correct, b.trials));
        assert_eq!(a.correct, a.trials);
    }
}

#[test]
fn heuristic_tracks_mvoe_volume_in_low_dimension() {
    let report = reduction_heuristic_bench(&HeuristicBenchConfig { repeats: 1, ..HeuristicBenchConfig::new(2, 50) }).unwrap();
    let r2 = report.r2.expect("random shapes are not a tie");
    assert!(r2 >= 0.9, "r² = {r2}");
}
