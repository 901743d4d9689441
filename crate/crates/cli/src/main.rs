//! `etope`: command-line front end for the ellipsotope library.
//!
//! Exit codes: 0 success (an "empty" or "not contained" verdict is a
//! success), 2 malformed input or flags, 3 solver inconclusive, 4 I/O.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use etope::apps::{
    self, EmptinessBenchConfig, EmptinessRow, FaultScenario, HeuristicBenchConfig, HeuristicSample,
    RobotScenario,
};
use etope::reduce::{self, PopEnclosure};
use etope::solve::{self, TOL_ENV};
use etope::viz::{self, PlotFormat};
use etope::{io, AffineMap, EtopeError, Etope, SolverConfig, Verdict};

#[derive(Parser)]
#[command(name = "etope", version, about = "Ellipsotope set operations, checks and experiments")]
struct Cli {
    /// Feasibility threshold on the squared residual.
    #[arg(long, global = true, env = TOL_ENV)]
    tol: Option<f64>,
    /// Iteration cap for each feasibility solve.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a set file against the exchange schema and set invariants.
    Validate { file: PathBuf },
    /// Apply a set operation and write the resulting set.
    Op(OpArgs),
    /// Emptiness or point-containment verdict as JSON.
    Check {
        #[command(subcommand)]
        what: CheckCmd,
    },
    /// Order reduction.
    Reduce(ReduceArgs),
    /// Sample the boundary of a 2-D set and write a polygon.
    Plot(PlotArgs),
    /// Run a simulation and write its JSON report.
    Demo(DemoArgs),
    /// Run a benchmark and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    Sum,
    Product,
    Intersect,
    IntersectGen,
    Affine,
    Hull,
    Lift,
    ToCpz,
}

#[derive(Args)]
struct OpArgs {
    op: OpKind,
    a: PathBuf,
    b: Option<PathBuf>,
    /// Matrix file: an array of rows, or {"matrix": rows, "translation": [..]}.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CheckCmd {
    Empty {
        file: PathBuf,
    },
    Contains {
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceMethod {
    /// Exact: a basic 2-ellipsotope down to n generators.
    Basic2,
    /// Merge components into outer ellipsoids until TARGET remain.
    Mvoe,
    /// Pop short generators into a box until TARGET generators remain.
    PopBox,
    /// Exact: lift constraints, reduce each block, split back.
    LiftReduce,
    /// Relax constraint rows from the last until TARGET remain.
    DropConstraint,
}

impl ReduceMethod {
    fn name(self) -> &'static str {
        match self {
            ReduceMethod::Basic2 => "basic2",
            ReduceMethod::Mvoe => "mvoe",
            ReduceMethod::PopBox => "pop-box",
            ReduceMethod::LiftReduce => "lift-reduce",
            ReduceMethod::DropConstraint => "drop-constraint",
        }
    }
}

#[derive(Args)]
struct ReduceArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    method: ReduceMethod,
    /// Components (mvoe), generators (pop-box) or constraints (drop-constraint) to keep.
    #[arg(long)]
    target: Option<usize>,
    /// pop-box only: enclose the popped generators in an ellipsoid instead of a box.
    #[arg(long)]
    ellipsoid: bool,
    /// Boundary samples for the 2-D area ratio.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMethod {
    Ray,
    Coeff,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Args)]
struct PlotArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = SampleMethod::Ray)]
    method: SampleMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Fault,
    Path,
}

#[derive(Args)]
struct DemoArgs {
    kind: DemoKind,
    /// Scenario JSON; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Emptiness,
    MvoeHeuristic,
}

#[derive(Args)]
struct BenchArgs {
    kind: BenchKind,
    /// Ambient dimension; repeatable for the emptiness bench.
    #[arg(long)]
    dim: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Largest generator count (emptiness).
    #[arg(long)]
    max_m: Option<usize>,
    /// Timed repetitions per solve.
    #[arg(long)]
    repeats: Option<usize>,
    /// Summands per trial (mvoe-heuristic).
    #[arg(long)]
    components: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
enum Failure {
    Input(String),
    Inconclusive(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Inconclusive(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Inconclusive(m) | Failure::Io(m) => m,
        }
    }
}

impl From<EtopeError> for Failure {
    fn from(e: EtopeError) -> Self {
        match e {
            EtopeError::Io(_) => Failure::Io(e.to_string()),
            EtopeError::NoConvergence(_) => Failure::Inconclusive(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("etope: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let overrides = (cli.tol, cli.max_iters);
    let cfg = solver_config(overrides)?;
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Op(a) => op(a),
        Command::Check { what } => check(what, &cfg),
        Command::Reduce(a) => reduce_cmd(a, &cfg),
        Command::Plot(a) => plot(a, &cfg),
        Command::Demo(a) => demo(a, overrides),
        Command::Bench(a) => bench(a, overrides),
    }
}

fn solver_config((tol, iters): (Option<f64>, Option<usize>)) -> Result<SolverConfig, Failure> {
    apply_overrides(SolverConfig::default(), (tol, iters))
}

fn apply_overrides(mut cfg: SolverConfig, (tol, iters): (Option<f64>, Option<usize>)) -> Result<SolverConfig, Failure> {
    if let Some(t) = tol {
        cfg.tol_feas = t;
    }
    if let Some(n) = iters {
        cfg.max_iters = n;
    }
    cfg.check()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, Failure> {
    Ok(io::read_text(path)?)
}

fn load(path: &Path) -> Result<Etope, Failure> {
    let text = read(path)?;
    io::parse_set(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => Ok(io::write_text(p, text)?),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

/// Reports go to stdout when the main output went to a file, else stderr.
fn report(main_to_file: bool, v: &Value) -> Outcome {
    let line = format!("{v}\n");
    if main_to_file {
        emit(None, &line)
    } else {
        eprint!("{line}");
        Ok(())
    }
}

fn json_line<S: serde::Serialize>(x: &S) -> Result<String, Failure> {
    // Going through `Value` sorts object keys.
    let v = serde_json::to_value(x).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(format!("{v}\n"))
}

fn validate(file: &Path) -> Outcome {
    let text = read(file)?;
    let parts = io::parse_parts(&text).map_err(|e| Failure::Input(format!("{}: {e}", file.display())))?;
    let violations = parts.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(Failure::Input(format!(
            "{}: {} violation(s)",
            file.display(),
            violations.len()
        )));
    }
    let e = Etope::from_parts(parts)?;
    emit(
        None,
        &format!(
            "{}\n",
            json!({
                "valid": true,
                "dim": e.dim(),
                "generators": e.num_generators(),
                "constraints": e.num_constraints(),
                "blocks": e.index_set().len(),
            })
        ),
    )
}

fn second(a: &OpArgs) -> Result<Etope, Failure> {
    let path = a
        .b
        .as_deref()
        .ok_or_else(|| Failure::Input("this operation needs two set files".into()))?;
    load(path)
}

fn only_one(a: &OpArgs) -> Outcome {
    match a.b {
        Some(_) => Err(Failure::Input("this operation takes one set file".into())),
        None => Ok(()),
    }
}

fn matrix_operand(a: &OpArgs) -> Result<(DMatrix<f64>, Option<DVector<f64>>), Failure> {
    let path = a
        .matrix
        .as_deref()
        .ok_or_else(|| Failure::Input("this operation needs --matrix".into()))?;
    let text = read(path)?;
    io::parse_matrix_doc(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn op(a: OpArgs) -> Outcome {
    let x = load(&a.a)?;
    let out = match a.op {
        OpKind::Sum => x.minkowski_sum(&second(&a)?)?,
        OpKind::Product => x.cartesian_product(&second(&a)?)?,
        OpKind::Intersect => x.intersect(&second(&a)?)?,
        OpKind::Hull => x.convex_hull_overapprox(&second(&a)?)?,
        OpKind::IntersectGen => {
            let (r, t) = matrix_operand(&a)?;
            if t.is_some() {
                return Err(Failure::Input("intersect-gen takes a matrix without translation".into()));
            }
            x.intersect_generalized(&second(&a)?, &r)?
        }
        OpKind::Affine => {
            only_one(&a)?;
            let (m, t) = matrix_operand(&a)?;
            let map = match t {
                Some(t) => AffineMap::new(m, t)?,
                None => AffineMap::linear(m),
            };
            x.affine_map(&map)?
        }
        OpKind::Lift => {
            only_one(&a)?;
            x.lift()?
        }
        OpKind::ToCpz => {
            only_one(&a)?;
            return emit(a.output.as_deref(), &io::cpz_to_json(&x.to_cpz()?));
        }
    };
    emit(a.output.as_deref(), &io::to_json(&out))
}

fn parse_point(s: &str) -> Result<DVector<f64>, Failure> {
    let coords = s
        .split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| Failure::Input(format!("--point: {t:?} is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Failure::Input(format!("--point: {t:?} is not finite")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(coords))
}

fn check(what: CheckCmd, cfg: &SolverConfig) -> Outcome {
    let (key, r) = match what {
        CheckCmd::Empty { file } => ("empty", solve::is_empty(&load(&file)?, cfg)),
        CheckCmd::Contains { point, file } => {
            let e = load(&file)?;
            let x = parse_point(&point)?;
            ("contains", solve::contains_point(&e, &x, cfg)?)
        }
    };
    let flag = if key == "empty" { r.empty() } else { r.contained() };
    let out = json!({
        key: flag,
        "verdict": r.verdict,
        "residual": r.residual,
        "iterations": r.iterations,
    });
    emit(None, &format!("{out}\n"))?;
    if r.verdict == Verdict::Inconclusive {
        return Err(Failure::Inconclusive(format!(
            "solver stopped after {} iterations with residual {:e}",
            r.iterations, r.residual
        )));
    }
    Ok(())
}

fn reduce_cmd(a: ReduceArgs, cfg: &SolverConfig) -> Outcome {
    let e = load(&a.file)?;
    let out = match a.method {
        ReduceMethod::Basic2 => reduce::reduce_basic_2(&e)?,
        ReduceMethod::LiftReduce => reduce::lift_then_reduce(&e)?,
        ReduceMethod::Mvoe => reduce::reduce_2etope(&e, a.target.unwrap_or(1))?,
        ReduceMethod::PopBox => {
            let m = e.num_generators();
            let target = a
                .target
                .ok_or_else(|| Failure::Input("pop-box needs --target (generators to keep)".into()))?;
            if target > m {
                return Err(Failure::Input(format!("--target {target} exceeds the {m} generators")));
            }
            let enclosure = if a.ellipsoid { PopEnclosure::Ellipsoid } else { PopEnclosure::Box };
            reduce::reduce_pop_box(&e, m - target, enclosure)?
        }
        ReduceMethod::DropConstraint => {
            let keep = a.target.unwrap_or(0);
            let mut cur = e.clone();
            while cur.num_constraints() > keep {
                cur = reduce::eliminate_constraint(&cur, cur.num_constraints() - 1)?;
            }
            cur
        }
    };
    let mut summary = json!({
        "method": a.method.name(),
        "generators_in": e.num_generators(),
        "generators": out.num_generators(),
        "constraints_in": e.num_constraints(),
        "constraints": out.num_constraints(),
    });
    if e.dim() == 2 {
        let area = |s: &Etope| -> Result<f64, Failure> {
            Ok(viz::sample_boundary_ray_to(s, a.samples, 0, cfg, 1e-6)?.area())
        };
        let (before, after) = (area(&e)?, area(&out)?);
        summary["area_ratio"] = if before > 0.0 { json!(after / before) } else { Value::Null };
    }
    emit(a.output.as_deref(), &io::to_json(&out))?;
    report(a.output.is_some(), &summary)
}

fn plot(a: PlotArgs, cfg: &SolverConfig) -> Outcome {
    let e = load(&a.file)?;
    if e.dim() != 2 {
        return Err(Failure::Input(format!("plot needs a 2-D set, got R^{}", e.dim())));
    }
    let sample = match a.method {
        SampleMethod::Ray => viz::sample_boundary_ray(&e, a.samples, a.seed, cfg)?,
        SampleMethod::Coeff => viz::sample_boundary_coeff(&e, a.samples, a.seed, cfg)?,
    };
    let format = match a.format {
        Format::Csv => PlotFormat::Csv,
        Format::Svg => PlotFormat::Svg,
    };
    emit(a.output.as_deref(), &viz::render_polygon(&sample, format)?)
}

fn config<C: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<C, Failure> {
    let text = match path {
        Some(p) => read(p)?,
        None => "{}".into(),
    };
    serde_json::from_str(&text).map_err(|e| {
        let name = path.map_or_else(|| "default config".into(), |p| p.display().to_string());
        Failure::Input(format!("{name}: {e}"))
    })
}

fn demo(a: DemoArgs, overrides: (Option<f64>, Option<usize>)) -> Outcome {
    match a.kind {
        DemoKind::Fault => {
            let mut s: FaultScenario = config(a.config.as_deref())?;
            s.solver = apply_overrides(s.solver, overrides)?;
            let sweep = apps::fault_detection_sweep(&s)?;
            eprintln!(
                "fault: {}/{} runs detected, control detections {}",
                sweep.detected_runs,
                sweep.runs.len(),
                sweep.control_detections
            );
            emit(a.output.as_deref(), &json_line(&sweep)?)
        }
        DemoKind::Path => {
            let mut s: RobotScenario = config(a.config.as_deref())?;
            s.solver = apply_overrides(s.solver, overrides)?;
            let tube = apps::path_verification_sim(&s)?;
            eprintln!(
                "path: {} steps, colliding obstacles {:?}, total area {:.3}",
                tube.steps.len(),
                tube.colliding_obstacles,
                tube.total_area
            );
            emit(a.output.as_deref(), &json_line(&tube)?)
        }
    }
}

fn bench(a: BenchArgs, overrides: (Option<f64>, Option<usize>)) -> Outcome {
    if a.jobs == 0 {
        return Err(Failure::Input("--jobs must be at least 1".into()));
    }
    match a.kind {
        BenchKind::Emptiness => {
            let mut cfg = EmptinessBenchConfig { seed: a.seed, jobs: a.jobs, ..Default::default() };
            if !a.dim.is_empty() {
                cfg.dims = a.dim.clone();
            }
            cfg.trials = a.trials.unwrap_or(cfg.trials);
            cfg.max_m = a.max_m.unwrap_or(cfg.max_m);
            cfg.repeats = a.repeats.unwrap_or(cfg.repeats);
            cfg.solver = apply_overrides(cfg.solver, overrides)?;
            let rows = apps::emptiness_bench(&cfg)?;
            let mut csv = format!("{}\n", EmptinessRow::CSV_HEADER);
            for r in &rows {
                csv.push_str(&r.csv());
                csv.push('\n');
            }
            let (correct, total) = rows
                .iter()
                .fold((0, 0), |(c, t), r| (c + r.correct, t + r.trials));
            emit(a.output.as_deref(), &csv)?;
            report(a.output.is_some(), &json!({ "correct": correct, "trials": total }))
        }
        BenchKind::MvoeHeuristic => {
            let n = match a.dim.as_slice() {
                [] => 8,
                [n] => *n,
                _ => return Err(Failure::Input("mvoe-heuristic takes a single --dim".into())),
            };
            let mut cfg = HeuristicBenchConfig::new(n, a.trials.unwrap_or(50));
            cfg.seed = a.seed;
            cfg.jobs = a.jobs;
            cfg.components = a.components.unwrap_or(cfg.components);
            cfg.repeats = a.repeats.unwrap_or(cfg.repeats);
            let rep = apps::reduction_heuristic_bench(&cfg)?;
            let mut csv = format!("{}\n", HeuristicSample::CSV_HEADER);
            for s in &rep.samples {
                csv.push_str(&s.csv());
                csv.push('\n');
            }
            emit(a.output.as_deref(), &csv)?;
            report(
                a.output.is_some(),
                &json!({
                    "n": rep.n,
                    "r2": rep.r2,
                    "tie": rep.tie,
                    "mean_mvoe_s": rep.mean_mvoe_s,
                    "mean_heuristic_s": rep.mean_heuristic_s,
                }),
            )
        }
    }
}
