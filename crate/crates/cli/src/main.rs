use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hdistill::circuit::{build_distillation_circuit, build_gadget_distillation_circuit, identity_cases};
use hdistill::dense::{channel_distance, IDENTITY_TOL};
use hdistill::enumerator::{classify_all, derive_polynomials, polynomials_from_verdicts, FrameClassifier};
use hdistill::monte_carlo::{
    block_size_check, independence_check, run_blocked_pipeline, sample_report, sample_routine, Engine, Grouping,
    Stage, VerdictTable,
};
use hdistill::planner::{self, Cell, PlannerGoal, Table, DEFAULT_MAX_ROUNDS, TABLE_SEQUENCES};
use hdistill::routines::RoutineModel;
use hdistill::Error;
use serde::Serialize;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "HDISTILL_OUT_DIR";

#[derive(Parser)]
#[command(name = "hdistill", version, about = "10-to-2 |H> distillation: exact polynomials, planning and simulation")]
struct Cli {
    /// Write `<command>.<ext>` into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra routine definitions (TOML), usable in sequences by name.
    #[arg(long = "routine-config", global = true)]
    routine_config: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    /// Per-routine output error against input error.
    BothThresh,
    /// Error curves of the comparison sequences.
    Regionplot,
    /// Best cost against goal error.
    Distplot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Classifier {
    Dense,
    Frame,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupingArg {
    Blocked,
    Pairs,
}

#[derive(Subcommand)]
enum Command {
    /// Exact acceptance and error polynomials of the 10-to-2 routine.
    Polynomials {
        #[arg(long, value_enum, default_value = "dense")]
        classifier: Classifier,
    },
    /// Smallest positive fixed point of a routine's error map.
    Threshold {
        #[arg(long, default_value = "A")]
        routine: String,
    },
    /// Tabulated curves as CSV.
    Curve {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long, default_value_t = 0.01)]
        p0: f64,
        #[arg(long, default_value_t = 60)]
        points: usize,
        /// For regionplot: emit crossings between adjacent curves.
        #[arg(long)]
        boundaries: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
    },
    /// Cost, output error and improvement factor of the comparison sequences.
    Table1 {
        #[arg(long, default_value_t = 0.01)]
        p0: f64,
    },
    /// Cheapest sequence reaching a goal error.
    Plan {
        #[arg(long)]
        p0: f64,
        /// Goal error; defaults to 1/(10 R) when only --R is given.
        #[arg(long)]
        eg: Option<f64>,
        /// Computation size in resource states.
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
    },
    /// Samples the 10-to-2 routine and compares with the exact rates.
    Simulate {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Runs the blocked multi-round pipeline.
    Pipeline {
        #[arg(long)]
        k0: u64,
        #[arg(long)]
        seq: String,
        #[arg(long)]
        p0: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "blocked")]
        grouping: GroupingArg,
    },
    /// Checks every circuit identity.
    VerifyIdentities,
    /// Prints the distillation circuit in text form.
    DumpCircuit {
        /// The variant with explicit resource wires for each gadget.
        #[arg(long)]
        gadgets: bool,
    },
}

enum Failure {
    Usage(String),
    Mismatch(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) | Error::Parse(_) | Error::Config(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            Error::ReferenceMismatch(_) => Failure::Mismatch(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type CmdResult = Result<Output, Failure>;

/// A command's rendered output and whether it matched reference values.
struct Output {
    ext: &'static str,
    body: String,
    mismatch: Option<String>,
}

fn json<T: Serialize>(value: &T) -> Result<Output, Failure> {
    let body = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))? + "\n";
    Ok(Output { ext: "json", body, mismatch: None })
}

fn sci(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.5e}")
    }
}

fn csv_table(t: &Table) -> Result<Output, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Internal(e.to_string());
    w.write_record(&t.header).map_err(io)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|c| match c {
            Cell::Num(x) => sci(*x),
            Cell::Text(s) => s.clone(),
        }))
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(Output { ext: "csv", body: String::from_utf8(bytes).expect("utf8"), mismatch: None })
}

fn models(configs: &[PathBuf]) -> Result<Vec<RoutineModel>, Failure> {
    let mut out = vec![RoutineModel::ten_to_two()?, RoutineModel::fifteen_to_one()];
    for path in configs {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let model = RoutineModel::from_toml(&text)?;
        if out.iter().any(|m| m.name() == model.name()) {
            return Err(Failure::Usage(format!("routine name {} already defined", model.name())));
        }
        out.push(model);
    }
    Ok(out)
}

fn polynomials(classifier: Classifier) -> CmdResult {
    let set = match classifier {
        Classifier::Dense => derive_polynomials()?,
        Classifier::Frame => polynomials_from_verdicts(classify_all(&FrameClassifier::new()?)?),
    };
    let mut out = json(&set.report())?;
    out.mismatch = set.check_reference().err().map(|e| e.to_string());
    Ok(out)
}

fn threshold(name: &str, available: &[RoutineModel]) -> CmdResult {
    let model = planner::resolve(name, available)?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::Usage("empty routine name".into()))?;
    let t = planner::threshold(model);
    let reference = match model.name() {
        "A" => Some(0.089),
        "B" => Some(0.141),
        _ => None,
    };
    let table = Table {
        header: vec!["routine".into(), "threshold".into()],
        rows: vec![vec![Cell::Text(model.name().into()), Cell::Num(t.unwrap_or(f64::NAN))]],
    };
    let mut out = csv_table(&table)?;
    if let Some(expected) = reference {
        if t.is_none_or(|t| (t - expected).abs() > 1e-3) {
            out.mismatch = Some(format!("threshold {t:?} differs from {expected}"));
        }
    }
    Ok(out)
}

fn curve(figure: Figure, p0: f64, points: usize, boundaries: bool, max_rounds: usize, available: &[RoutineModel]) -> CmdResult {
    if points < 2 {
        return Err(Failure::Usage("need at least 2 points".into()));
    }
    let table = match figure {
        Figure::BothThresh => planner::error_curves(&["A", "B"], available, &planner::linear_grid(0.0025, 0.25, points))?,
        Figure::Regionplot if boundaries => {
            planner::region_boundaries(&TABLE_SEQUENCES, available, &planner::log_grid(1e-4, 0.1, points))?
        }
        Figure::Regionplot => planner::error_curves(&TABLE_SEQUENCES, available, &planner::log_grid(1e-4, 0.1, points))?,
        Figure::Distplot => {
            let baseline = planner::resolve("B", available)?[0];
            planner::step_plot(p0, &planner::log_grid(1e-30, p0 / 10.0, points), available, baseline, max_rounds)?
        }
    };
    csv_table(&table)
}

/// Reference comparison table at `p0 = 0.01`: cost, error, improvement factor.
const REFERENCE_TABLE: [(f64, f64, f64); 10] = [
    (5.5, 9e-4, 3.2),
    (17.4, 4e-5, 1.0),
    (27.9, 7e-6, 9.4),
    (87.2, 1e-8, 3.0),
    (139.3, 5e-10, 1.9),
    (261.7, 2e-12, 1.0),
    (436.2, 1e-15, 9.0),
    (696.6, 2e-18, 5.6),
    (1308.7, 2e-23, 3.0),
    (2180.8, 1e-29, 1.8),
];

fn table1(p0: f64, available: &[RoutineModel]) -> CmdResult {
    if !(p0 > 0.0 && p0 < 0.5) {
        return Err(Failure::Usage(format!("p0 must lie in (0, 1/2), got {p0}")));
    }
    let baseline = planner::resolve("B", available)?[0];
    let rows = planner::comparison_table(p0, available, baseline)?;
    let table = Table {
        header: ["sequence", "cost", "error", "improvement"].iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.sequence.clone()),
                    Cell::Num(r.cost),
                    Cell::Num(r.error),
                    Cell::Num(r.improvement.unwrap_or(f64::NAN)),
                ]
            })
            .collect(),
    };
    let mut out = csv_table(&table)?;
    if p0 == 0.01 {
        let bad: Vec<String> = rows
            .iter()
            .zip(REFERENCE_TABLE)
            .filter(|(r, (cost, err, factor))| {
                let k = err.log10().floor();
                (r.cost - cost).abs() > 0.1
                    || (r.error / 10f64.powf(k) - err / 10f64.powf(k)).abs() >= 1.0
                    || r.improvement.is_none_or(|f| (f - factor).abs() > 0.1)
            })
            .map(|(r, _)| r.sequence.clone())
            .collect();
        if !bad.is_empty() {
            out.mismatch = Some(format!("rows differ from reference values: {}", bad.join(", ")));
        }
    }
    Ok(out)
}

fn plan(p0: f64, eg: Option<f64>, r: Option<f64>, max_rounds: usize, available: &[RoutineModel]) -> CmdResult {
    let goal = match (eg, r) {
        (Some(eg), r) => PlannerGoal { r, ..PlannerGoal::new(p0, eg, max_rounds)? },
        (None, Some(r)) => PlannerGoal::from_computation_size(p0, r, max_rounds)?,
        (None, None) => return Err(Failure::Usage("give --eg or --R".into())),
    };
    let outcome = planner::best_sequence(&goal, available)?;
    let baseline = planner::resolve("B", available)?[0];
    let improvement = outcome.plan().and_then(|p| planner::improvement_factor(p, baseline));
    #[derive(Serialize)]
    struct Report<'a> {
        goal: &'a PlannerGoal,
        #[serde(flatten)]
        outcome: &'a planner::SearchOutcome,
        improvement_factor: Option<f64>,
    }
    json(&Report { goal: &goal, outcome: &outcome, improvement_factor: improvement })
}

fn simulate(p: f64, trials: u64, seed: u64) -> CmdResult {
    let table = VerdictTable::ten_to_two()?;
    let stats = sample_routine(&table, p, trials, seed)?;
    let polys = hdistill::monte_carlo::ten_to_two_polynomials()?;
    let report = sample_report(&stats, p, &polys);
    let mut out = json(&report)?;
    if !report.pass {
        out.mismatch = Some("sampled rates outside 3σ of exact values".into());
    }
    Ok(out)
}

fn pipeline(k0: u64, seq: &str, p0: f64, seed: u64, grouping: GroupingArg, available: &[RoutineModel]) -> CmdResult {
    let resolved = planner::resolve(seq, available)?;
    if resolved.is_empty() {
        return Err(Failure::Usage("empty sequence".into()));
    }
    let table = VerdictTable::ten_to_two()?;
    let stages: Vec<Stage> = resolved
        .iter()
        .map(|&model| {
            let engine = if model.name() == "A" { Engine::Circuit(&table) } else { Engine::Model };
            Stage { model, engine }
        })
        .collect();
    let grouping = match grouping {
        GroupingArg::Blocked => Grouping::Blocked,
        GroupingArg::Pairs => Grouping::InstancePairs,
    };
    let run = run_blocked_pipeline(k0, &stages, p0, seed, grouping)?;
    #[derive(Serialize)]
    struct Round {
        routine: String,
        nominal_p: f64,
        instances: u64,
        accepted: u64,
        block_sizes: Vec<usize>,
        errors: usize,
        error_rate: f64,
        block_sizes_check: Option<hdistill::monte_carlo::BlockSizeCheck>,
        independence: Option<hdistill::monte_carlo::IndependenceReport>,
    }
    let rounds: Vec<Round> = run
        .rounds
        .iter()
        .enumerate()
        .map(|(r, e)| Round {
            routine: if r == 0 { "input".into() } else { e.routine.clone() },
            nominal_p: e.nominal_p,
            instances: e.instances,
            accepted: e.accepted,
            block_sizes: e.block_sizes(),
            errors: e.errors(),
            error_rate: if e.states() > 0 { e.errors() as f64 / e.states() as f64 } else { f64::NAN },
            block_sizes_check: (r > 0).then(|| block_size_check(&run, r, resolved[r - 1]).ok()).flatten(),
            independence: independence_check(e).ok(),
        })
        .collect();
    #[derive(Serialize)]
    struct Report {
        k0: u64,
        p0: f64,
        seed: u64,
        sequence: String,
        grouping: Grouping,
        predicted_error: f64,
        rounds: Vec<Round>,
        halted: Option<String>,
    }
    json(&Report {
        k0,
        p0,
        seed,
        sequence: seq.to_string(),
        grouping,
        predicted_error: planner::evaluate_sequence(&resolved, p0).final_error,
        rounds,
        halted: run.halted.clone(),
    })
}

fn verify_identities() -> CmdResult {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for case in identity_cases() {
        let d = channel_distance(&case.left, &case.right)?;
        let pass = d <= IDENTITY_TOL;
        if !pass {
            failed.push(case.name.to_string());
        }
        rows.push(vec![
            Cell::Text(case.name.to_string()),
            Cell::Text(if pass { "pass" } else { "fail" }.into()),
        ]);
    }
    let mut out = csv_table(&Table { header: vec!["identity".into(), "result".into()], rows })?;
    if !failed.is_empty() {
        out.mismatch = Some(format!("identities failed: {}", failed.join(", ")));
    }
    Ok(out)
}

fn dump_circuit(gadgets: bool) -> CmdResult {
    let body = if gadgets { build_gadget_distillation_circuit().to_text() } else { build_distillation_circuit().0.to_text() };
    Ok(Output { ext: "txt", body, mismatch: None })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Polynomials { .. } => "polynomials",
        Command::Threshold { .. } => "threshold",
        Command::Curve { .. } => "curve",
        Command::Table1 { .. } => "table1",
        Command::Plan { .. } => "plan",
        Command::Simulate { .. } => "simulate",
        Command::Pipeline { .. } => "pipeline",
        Command::VerifyIdentities => "verify-identities",
        Command::DumpCircuit { .. } => "dump-circuit",
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let needs_models = matches!(
        cli.command,
        Command::Threshold { .. } | Command::Curve { .. } | Command::Table1 { .. } | Command::Plan { .. } | Command::Pipeline { .. }
    );
    let available = if needs_models { models(&cli.routine_config)? } else { Vec::new() };
    let output = match &cli.command {
        Command::Polynomials { classifier } => polynomials(*classifier),
        Command::Threshold { routine } => threshold(routine, &available),
        Command::Curve { figure, p0, points, boundaries, max_rounds } => {
            curve(*figure, *p0, *points, *boundaries, *max_rounds, &available)
        }
        Command::Table1 { p0 } => table1(*p0, &available),
        Command::Plan { p0, eg, r, max_rounds } => plan(*p0, *eg, *r, *max_rounds, &available),
        Command::Simulate { p, trials, seed } => simulate(*p, *trials, *seed),
        Command::Pipeline { k0, seq, p0, seed, grouping } => pipeline(*k0, seq, *p0, *seed, *grouping, &available),
        Command::VerifyIdentities => verify_identities(),
        Command::DumpCircuit { gadgets } => dump_circuit(*gadgets),
    }?;
    let dir = cli.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    match dir {
        Some(dir) => {
            let io = |e: std::io::Error| Failure::Usage(format!("{}: {e}", dir.display()));
            std::fs::create_dir_all(&dir).map_err(io)?;
            let path = dir.join(format!("{}.{}", command_name(&cli.command), output.ext));
            std::fs::write(&path, &output.body).map_err(io)?;
            println!("{}", path.display());
        }
        None => print!("{}", output.body),
    }
    match output.mismatch {
        Some(m) => Err(Failure::Mismatch(m)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("hdistill: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(m)) => {
            eprintln!("hdistill: mismatch: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("hdistill: internal error: {m}");
            ExitCode::from(3)
        }
    }
}
