//! `tou-sched`: batch scheduling of hot-rolling slabs under time-of-use
//! electricity prices.
//!
//! Exit codes: 0 success, 2 bad input, 3 infeasible instance, 4 degenerate
//! ranking.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use tou_sched::artifacts::{
    evaluate_solution, ranking_csv, read_front_csv, ExportOptions, RunArtifacts, RunManifest, SolutionDoc,
};
use tou_sched::encoding::Chromosome;
use tou_sched::generator::{generate_doc, Profile};
use tou_sched::instance::{parse_instance, InstanceError, ProblemInstance};
use tou_sched::moea::{evolve, SolverParams};
use tou_sched::tariff::CostMode;
use tou_sched::topsis::{rank_points, Weights};

#[derive(Parser)]
#[command(
    name = "tou-sched",
    version,
    about = "Hot-rolling batch scheduling under time-of-use electricity prices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize an instance, rank the front and write the result files.
    Solve(SolveArgs),
    /// Recompute objectives and constraint checks for a saved solution.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic instance.
    Gen(GenArgs),
    /// Rank the rows of a front file by TOPSIS.
    Rank(RankArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Directory for the result files.
    #[arg(long, default_value = "tou-sched-out")]
    out: PathBuf,
    /// Take parameters from an earlier run's manifest; other flags override.
    #[arg(long, value_name = "MANIFEST")]
    replay: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Crossover probability.
    #[arg(long)]
    pc: Option<f64>,
    /// Mutation probability.
    #[arg(long)]
    pm: Option<f64>,
    /// TOPSIS weights of power cost and penalty, e.g. `0.4,0.6`.
    #[arg(long)]
    weights: Option<Weights>,
    #[arg(long, value_parser = parse_cost_mode)]
    cost_mode: Option<CostMode>,
    /// Print one progress line per generation to standard error.
    #[arg(long)]
    verbose: bool,
    /// Also write a Gantt chart.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    instance: PathBuf,
    /// `solution.json`, or a front file together with `--row`.
    solution: PathBuf,
    /// 1-based row when the solution comes from a front file.
    #[arg(long, default_value_t = 1)]
    row: usize,
    #[arg(long, value_parser = parse_cost_mode, default_value = "proportional")]
    cost_mode: CostMode,
}

#[derive(Args)]
struct GenArgs {
    /// Number of slabs.
    #[arg(short, long)]
    n: usize,
    /// Number of rolling units.
    #[arg(short, long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `<many|few>-varieties,<full|not-full>-load`.
    #[arg(long, default_value = "many-varieties,full-load")]
    profile: Profile,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Front file with `f1_cny` and `f2_penalty` columns.
    front: PathBuf,
    #[arg(long, default_value = "0.4,0.6")]
    weights: Weights,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_cost_mode(s: &str) -> Result<CostMode, String> {
    s.parse()
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    fn degenerate(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gen(a) => gen(a),
        Command::Rank(a) => rank(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> CliResult {
    fs::write(path, body).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    let instance = parse_instance(&read(path)?).map_err(|e| {
        let message = format!("{}: {e}", path.display());
        match e {
            InstanceError::ProcessingExceedsHorizon { .. } => Failure::infeasible(message),
            _ => Failure::input(message),
        }
    })?;
    let tariff = instance.tariff();
    if tariff.is_multi_day() {
        eprintln!(
            "note: the {} h horizon spans more than one {} h tariff cycle; the tariff is repeated",
            tariff.horizon(),
            tariff.cycle_length()
        );
    }
    Ok(instance)
}

fn solve(args: SolveArgs) -> CliResult {
    let instance = load_instance(&args.instance)?;
    let (mut params, mut weights) = match &args.replay {
        Some(path) => {
            let manifest: RunManifest =
                serde_json::from_str(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            if manifest.instance_digest != instance.digest() {
                eprintln!("warning: the manifest was written for a different instance");
            }
            (manifest.params, manifest.weights)
        }
        None => (SolverParams::default(), Weights::default()),
    };
    if let Some(v) = args.seed {
        params.rng_seed = v;
    }
    if let Some(v) = args.generations {
        params.generations = v;
    }
    if let Some(v) = args.population {
        params.population_size = v;
    }
    if let Some(v) = args.pc {
        params.crossover_prob = v;
    }
    if let Some(v) = args.pm {
        params.mutation_prob = v;
    }
    if let Some(v) = args.cost_mode {
        params.cost_mode = v;
    }
    if let Some(w) = args.weights {
        weights = w;
    }
    params.threads = None;
    params.verbose = args.verbose;

    let clock = Instant::now();
    let result = evolve(&instance, &params).map_err(|e| Failure::input(e.to_string()))?;
    let options = ExportOptions {
        weights,
        svg: args.svg,
        wall_time_s: clock.elapsed().as_secs_f64(),
        instance_path: Some(args.instance.display().to_string()),
    };
    let artifacts = RunArtifacts::build(&instance, &params, &result, &options).map_err(|e| match e {
        tou_sched::artifacts::ArtifactError::NoFeasibleSolution => {
            Failure::infeasible("no feasible schedule was found for this instance")
        }
        tou_sched::artifacts::ArtifactError::Ranking(r) => Failure::degenerate(r.to_string()),
        other => Failure::input(other.to_string()),
    })?;
    artifacts
        .write_to(&args.out)
        .map_err(|e| Failure::input(e.to_string()))?;

    let best = artifacts.ranking.best();
    println!(
        "front: {} solutions, written to {}",
        artifacts.manifest.archive_size,
        args.out.display()
    );
    println!(
        "recommended (front row {}, closeness {:.6}): f1 = {:.2} CNY, f2 = {}",
        best.index + 1,
        best.closeness,
        best.power_cost,
        best.penalty
    );
    print!("{}", report::unit_table(&artifacts.units));
    Ok(())
}

fn load_solution(path: &Path, row: usize) -> Result<(Chromosome, Option<String>), Failure> {
    let text = read(path)?;
    if let Ok(doc) = serde_json::from_str::<SolutionDoc>(&text) {
        return Ok((doc.chromosome(), doc.instance_digest));
    }
    let rows = read_front_csv(&text).map_err(|e| {
        Failure::input(format!(
            "{}: neither a solution document nor a front file ({e})",
            path.display()
        ))
    })?;
    let picked = row
        .checked_sub(1)
        .and_then(|i| rows.get(i))
        .ok_or_else(|| Failure::input(format!("{}: no row {row}", path.display())))?;
    let chromosome = picked
        .chromosome
        .clone()
        .ok_or_else(|| Failure::input(format!("{}: row {row} has no perm and idle", path.display())))?;
    Ok((chromosome, None))
}

fn evaluate(args: EvaluateArgs) -> CliResult {
    let instance = load_instance(&args.instance)?;
    let (chromosome, digest) = load_solution(&args.solution, args.row)?;
    if digest.is_some_and(|d| d != instance.digest()) {
        eprintln!("warning: the solution was saved for a different instance");
    }
    let eval = evaluate_solution(&chromosome, &instance, args.cost_mode).map_err(|e| Failure::input(e.to_string()))?;
    println!("f1 = {} CNY", eval.objectives.power_cost);
    println!("f2 = {}", eval.objectives.penalty);
    println!("feasible = {}", eval.objectives.feasible);
    if !eval.violations.is_empty() {
        println!("violations:");
        for v in &eval.violations {
            println!("  {v}");
        }
    }
    if !eval.units.is_empty() {
        print!("{}", report::unit_table(&eval.units));
    }
    Ok(())
}

fn gen(args: GenArgs) -> CliResult {
    let doc = generate_doc(args.n, args.m, args.seed, args.profile).map_err(|e| Failure::input(e.to_string()))?;
    let body = serde_json::to_string_pretty(&doc).expect("instance serializes") + "\n";
    match &args.out {
        Some(path) => write(path, &body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn rank(args: RankArgs) -> CliResult {
    let text = read(&args.front)?;
    let rows = read_front_csv(&text).map_err(|e| Failure::input(format!("{}: {e}", args.front.display())))?;
    let points: Vec<[f64; 2]> = rows.iter().map(|r| [r.f1_cny, r.f2_penalty]).collect();
    let ranking = rank_points(&points, args.weights).map_err(|e| Failure::degenerate(e.to_string()))?;
    let body = ranking_csv(&ranking).map_err(|e| Failure::input(e.to_string()))?;
    match &args.out {
        Some(path) => {
            write(path, &body)?;
            let best = ranking.best();
            println!(
                "recommended: front row {} (closeness {:.6}, f1 = {}, f2 = {})",
                best.index + 1,
                best.closeness,
                best.power_cost,
                best.penalty
            );
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
