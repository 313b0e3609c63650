//! `sppa`: run the contraction loop on a built-in benchmark or a problem
//! file, print a summary and write the iteration trace.
//!
//! Exit codes: 0 on a run that produced an incumbent, 1 on other failures,
//! 2 on bad flags or unknown problems, 3 on malformed problem files, 4 when
//! the first surrogate is infeasible.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use sppa_core::milp::{parse_lp, solve_milp, write_lp};
use sppa_core::problems::{benchmark, benchmarks, parse_problem, ProblemError};
use sppa_core::sppa::build_iteration_model;
use sppa_core::{builtin, run, ProblemSpec, SolverConfig, SppaConfig, Termination};

use report::{ConfigEcho, RunReport, TableRow};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sppa",
    version,
    about = "Sequential piecewise planar approximation solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one built-in benchmark or problem file.
    Solve(SolveArgs),
    /// Run every built-in benchmark and print a summary table.
    Table(TableArgs),
    /// Solve a model in LP text format with the embedded MILP solver.
    Lp(LpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in name (rosenbrock, rastrigin, ackley, eggholder) or path to a
    /// problem file.
    #[arg(long)]
    problem: String,
    #[arg(long)]
    initial_n_pieces: Option<usize>,
    #[arg(long)]
    n_pieces: Option<usize>,
    #[arg(long)]
    contract_frac: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Width tolerance relative to each variable's initial width.
    #[arg(long)]
    width_tol: Option<f64>,
    /// Wall-clock budget for the whole run, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Accepted for interface stability; runs are deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the first iteration's MILP in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Wall-clock budget per problem, in seconds.
    #[arg(long)]
    budget: Option<f64>,
    /// Where to write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LpArgs {
    file: PathBuf,
    #[arg(long)]
    time_limit: Option<f64>,
}

/// Error carrying its exit code.
struct Failure(u8, String);

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        let code = if e.is_parse_error() {
            EXIT_PARSE
        } else {
            EXIT_USAGE
        };
        Failure(code, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Table(a) => cmd_table(&a),
        Command::Lp(a) => cmd_lp(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn load_problem(name: &str) -> Result<(ProblemSpec, SppaConfig), Failure> {
    if let Some(b) = benchmark(name) {
        return Ok((builtin(b.name)?, SppaConfig::for_benchmark(b)));
    }
    let path = Path::new(name);
    if !path.is_file() {
        let known: Vec<_> = benchmarks().iter().map(|b| b.name).collect();
        return Err(Failure(
            EXIT_USAGE,
            format!(
                "`{name}` is neither a built-in ({}) nor a readable file",
                known.join(", ")
            ),
        ));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    let problem = parse_problem(&text).map_err(|e| {
        let f = Failure::from(e);
        Failure(f.0, format!("{}: {}", path.display(), f.1))
    })?;
    Ok((problem, SppaConfig::default()))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| {
        Failure(
            EXIT_FAILURE,
            format!("cannot write {}: {e}", path.display()),
        )
    })
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let (problem, mut cfg) = load_problem(&a.problem)?;
    if let Some(v) = a.initial_n_pieces {
        cfg.initial_n_pieces = v;
    }
    if let Some(v) = a.n_pieces {
        cfg.n_pieces = v;
    }
    if let Some(v) = a.contract_frac {
        cfg.contract_frac = v;
    }
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.width_tol {
        cfg.width_tol = v;
    }
    cfg.time_budget = a.time_limit;
    cfg.validate()
        .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;

    if let Some(path) = &a.export_lp {
        let bounds: Vec<_> = problem.variables.iter().map(|v| (v.lo, v.hi)).collect();
        let model = build_iteration_model(&problem, &bounds, cfg.initial_n_pieces)
            .map_err(|e| Failure(EXIT_FAILURE, e.to_string()))?;
        write_out(path, &write_lp(&model.lp))?;
    }

    let mut report = RunReport::new(&problem, ConfigEcho::new(&cfg, a.seed));
    let start = Instant::now();
    let outcome = run(&problem, &cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let code = match &outcome {
        Ok(r) => {
            report.record(r, elapsed);
            if r.best_iter.is_some() {
                None
            } else if r.termination == Termination::Infeasible {
                Some(Failure(
                    EXIT_INFEASIBLE,
                    "the first surrogate MILP is infeasible".into(),
                ))
            } else {
                Some(Failure(
                    EXIT_FAILURE,
                    format!("no incumbent found ({})", r.termination.as_str()),
                ))
            }
        }
        Err(e) => {
            report.error = Some(e.to_string());
            report.termination = "error".into();
            report.timing.total_seconds = elapsed;
            Some(Failure(EXIT_FAILURE, e.to_string()))
        }
    };

    if let Some(path) = &a.out {
        let text = match a.format {
            Format::Json => report.to_json(),
            Format::Csv => report.to_csv(),
        };
        write_out(path, &text)?;
        info!("report written to {}", path.display());
    }
    print_summary(&report);
    match code {
        None => Ok(()),
        Some(f) => Err(f),
    }
}

fn print_summary(r: &RunReport) {
    println!("problem      {}", r.problem);
    println!(
        "pieces       {} then {}, contraction {}",
        r.config.initial_n_pieces, r.config.n_pieces, r.config.contract_frac
    );
    println!("iterations   {}", r.rows.len());
    println!("termination  {}", r.termination);
    if let Some(obj) = r.final_objective {
        println!("objective    {obj:.10e}");
        let point: Vec<String> = r
            .variables
            .iter()
            .zip(&r.final_point)
            .map(|(n, x)| format!("{n} = {x}"))
            .collect();
        println!("point        {}", point.join(", "));
    }
    println!("seconds      {:.3}", r.timing.total_seconds);
}

fn cmd_table(a: &TableArgs) -> Result<(), Failure> {
    if a.budget.is_some_and(|b| !(b > 0.0)) {
        return Err(Failure(EXIT_USAGE, "budget must be positive".into()));
    }
    let mut rows = Vec::new();
    for b in benchmarks() {
        let mut cfg = SppaConfig::for_benchmark(b);
        cfg.time_budget = a.budget;
        let start = Instant::now();
        let outcome = builtin(b.name)
            .map_err(|e| e.to_string())
            .and_then(|p| run(&p, &cfg).map_err(|e| e.to_string()));
        let seconds = start.elapsed().as_secs_f64();
        let row = match outcome {
            Ok(r) => TableRow {
                problem: b.name.into(),
                found: r.best_iter.map(|_| r.best_objective),
                optimal: b.optimum,
                pieces: format!("{}/{}", b.initial_n_pieces, b.n_pieces),
                iterations: r.trace.len(),
                termination: r.termination.as_str().into(),
                error: None,
                seconds,
            },
            Err(e) => TableRow {
                problem: b.name.into(),
                found: None,
                optimal: b.optimum,
                pieces: format!("{}/{}", b.initial_n_pieces, b.n_pieces),
                iterations: 0,
                termination: "error".into(),
                error: Some(e),
                seconds,
            },
        };
        rows.push(row);
    }

    println!(
        "{:<12} {:>16} {:>12} {:>7} {:>6} {:>12} {:>9}",
        "problem", "found", "optimal", "pieces", "iters", "termination", "seconds"
    );
    for r in &rows {
        let found = r.found.map_or("-".to_string(), |v| format!("{v:.6e}"));
        println!(
            "{:<12} {:>16} {:>12} {:>7} {:>6} {:>12} {:>9.3}",
            r.problem, found, r.optimal, r.pieces, r.iterations, r.termination, r.seconds
        );
        if let Some(e) = &r.error {
            println!("  error: {e}");
        }
    }
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&rows).expect("table serializes");
        write_out(path, &(text + "\n"))?;
    }
    if rows.iter().any(|r| r.found.is_some()) {
        Ok(())
    } else {
        Err(Failure(
            EXIT_FAILURE,
            "no benchmark produced an incumbent".into(),
        ))
    }
}

fn cmd_lp(a: &LpArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.file)
        .map_err(|e| Failure(EXIT_USAGE, format!("cannot read {}: {e}", a.file.display())))?;
    let model =
        parse_lp(&text).map_err(|e| Failure(EXIT_PARSE, format!("{}: {e}", a.file.display())))?;
    let cfg = SolverConfig {
        time_limit: a.time_limit,
        ..SolverConfig::default()
    };
    let sol = solve_milp(&model, &cfg).map_err(|e| Failure(EXIT_FAILURE, e.to_string()))?;
    println!("status     {:?}", sol.status);
    println!("nodes      {}", sol.stats.nodes);
    if !sol.status.has_solution() {
        return Err(Failure(
            EXIT_FAILURE,
            format!("no solution ({:?})", sol.status),
        ));
    }
    println!("objective  {}", sol.objective);
    for (v, x) in model.vars.iter().zip(&sol.values) {
        if *x != 0.0 {
            println!("{:<10} {x}", v.name);
        }
    }
    Ok(())
}
