//! Command-line interface for the ccopt toolkit.
//!
//! Subcommands: `solve` (two-layer explorer), `scenario` (scenario-approach
//! baseline), `bound` (scenario sample-complexity bound), `study` (Monte
//! Carlo study over repeated trials), `oracle` (high-sample violation
//! estimate at a point).
//!
//! Exit status: 0 on success, 2 on configuration or validation errors
//! (one-line diagnostic naming the offending field), 1 on runtime failure.
//! File-writing runs also emit `<prefix>.meta.json` with the fully resolved
//! configuration; feeding that file back through `--config` reproduces the
//! outputs byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use ccopt::{
    explore, problem_by_name, run_study, scenario_bound, solve_scenario, ChanceConstrainedProblem,
    DecisionPoint, ExplorerConfig, MethodConfig, RngStream, ScenarioConfig, StreamPurpose,
    StudyConfig, StudyResult,
};

/// Default root seed; fixed (not wall-clock) so bare runs are reproducible.
const DEFAULT_SEED: u64 = 42;

/// Environment variable overriding the output directory.
const OUTPUT_DIR_ENV: &str = "CCOPT_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "ccopt",
    version,
    about = "Chance-constrained optimization toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-layer explorer and emit its trace
    Solve(SolveArgs),
    /// Solve one scenario program by sampled search
    Scenario(ScenarioArgs),
    /// Print the scenario sample-complexity lower bound N_l
    Bound(BoundArgs),
    /// Monte Carlo study: repeated trials, oracle scoring, statistics
    Study(StudyArgs),
    /// High-sample violation estimate at a point, printed as JSON
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Root seed for all random streams [default: 42]
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for parallel evaluation [default: all cores]
    #[arg(long)]
    workers: Option<usize>,

    /// Problem to run, by name
    #[arg(long, default_value = ccopt::BENCHMARK_NAME)]
    problem: String,

    /// Prefix for output files; CCOPT_OUTPUT_DIR overrides the directory
    #[arg(long, short = 'o')]
    output_prefix: Option<String>,
}

impl CommonArgs {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn problem(&self) -> Result<ChanceConstrainedProblem, CliError> {
        problem_by_name(&self.problem)
            .ok_or_else(|| CliError::Config(format!("problem: unknown name {:?}", self.problem)))
    }

    fn out_path(&self, default_prefix: &str, suffix: &str) -> PathBuf {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        let prefix = self.output_prefix.as_deref().unwrap_or(default_prefix);
        dir.join(format!("{prefix}{suffix}"))
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Candidate decisions per iteration (N_u)
    #[arg(long, default_value_t = 100)]
    n_decisions: usize,

    /// Disturbance samples per iteration (N_delta)
    #[arg(long, default_value_t = 1000)]
    n_disturbances: usize,

    /// Filter margin alpha_eps; candidates above alpha - alpha_eps drop
    #[arg(long, default_value_t = 0.005)]
    alpha_eps: f64,

    /// Iteration budget
    #[arg(long, default_value_t = 50)]
    iterations: usize,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Number of scenarios N
    #[arg(long, default_value_t = 1000)]
    n_scenarios: usize,

    /// Uniform decision samples evaluated by the inner search (M)
    #[arg(long, default_value_t = 100_000)]
    search_points: usize,
}

#[derive(Args)]
struct BoundArgs {
    /// Violation probability level
    #[arg(long)]
    alpha: f64,

    /// Confidence parameter
    #[arg(long)]
    beta: f64,

    /// Decision dimension n_u
    #[arg(long)]
    nu: usize,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// JSON config file; command-line flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of independent trials
    #[arg(long)]
    trials: Option<usize>,

    /// Method: "two-layer" or "scenario"
    #[arg(long)]
    method: Option<String>,

    #[arg(long)]
    n_decisions: Option<usize>,

    #[arg(long)]
    n_disturbances: Option<usize>,

    #[arg(long)]
    alpha_eps: Option<f64>,

    #[arg(long)]
    iterations: Option<usize>,

    #[arg(long)]
    n_scenarios: Option<usize>,

    #[arg(long)]
    search_points: Option<usize>,

    /// Oracle sample count for scoring final answers
    #[arg(long)]
    oracle_n: Option<u64>,

    /// Also emit an SVG scatter plot of the final points
    #[arg(long)]
    plot: bool,

    /// Also emit one trace CSV per trial (two-layer only)
    #[arg(long)]
    traces: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Decision point, comma-separated coordinates (e.g. "-4.15,-4.12")
    #[arg(long, allow_hyphen_values = true)]
    point: String,

    /// Sample count
    #[arg(long, default_value_t = ccopt::DEFAULT_ORACLE_N)]
    n: u64,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ccopt::Error> for CliError {
    fn from(e: ccopt::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Study(args) => cmd_study(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

/// Run `f` on a dedicated rayon pool when a worker count was requested.
fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("JSON encoding: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn meta_object(common: &CommonArgs, aggregates: Option<serde_json::Value>) -> serde_json::Value {
    json!({
        "tool": "ccopt",
        "version": env!("CARGO_PKG_VERSION"),
        "normal_method": ccopt::NORMAL_METHOD,
        "workers": common.workers,
        "aggregates": aggregates,
    })
}

fn cmd_bound(args: BoundArgs) -> Result<(), CliError> {
    let n = scenario_bound(args.alpha, args.beta, args.nu)?;
    println!("{n}");
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let problem = args.common.problem()?;
    let coords: Vec<f64> = args
        .point
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("point: cannot parse {:?}", args.point)))?;
    let point = DecisionPoint::new(coords);
    let seed = args.common.seed();
    let estimate = with_pool(args.common.workers, || {
        ccopt::oracle_violation(
            &problem,
            &point,
            args.n,
            RngStream::derived(seed, 0, 0, StreamPurpose::Oracle),
        )
    })??;
    println!(
        "{}",
        serde_json::to_string_pretty(&estimate).expect("estimate is serializable")
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let problem = args.common.problem()?;
    let config = ExplorerConfig {
        n_decisions: args.n_decisions,
        n_disturbances: args.n_disturbances,
        alpha_margin: args.alpha_eps,
        max_iterations: args.iterations,
        seed: args.common.seed(),
    };
    config.validate(&problem)?;
    let trace = with_pool(args.common.workers, || explore(&problem, &config))??;

    let trace_path = args.common.out_path("solve", ".csv");
    let file = std::fs::File::create(&trace_path).map_err(|e| CliError::io(&trace_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    ccopt::write_trace_csv(&trace, problem.decision_dim(), &mut w)
        .map_err(|e| CliError::io(&trace_path, e))?;
    drop(w);

    let final_json = match &trace.final_incumbent {
        Some(c) => json!({
            "feasible": true,
            "point": c.point,
            "cost": c.cost,
            "estimate": c.estimate,
        }),
        None => json!({
            "feasible": false,
            "reason": "no candidate passed the violation filter in any iteration",
        }),
    };
    write_json(&args.common.out_path("solve", ".json"), &final_json)?;

    let meta = json!({
        "problem": problem.name(),
        "method": "two-layer",
        "seed": config.seed,
        "n_decisions": config.n_decisions,
        "n_disturbances": config.n_disturbances,
        "alpha_eps": config.alpha_margin,
        "iterations": config.max_iterations,
        "meta": meta_object(&args.common, None),
    });
    write_json(&args.common.out_path("solve", ".meta.json"), &meta)?;

    println!(
        "{}",
        serde_json::to_string_pretty(&final_json).expect("result is serializable")
    );
    Ok(())
}

fn cmd_scenario(args: ScenarioArgs) -> Result<(), CliError> {
    let problem = args.common.problem()?;
    let config = ScenarioConfig {
        n_scenarios: args.n_scenarios,
        inner_search_points: args.search_points,
        seed: args.common.seed(),
    };
    config.validate()?;
    let solution = with_pool(args.common.workers, || solve_scenario(&problem, &config))??;

    let result_json = json!({
        "feasible": solution.best.is_some(),
        "point": solution.best.as_ref().map(|(p, _)| p),
        "cost": solution.best.as_ref().map(|(_, c)| c),
        "report": solution.report,
    });
    write_json(&args.common.out_path("scenario", ".json"), &result_json)?;

    let meta = json!({
        "problem": problem.name(),
        "method": "scenario",
        "seed": config.seed,
        "n_scenarios": config.n_scenarios,
        "search_points": config.inner_search_points,
        "meta": meta_object(&args.common, None),
    });
    write_json(&args.common.out_path("scenario", ".meta.json"), &meta)?;

    println!(
        "{}",
        serde_json::to_string_pretty(&result_json).expect("result is serializable")
    );
    Ok(())
}

/// On-disk study configuration. Every field can be overridden by a flag;
/// the `meta` field is ignored on input so an emitted meta file can be fed
/// straight back through `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    method: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    oracle_n: Option<u64>,
    n_decisions: Option<usize>,
    n_disturbances: Option<usize>,
    alpha_eps: Option<f64>,
    iterations: Option<usize>,
    n_scenarios: Option<usize>,
    search_points: Option<usize>,
    #[serde(default)]
    #[allow(dead_code)]
    meta: Option<serde_json::Value>,
}

fn cmd_study(args: StudyArgs) -> Result<(), CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    // the --problem flag has a default, so an explicit file entry wins
    // unless the user passed a non-default problem on the command line
    let problem_name = if args.common.problem != ccopt::BENCHMARK_NAME {
        args.common.problem.clone()
    } else {
        file.problem
            .clone()
            .unwrap_or_else(|| args.common.problem.clone())
    };
    let problem = problem_by_name(&problem_name)
        .ok_or_else(|| CliError::Config(format!("problem: unknown name {problem_name:?}")))?;

    let seed = args.common.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let trials = args.trials.or(file.trials).unwrap_or(100);
    let oracle_n = args
        .oracle_n
        .or(file.oracle_n)
        .unwrap_or(ccopt::DEFAULT_ORACLE_N);
    let method_name = args
        .method
        .clone()
        .or(file.method.clone())
        .unwrap_or_else(|| "two-layer".to_string());

    let (method, method_echo) = match method_name.as_str() {
        "two-layer" => {
            let config = ExplorerConfig {
                n_decisions: args.n_decisions.or(file.n_decisions).unwrap_or(100),
                n_disturbances: args.n_disturbances.or(file.n_disturbances).unwrap_or(1000),
                alpha_margin: args.alpha_eps.or(file.alpha_eps).unwrap_or(0.005),
                max_iterations: args.iterations.or(file.iterations).unwrap_or(50),
                seed,
            };
            let echo = json!({
                "n_decisions": config.n_decisions,
                "n_disturbances": config.n_disturbances,
                "alpha_eps": config.alpha_margin,
                "iterations": config.max_iterations,
            });
            (MethodConfig::TwoLayer(config), echo)
        }
        "scenario" => {
            let config = ScenarioConfig {
                n_scenarios: args.n_scenarios.or(file.n_scenarios).unwrap_or(1000),
                inner_search_points: args.search_points.or(file.search_points).unwrap_or(100_000),
                seed,
            };
            let echo = json!({
                "n_scenarios": config.n_scenarios,
                "search_points": config.inner_search_points,
            });
            (MethodConfig::Scenario(config), echo)
        }
        other => {
            return Err(CliError::Config(format!(
                "method: expected \"two-layer\" or \"scenario\", got {other:?}"
            )))
        }
    };

    let study_config = StudyConfig {
        trials,
        method,
        oracle_n,
        seed,
        keep_traces: args.traces,
    };
    study_config.validate(&problem)?;

    let result = with_pool(args.common.workers, || run_study(&problem, &study_config))??;

    let csv_path = args.common.out_path("study", ".csv");
    ccopt::emit_csv(&result, &csv_path)?;

    let mut effective = json!({
        "problem": problem.name(),
        "method": method_name,
        "trials": trials,
        "seed": seed,
        "oracle_n": oracle_n,
        "meta": meta_object(
            &args.common,
            Some(serde_json::to_value(result.aggregates).unwrap_or(serde_json::Value::Null)),
        ),
    });
    for (k, v) in method_echo.as_object().expect("echo is an object") {
        effective[k.as_str()] = v.clone();
    }
    write_json(&args.common.out_path("study", ".meta.json"), &effective)?;

    if args.plot {
        ccopt::emit_scatter_plot(&[&result], &args.common.out_path("study", ".svg"))?;
    }
    if args.traces {
        emit_traces(&args.common, &result)?;
    }

    let summary = json!({
        "label": result.label,
        "trials": result.rows.len(),
        "aggregates": serde_json::to_value(result.aggregates).unwrap_or(serde_json::Value::Null),
        "csv": csv_path.display().to_string(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary is serializable")
    );
    Ok(())
}

fn emit_traces(common: &CommonArgs, result: &StudyResult) -> Result<(), CliError> {
    for row in &result.rows {
        if let Some(trace) = &row.trace {
            let path = common.out_path("study", &format!(".trace-{}.csv", row.trial));
            let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut w = std::io::BufWriter::new(file);
            ccopt::write_trace_csv(trace, result.decision_dim, &mut w)
                .map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(())
}
