use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpqsm::bench::{self, Budget, ExperimentSpec, Format};
use fpqsm::inner_projection::{dykstra_project, ConvexRegion};
use fpqsm::solver::{Algorithm, AlphaSchedule, StepSchedule};

mod solve;

#[derive(Parser, Debug)]
#[command(name = "fpqsm", version, about = "Fixed-point quasiconvex subgradient method: solve, project and benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a benchmark experiment described by a JSON spec.
    Bench(BenchArgs),
    /// Solve a single problem described by a JSON config.
    Solve(SolveArgs),
    /// Project a point onto a region of half-spaces and a box.
    Project(ProjectArgs),
}

/// Overrides shared by `bench` and `solve`.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget per run.
    #[arg(long, conflicts_with = "budget_seconds")]
    budget_iters: Option<usize>,
    /// Wall-clock budget per run, in seconds.
    #[arg(long)]
    budget_seconds: Option<f64>,
    /// Averaging weight α in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
}

impl Overrides {
    fn budget(&self) -> Option<Budget> {
        match (self.budget_iters, self.budget_seconds) {
            (Some(n), _) => Some(Budget::MaxIter(n)),
            (None, Some(s)) => Some(Budget::Seconds(s)),
            (None, None) => None,
        }
    }

    fn alpha(&self) -> Result<Option<AlphaSchedule>, CliError> {
        self.alpha.map(|a| AlphaSchedule::constant(a).map_err(CliError::from)).transpose()
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    spec: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Step rule, `constant:<v>` or `diminishing:<c>`; repeat to run several.
    #[arg(long = "step")]
    steps: Vec<StepSchedule>,
    /// Comma-separated subset of `fpqsm,qsm`.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    samples: Option<usize>,
    /// Result file; format follows `--format`, else the extension.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    step: Option<StepSchedule>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Write the run record as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    region: PathBuf,
    /// Comma-separated coordinates, e.g. `--point=-1,2.5`.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = fpqsm::inner_projection::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// `csv` is not meaningful here; `json` prints the full report.
    #[arg(long)]
    format: Option<Format>,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Usage(String),
    /// The computation failed: exit code 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<fpqsm::Error> for CliError {
    fn from(e: fpqsm::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn format_for(path: Option<&Path>, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    })
}

fn cmd_bench(args: BenchArgs) -> Result<bool, CliError> {
    let text = read_input(&args.spec)?;
    let mut spec: ExperimentSpec = ExperimentSpec::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.overrides.seed {
        spec.seed = seed;
    }
    if let Some(b) = args.overrides.budget() {
        spec.budget = b;
    }
    if let Some(a) = args.overrides.alpha()? {
        spec.alpha = a;
    }
    if !args.steps.is_empty() {
        spec.steps = args.steps;
    }
    if !args.algorithms.is_empty() {
        spec.algorithms = args.algorithms;
    }
    if let Some(s) = args.samples {
        spec.samples = s;
    }
    spec.validate()?;

    let rows = bench::run_experiment(&spec)?;
    print!("{}", bench::format_table(&rows));
    if let Some(out) = &args.out {
        let rendered = bench::render(&rows, format_for(Some(out), args.format))?;
        write_output(out, &rendered)?;
        println!("wrote {}", out.display());
    } else if let Some(f) = args.format {
        print!("{}", bench::render(&rows, f)?);
    }
    let aborted: usize = rows.iter().map(|r| r.aborted).sum();
    if aborted > 0 {
        eprintln!("error: {aborted} run(s) aborted");
    }
    Ok(aborted == 0)
}

pub fn parse_point(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("`{t}` in --point is not a number")))
        })
        .collect()
}

fn cmd_project(args: ProjectArgs) -> Result<bool, CliError> {
    let text = read_input(&args.region)?;
    let region = ConvexRegion::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", args.region.display())))?;
    let z = parse_point(&args.point)?;
    let rep = dykstra_project(&region, &z, args.tol, args.max_sweeps)?;
    let json = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Runtime(e.to_string()))?;
    if args.format == Some(Format::Json) {
        println!("{json}");
    } else {
        println!("point          {}", solve::show_point(&rep.point, usize::MAX));
        println!("sweeps         {}", rep.iterations);
        println!("max violation  {:e}", rep.max_violation);
        println!("achieved tol   {:e}", rep.achieved_tol);
        println!("converged      {}", rep.converged);
        println!("infeasible     {}", rep.infeasible);
    }
    if rep.infeasible {
        eprintln!("warning: the region looks empty; the point is only a best effort");
    }
    if let Some(out) = &args.out {
        write_output(out, &json)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => cmd_bench(a),
        Command::Solve(a) => solve::cmd_solve(a),
        Command::Project(a) => cmd_project(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}
