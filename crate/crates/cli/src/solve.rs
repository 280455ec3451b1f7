//! The `solve` subcommand and its JSON config.

use std::sync::Arc;

use fpqsm::bench::Budget;
use fpqsm::inner_projection::ConvexRegion;
use fpqsm::operators::Operator;
use fpqsm::problems::{
    diagnostic_capped_problem, diagnostic_norm_problem, generate, initial_points, norm_excess_problem, Case,
    CobbDouglasInstance, DiagnosticProblem,
};
use fpqsm::solver::diagnostics::{detect_oscillation, OSCILLATION_WINDOW};
use fpqsm::solver::{fpqsm_run, qsm_run, Algorithm, AlphaSchedule, RunOptions, StepSchedule, StopReason};
use fpqsm::subgradients::QuasiSubgradientOracle;
use serde::Deserialize;

use crate::{read_input, write_output, CliError, SolveArgs};

const SHOWN_COORDS: usize = 8;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `‖x‖`
    Norm { dim: usize },
    /// `min{‖x‖, cap}`
    CappedNorm { dim: usize, cap: f64 },
    /// `max{‖x‖ - radius, 0}`
    NormExcess { dim: usize, radius: f64 },
    CobbDouglas { instance: CobbDouglasInstance },
    /// A Cobb-Douglas instance drawn from the seed.
    Generated {
        case: Case,
        n: usize,
        m: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn fpqsm_default() -> Algorithm {
    Algorithm::Fpqsm
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemConfig,
    #[serde(default = "fpqsm_default")]
    pub algorithm: Algorithm,
    pub step: StepSchedule,
    #[serde(default)]
    pub alpha: AlphaSchedule,
    /// Required for the diagnostic problems; drawn from the seed otherwise.
    #[serde(default)]
    pub x1: Option<Vec<f64>>,
    pub budget: Budget,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
}

struct Setup {
    oracle: Arc<dyn QuasiSubgradientOracle>,
    t: Operator,
    domain: Operator,
    region: ConvexRegion,
    default_x1: Option<Vec<f64>>,
}

fn diagnostic(p: DiagnosticProblem) -> Setup {
    let dim = p.dim();
    Setup {
        oracle: p.oracle,
        t: p.operator,
        domain: p.domain,
        region: ConvexRegion::whole_space(dim),
        default_x1: None,
    }
}

fn cobb_douglas(inst: CobbDouglasInstance) -> Setup {
    let x1 = initial_points(inst.n, inst.bound, 1, inst.seed).remove(0);
    Setup {
        t: inst.solver_operator(),
        domain: inst.domain_operator(),
        region: inst.region(),
        default_x1: Some(x1.to_vec()),
        oracle: Arc::new(inst),
    }
}

fn setup(problem: ProblemConfig, seed: Option<u64>) -> Result<Setup, CliError> {
    Ok(match problem {
        ProblemConfig::Norm { dim } => diagnostic(diagnostic_norm_problem(dim)?),
        ProblemConfig::CappedNorm { dim, cap } => diagnostic(diagnostic_capped_problem(dim, cap)?),
        ProblemConfig::NormExcess { dim, radius } => diagnostic(norm_excess_problem(dim, radius)?),
        ProblemConfig::CobbDouglas { mut instance } => {
            if let Some(s) = seed {
                instance.seed = s;
            }
            cobb_douglas(instance)
        }
        ProblemConfig::Generated { case, n, m, seed: s } => cobb_douglas(generate(case, n, m, seed.unwrap_or(s))?),
    })
}

/// `[a, b, c, … (n total)]` once there are more than `limit` entries.
pub fn show_point(x: &[f64], limit: usize) -> String {
    let shown: Vec<String> = x.iter().take(limit).map(|v| format!("{v}")).collect();
    if x.len() > limit {
        format!("[{}, … ({} total)]", shown.join(", "), x.len())
    } else {
        format!("[{}]", shown.join(", "))
    }
}

pub fn cmd_solve(args: SolveArgs) -> Result<bool, CliError> {
    let text = read_input(&args.config)?;
    let mut cfg: SolveConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    let o = &args.overrides;
    if let Some(b) = o.budget() {
        cfg.budget = b;
    }
    if let Some(a) = o.alpha()? {
        cfg.alpha = a;
    }
    if let Some(s) = args.step {
        cfg.step = s;
    }
    if let Some(a) = args.algorithm {
        cfg.algorithm = a;
    }

    let s = setup(cfg.problem, o.seed)?;
    let x1 = cfg
        .x1
        .or(s.default_x1)
        .ok_or_else(|| CliError::Usage("this problem needs an explicit `x1`".into()))?;

    let mut opts = match cfg.budget {
        Budget::MaxIter(n) => RunOptions::iterations(n),
        Budget::Seconds(t) => RunOptions::seconds(t),
    };
    opts.tail_points = OSCILLATION_WINDOW;
    if let Some(m) = cfg.max_sweeps {
        opts.max_sweeps = m;
    }
    let rec = match cfg.algorithm {
        Algorithm::Fpqsm => fpqsm_run(&*s.oracle, &s.t, &s.domain, &cfg.step, &cfg.alpha, &x1, &opts)?,
        Algorithm::Qsm => qsm_run(&*s.oracle, &s.region, &cfg.step, &x1, &opts, Some(&s.t))?,
    };

    let residual = s.t.residual(&rec.best_point)?;
    println!("algorithm   {}", cfg.algorithm.name());
    println!("step        {}", cfg.step);
    println!("stop        {}", stop_name(rec.stop_reason));
    println!("iterations  {}", rec.iterations);
    println!("best value  {:e}", rec.best_value);
    println!("best point  {}", show_point(&rec.best_point, SHOWN_COORDS));
    println!("residual    {residual:e}");
    println!("wall time   {:.3} s", rec.wall_time);
    if detect_oscillation(&rec) {
        eprintln!(
            "warning: trace is non-convergent: the last {OSCILLATION_WINDOW} iterates alternate between two points"
        );
    }
    if let Some(out) = &args.out {
        write_output(out, &rec.to_json()?)?;
    }
    if rec.aborted() {
        eprintln!("error: run aborted: {}", rec.message.as_deref().unwrap_or("no detail"));
        return Ok(false);
    }
    Ok(true)
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::Budget => "budget",
        StopReason::AtMinimum => "at_minimum",
        StopReason::MaxIter => "max_iter",
        StopReason::Aborted => "aborted",
    }
}
