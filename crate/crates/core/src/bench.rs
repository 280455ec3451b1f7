//! Benchmark harness for the Cobb-Douglas experiments.
//!
//! One experiment fixes a case, a size and a seed. The seed determines the
//! instance and the initial points, and every algorithm and step rule starts
//! from the same points. Each (algorithm, step rule) pair yields one
//! [`ResultRow`] with the mean iteration count and the two quality measures
//! taken at the best iterate of each run:
//! `V_func = mean f(x*)` and `V_dist = mean ‖x* - T(x*)‖`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::point::{dist, Point};
use crate::problems::{generate, initial_points, Case, CobbDouglasInstance};
use crate::solver::{fpqsm_run, qsm_run, Algorithm, AlphaSchedule, RunOptions, RunRecord, StepSchedule};
use crate::subgradients::QuasiSubgradientOracle;

pub const DEFAULT_SAMPLES: usize = 8;

/// Per-run stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    MaxIter(usize),
    /// Wall-clock seconds per run, inner projections included.
    Seconds(f64),
}

impl Budget {
    fn run_options(&self) -> RunOptions {
        match *self {
            Budget::MaxIter(n) => RunOptions::iterations(n),
            Budget::Seconds(s) => RunOptions::seconds(s),
        }
    }

    pub fn is_timed(&self) -> bool {
        matches!(self, Budget::Seconds(_))
    }
}

fn default_steps() -> Vec<StepSchedule> {
    StepSchedule::standard_six()
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Fpqsm, Algorithm::Qsm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub case: Case,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_steps")]
    pub steps: Vec<StepSchedule>,
    #[serde(default)]
    pub alpha: AlphaSchedule,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Sweep cap for each inner projection of the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    /// Use this instance instead of generating one from the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<CobbDouglasInstance>,
}

impl ExperimentSpec {
    pub fn new(case: Case, n: usize, m: usize, budget: Budget, seed: u64) -> Self {
        ExperimentSpec {
            case,
            n,
            m,
            steps: default_steps(),
            alpha: AlphaSchedule::default(),
            samples: DEFAULT_SAMPLES,
            budget,
            seed,
            algorithms: default_algorithms(),
            max_sweeps: None,
            instance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples must be at least 1"));
        }
        if self.steps.is_empty() {
            return Err(Error::invalid("at least one step rule is required"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        if let Budget::Seconds(s) = self.budget {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("time budget must be finite and nonnegative, got {s}")));
            }
        }
        match &self.instance {
            Some(inst) => {
                inst.validate()?;
                if inst.case != self.case || inst.n != self.n || inst.m != self.m {
                    return Err(Error::invalid("embedded instance disagrees with case, n or m"));
                }
            }
            None if self.n == 0 || self.m == 0 => return Err(Error::invalid("n and m must be at least 1")),
            None => {}
        }
        Ok(())
    }

    /// Declared algorithms without repeats, minus the baseline for the
    /// generalized-feasible-set case (its region may be empty).
    pub fn effective_algorithms(&self) -> Vec<Algorithm> {
        let mut out = Vec::new();
        for &a in &self.algorithms {
            if out.contains(&a) || (a == Algorithm::Qsm && self.case == Case::Gcfs) {
                continue;
            }
            out.push(a);
        }
        out
    }

    pub fn instance(&self) -> Result<CobbDouglasInstance> {
        match &self.instance {
            Some(inst) => Ok(inst.clone()),
            None => generate(self.case, self.n, self.m, self.seed),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing experiment spec".into(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing experiment spec".into(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub step: String,
    #[serde(rename = "k")]
    pub k_avg: f64,
    #[serde(rename = "V_func")]
    pub v_func: f64,
    #[serde(rename = "V_dist")]
    pub v_dist: f64,
    /// Number of samples that ended in an abort.
    pub aborted: usize,
}

/// `(mean f(x), mean ‖x - T(x)‖)` over the given points.
pub fn metrics(solutions: &[Point], f: &dyn QuasiSubgradientOracle, t: &Operator) -> Result<(f64, f64)> {
    if solutions.is_empty() {
        return Err(Error::invalid("metrics need at least one solution"));
    }
    let mut vf = 0.0;
    let mut vd = 0.0;
    for x in solutions {
        let tx = t.apply(x)?;
        vf += f.value(x);
        vd += dist(x, &tx);
    }
    let s = solutions.len() as f64;
    Ok((vf / s, vd / s))
}

/// One row's worth of runs.
#[derive(Debug, Clone)]
pub struct RowOutcome {
    pub row: ResultRow,
    pub records: Vec<RunRecord>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_detailed(spec)?.into_iter().map(|o| o.row).collect())
}

/// Like [`run_experiment`] but keeps every run record.
pub fn run_experiment_detailed(spec: &ExperimentSpec) -> Result<Vec<RowOutcome>> {
    spec.validate()?;
    let inst = spec.instance()?;
    let t = inst.solver_operator();
    let domain = inst.domain_operator();
    let region = inst.region();
    let starts = initial_points(inst.n, inst.bound, spec.samples, spec.seed);

    let mut opts = spec.budget.run_options();
    opts.record_residuals = false;
    if let Some(s) = spec.max_sweeps {
        opts.max_sweeps = s;
    }

    let mut out = Vec::new();
    for alg in spec.effective_algorithms() {
        for step in &spec.steps {
            let run_one = |x1: &Point| -> Result<RunRecord> {
                match alg {
                    Algorithm::Fpqsm => fpqsm_run(&inst, &t, &domain, step, &spec.alpha, x1, &opts),
                    Algorithm::Qsm => qsm_run(&inst, &region, step, x1, &opts, None),
                }
            };
            let records: Vec<RunRecord> = if spec.budget.is_timed() {
                starts.iter().map(run_one).collect::<Result<_>>()?
            } else {
                starts.par_iter().map(run_one).collect::<Result<_>>()?
            };
            let best: Vec<Point> = records.iter().map(|r| r.best_point.clone()).collect();
            let (v_func, v_dist) = metrics(&best, &inst, &t)?;
            let k_avg = records.iter().map(|r| r.iterations as f64).sum::<f64>() / records.len() as f64;
            let row = ResultRow {
                algorithm: alg,
                step: step.label(),
                k_avg,
                v_func,
                v_dist,
                aborted: records.iter().filter(|r| r.aborted()).count(),
            };
            out.push(RowOutcome { row, records });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

pub fn render(rows: &[ResultRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(|source| Error::Csv {
                    context: "writing result row".into(),
                    source,
                })?;
            }
            if rows.is_empty() {
                w.write_record(["algorithm", "step", "k", "V_func", "V_dist", "aborted"])
                    .map_err(|source| Error::Csv {
                        context: "writing header".into(),
                        source,
                    })?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Csv {
                context: "flushing results".into(),
                source: e.into_error().into(),
            })?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(|source| Error::Json {
                context: "serializing results".into(),
                source,
            })?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn parse_rows(s: &str, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Csv => csv::Reader::from_reader(s.as_bytes())
            .deserialize()
            .map(|r| {
                r.map_err(|source| Error::Csv {
                    context: "reading result row".into(),
                    source,
                })
            })
            .collect(),
        Format::Json => serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing results".into(),
            source,
        }),
    }
}

pub fn emit(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_rows(path: &Path, format: Format) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_rows(&text, format)
}

/// Aligned plain-text table for terminals.
pub fn format_table(rows: &[ResultRow]) -> String {
    let mut s = format!(
        "{:<10} {:<10} {:>12} {:>18} {:>18} {:>8}\n",
        "algorithm", "step", "k", "V_func", "V_dist", "aborted"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>12.1} {:>18.10e} {:>18.10e} {:>8}",
            r.algorithm.name(),
            r.step,
            r.k_avg,
            r.v_func,
            r.v_dist,
            r.aborted
        );
    }
    s
}
