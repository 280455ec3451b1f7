use std::collections::VecDeque;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_serde;
use crate::point::Point;
use crate::solver::schedule::{AlphaSchedule, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Fixed-point quasiconvex subgradient method.
    Fpqsm,
    /// Projected quasi-subgradient method with inexact projections.
    Qsm,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Fpqsm => "fpqsm",
            Algorithm::Qsm => "qsm",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fpqsm" => Ok(Algorithm::Fpqsm),
            "qsm" => Ok(Algorithm::Qsm),
            other => Err(Error::invalid(format!("unknown algorithm `{other}` (expected fpqsm or qsm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Time budget exhausted.
    Budget,
    /// The oracle reported a minimizer.
    AtMinimum,
    MaxIter,
    /// A non-finite value or a failed subproblem; see `RunRecord::message`.
    Aborted,
}

/// Stopping rules and trace settings shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<f64>,
    /// Keep every `trace_stride`-th entry of the traces. Best value and
    /// point are tracked over every iterate regardless.
    #[serde(default = "one")]
    pub trace_stride: usize,
    /// Evaluate `‖x_k - T(x_k)‖` each iteration (one extra operator call).
    #[serde(default = "yes")]
    pub record_residuals: bool,
    /// Keep every iterate (needed by the per-iteration inequality checks).
    #[serde(default)]
    pub record_points: bool,
    /// Keep this many of the most recent iterates.
    #[serde(default)]
    pub tail_points: usize,
    /// Sweep limit for each inner projection (QSM only).
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_sweeps() -> usize {
    crate::inner_projection::DEFAULT_MAX_SWEEPS
}

impl RunOptions {
    pub fn iterations(max_iter: usize) -> Self {
        RunOptions {
            max_iter: Some(max_iter),
            time_budget: None,
            trace_stride: 1,
            record_residuals: true,
            record_points: false,
            tail_points: 0,
            max_sweeps: default_sweeps(),
        }
    }

    pub fn seconds(budget: f64) -> Self {
        RunOptions {
            max_iter: None,
            time_budget: Some(budget),
            ..Self::iterations(0)
        }
    }

    pub fn with_points(mut self) -> Self {
        self.record_points = true;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iter.is_none() && self.time_budget.is_none() {
            return Err(Error::invalid("a run needs an iteration limit or a time budget"));
        }
        if let Some(t) = self.time_budget {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::invalid(format!("time budget must be finite and nonnegative, got {t}")));
            }
        }
        if self.trace_stride == 0 {
            return Err(Error::invalid("trace stride must be at least 1"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn budget(&self) -> Option<Duration> {
        self.time_budget.map(Duration::from_secs_f64)
    }
}

/// Settings echoed into every record for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub step: StepSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSchedule>,
    pub options: RunOptions,
}

/// Outcome of one solver run.
///
/// `value_trace[k-1]` is `f(x_k)`; with a trace stride of 1 the traces have
/// exactly `iterations` entries and `best_value` is their minimum. A run with
/// no iterations reports `f(x_1)` as its best value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub iterations: usize,
    #[serde(with = "float_serde::scalar")]
    pub best_value: f64,
    pub best_point: Point,
    pub initial_point: Point,
    pub final_point: Point,
    #[serde(with = "float_serde::vec")]
    pub value_trace: Vec<f64>,
    #[serde(with = "float_serde::vec")]
    pub residual_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point_trace: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<Point>,
    /// Seconds, including time spent in inner projections.
    pub wall_time: f64,
    /// Seconds spent in inner projections (QSM).
    #[serde(default)]
    pub inner_time: f64,
    #[serde(default)]
    pub inner_sweeps: u64,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunRecord {
    pub fn aborted(&self) -> bool {
        self.stop_reason == StopReason::Aborted
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing run record".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing run record".into(),
            source,
        })
    }
}

/// Incremental construction of a [`RunRecord`] inside the solver loops.
pub(crate) struct Recorder {
    stride: usize,
    record_points: bool,
    tail_len: usize,
    pub(crate) iterations: usize,
    pub(crate) best_value: f64,
    pub(crate) best_point: Point,
    values: Vec<f64>,
    residuals: Vec<f64>,
    points: Vec<Point>,
    tail: VecDeque<Point>,
}

impl Recorder {
    pub(crate) fn new(opts: &RunOptions, x1: &Point, f1: f64) -> Self {
        Recorder {
            stride: opts.trace_stride,
            record_points: opts.record_points,
            tail_len: opts.tail_points,
            iterations: 0,
            best_value: f1,
            best_point: x1.clone(),
            values: Vec::new(),
            residuals: Vec::new(),
            points: Vec::new(),
            tail: VecDeque::new(),
        }
    }

    /// Records `x_k`, `f(x_k)` and (if computed) its residual as iteration
    /// `iterations + 1`.
    pub(crate) fn push(&mut self, x: &Point, fx: f64, residual: Option<f64>) {
        let k = self.iterations + 1;
        if self.iterations == 0 || fx < self.best_value {
            self.best_value = fx;
            self.best_point = x.clone();
        }
        if (k - 1).is_multiple_of(self.stride) {
            self.values.push(fx);
            if let Some(r) = residual {
                self.residuals.push(r);
            }
            if self.record_points {
                self.points.push(x.clone());
            }
        }
        if self.tail_len > 0 {
            if self.tail.len() == self.tail_len {
                self.tail.pop_front();
            }
            self.tail.push_back(x.clone());
        }
        self.iterations = k;
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        self,
        config: RunConfig,
        initial_point: Point,
        final_point: Point,
        wall_time: f64,
        inner_time: f64,
        inner_sweeps: u64,
        stop_reason: StopReason,
        message: Option<String>,
    ) -> RunRecord {
        RunRecord {
            config,
            iterations: self.iterations,
            best_value: self.best_value,
            best_point: self.best_point,
            initial_point,
            final_point,
            value_trace: self.values,
            residual_trace: self.residuals,
            point_trace: self.points,
            tail: self.tail.into(),
            wall_time,
            inner_time,
            inner_sweeps,
            stop_reason,
            message,
        }
    }
}
