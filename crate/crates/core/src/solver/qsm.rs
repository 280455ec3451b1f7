use std::time::{Duration, Instant};

use crate::error::{check_dim, Error, Result};
use crate::inner_projection::{dykstra_project_with, ConvexRegion, DykstraOptions};
use crate::operators::Operator;
use crate::point::{add_scaled, dist, Point};
use crate::solver::record::{Algorithm, Recorder, RunConfig, RunOptions, RunRecord, StopReason};
use crate::solver::schedule::StepSchedule;
use crate::subgradients::QuasiSubgradientOracle;

/// Runs the projected quasi-subgradient method
/// `x_{k+1} ≈ P_region(x_k - v_k g_k)`, each projection computed by Dykstra's
/// algorithm to tolerance `v_k / 10`.
///
/// `region` should already include the box `D`. Time spent projecting counts
/// against the time budget; an iteration cut short by the deadline is not
/// counted. The residual trace is filled only when `residual_op` is given.
pub fn qsm_run(
    oracle: &dyn QuasiSubgradientOracle,
    region: &ConvexRegion,
    steps: &StepSchedule,
    x1: &[f64],
    opts: &RunOptions,
    residual_op: Option<&Operator>,
) -> Result<RunRecord> {
    let n = oracle.dim();
    check_dim(n, region.dim())?;
    check_dim(n, x1.len())?;
    if let Some(t) = residual_op {
        check_dim(n, t.dim())?;
    }
    opts.validate()?;
    let x = Point::new(x1.to_vec())?;
    let config = RunConfig {
        algorithm: Algorithm::Qsm,
        step: *steps,
        alpha: None,
        options: opts.clone(),
    };

    let start = Instant::now();
    let deadline = opts.budget().map(|b| start + b);
    let mut inner_time = Duration::ZERO;
    let mut inner_sweeps: u64 = 0;
    let mut x = x;
    let initial = x.clone();
    let mut rec = Recorder::new(opts, &x, oracle.value(&x));

    macro_rules! finish {
        ($reason:expr, $msg:expr) => {
            return Ok(rec.finish(
                config,
                initial,
                x,
                start.elapsed().as_secs_f64(),
                inner_time.as_secs_f64(),
                inner_sweeps,
                $reason,
                $msg,
            ))
        };
    }

    loop {
        let k = rec.iterations + 1;
        if opts.max_iter.is_some_and(|m| rec.iterations >= m) {
            finish!(StopReason::MaxIter, None);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            finish!(StopReason::Budget, None);
        }

        let fx = oracle.value(&x);
        if !fx.is_finite() {
            finish!(StopReason::Aborted, Some(format!("objective value {fx} at iteration {k}")));
        }
        let g = match oracle.unit_subgradient(&x) {
            Ok(g) => g,
            Err(e) => finish!(
                StopReason::Aborted,
                Some(format!("subgradient oracle failed at iteration {k}: {e}"))
            ),
        };

        if g.at_minimum {
            let residual = residual_op.map(|t| dist(&x, &t.eval(&x)));
            rec.push(&x, fx, residual);
            finish!(StopReason::AtMinimum, None);
        }

        let v = steps.value(k);
        let z = add_scaled(&x, -v, &g.direction);
        let dopts = DykstraOptions {
            deadline,
            ..DykstraOptions::new(v / 10.0, opts.max_sweeps)
        };
        let t0 = Instant::now();
        let report = dykstra_project_with(region, &z, &dopts)?;
        inner_time += t0.elapsed();
        inner_sweeps += report.iterations as u64;

        if report.timed_out && !report.converged {
            finish!(StopReason::Budget, None);
        }
        if report.infeasible {
            finish!(
                StopReason::Aborted,
                Some(format!(
                    "inner projection at iteration {k} stalled with constraint violation {:e}; the region looks empty",
                    report.max_violation
                ))
            );
        }
        if !report.point.is_finite() {
            finish!(StopReason::Aborted, Some(format!("iterate became non-finite at iteration {k}")));
        }

        let residual = residual_op.map(|t| dist(&x, &t.eval(&x)));
        rec.push(&x, fx, residual);
        x = report.point;
    }
}

/// Convenience check used by callers that want an error instead of an
/// aborted record.
pub fn require_completed(record: &RunRecord) -> Result<()> {
    match (&record.stop_reason, &record.message) {
        (StopReason::Aborted, Some(m)) => Err(Error::Domain(m.clone())),
        (StopReason::Aborted, None) => Err(Error::Domain("run aborted".into())),
        _ => Ok(()),
    }
}
