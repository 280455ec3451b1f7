use std::time::Instant;

use crate::error::{check_dim, Error, Result};
use crate::operators::Operator;
use crate::point::{dist, norm, Point};
use crate::solver::record::{Algorithm, Recorder, RunConfig, RunOptions, RunRecord, StopReason};
use crate::solver::schedule::{AlphaSchedule, StepSchedule};
use crate::subgradients::QuasiSubgradientOracle;

/// Tolerance on `‖g‖ = 1` accepted by [`fpqsm_step`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// One iteration: `P_D(αx + (1-α) T(x - v g))`.
pub fn fpqsm_step(x: &[f64], g: &[f64], v: f64, alpha: f64, t: &Operator, domain: &Operator) -> Result<Point> {
    check_dim(t.dim(), x.len())?;
    check_dim(t.dim(), g.len())?;
    check_dim(t.dim(), domain.dim())?;
    if (norm(g) - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::invalid(format!("subgradient must have unit norm, got {}", norm(g))));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(v >= 0.0) {
        return Err(Error::invalid(format!("step size must be nonnegative, got {v}")));
    }
    Ok(step_unchecked(x, g, v, alpha, t, domain))
}

fn step_unchecked(x: &[f64], g: &[f64], v: f64, alpha: f64, t: &Operator, domain: &Operator) -> Point {
    let shifted: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - v * b).collect();
    let tx = t.eval(&shifted);
    let mixed: Point = x
        .iter()
        .zip(tx.iter())
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
        .collect::<Vec<_>>()
        .into();
    if domain.is_identity() {
        mixed
    } else {
        domain.eval(&mixed)
    }
}

/// Runs the fixed-point quasiconvex subgradient method from `P_D(x1)`.
///
/// `t` must be tagged firmly nonexpansive. The run ends at the iteration or
/// time limit, when the oracle flags a minimizer, or (recorded as
/// [`StopReason::Aborted`]) when a non-finite value shows up.
pub fn fpqsm_run(
    oracle: &dyn QuasiSubgradientOracle,
    t: &Operator,
    domain: &Operator,
    steps: &StepSchedule,
    alphas: &AlphaSchedule,
    x1: &[f64],
    opts: &RunOptions,
) -> Result<RunRecord> {
    let n = oracle.dim();
    check_dim(n, t.dim())?;
    check_dim(n, domain.dim())?;
    check_dim(n, x1.len())?;
    opts.validate()?;
    if !t.is_firm() {
        return Err(Error::invalid(format!(
            "the operator handed to the solver must be firmly nonexpansive (got a `{}` node tagged {:?}); wrap it with firm_up",
            t.kind(),
            t.tag()
        )));
    }
    let config = RunConfig {
        algorithm: Algorithm::Fpqsm,
        step: *steps,
        alpha: Some(alphas.clone()),
        options: opts.clone(),
    };

    let start = Instant::now();
    let budget = opts.budget();
    let mut x = domain.eval(x1);
    let initial = x.clone();
    let f1 = oracle.value(&x);
    let mut rec = Recorder::new(opts, &x, f1);

    let finish = |rec: Recorder, x: Point, reason: StopReason, message: Option<String>| {
        rec.finish(config.clone(), initial.clone(), x, start.elapsed().as_secs_f64(), 0.0, 0, reason, message)
    };

    if !x.is_finite() {
        return Ok(finish(rec, x, StopReason::Aborted, Some("initial point is not finite".into())));
    }

    loop {
        let k = rec.iterations + 1;
        if opts.max_iter.is_some_and(|m| rec.iterations >= m) {
            return Ok(finish(rec, x, StopReason::MaxIter, None));
        }
        if budget.is_some_and(|b| start.elapsed() >= b) {
            return Ok(finish(rec, x, StopReason::Budget, None));
        }

        let fx = oracle.value(&x);
        if !fx.is_finite() {
            let msg = format!("objective value {fx} at iteration {k}");
            return Ok(finish(rec, x, StopReason::Aborted, Some(msg)));
        }
        let g = match oracle.unit_subgradient(&x) {
            Ok(g) => g,
            Err(e) => {
                let msg = format!("subgradient oracle failed at iteration {k}: {e}");
                return Ok(finish(rec, x, StopReason::Aborted, Some(msg)));
            }
        };
        let residual = opts.record_residuals.then(|| dist(&x, &t.eval(&x)));
        rec.push(&x, fx, residual);
        if g.at_minimum {
            return Ok(finish(rec, x, StopReason::AtMinimum, None));
        }

        let next = step_unchecked(&x, &g.direction, steps.value(k), alphas.value(k), t, domain);
        if !next.is_finite() {
            let msg = format!("iterate became non-finite at iteration {k}");
            return Ok(finish(rec, x, StopReason::Aborted, Some(msg)));
        }
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subgradients::CappedNorm;

    fn id(n: usize) -> Operator {
        Operator::identity(n).unwrap()
    }

    #[test]
    fn step_examples() {
        let x = fpqsm_step(&[1.5], &[1.0], 2.0, 0.5, &id(1), &id(1)).unwrap();
        assert_eq!(x.coords(), &[0.5]);
        let x = fpqsm_step(&[0.5], &[1.0], 2.0, 0.5, &id(1), &id(1)).unwrap();
        assert_eq!(x.coords(), &[-0.5]);
        let x = fpqsm_step(&[0.3, -7.0], &[0.6, 0.8], 0.0, 0.5, &id(2), &id(2)).unwrap();
        assert_eq!(x.coords(), &[0.3, -7.0]);
    }

    #[test]
    fn step_validates_inputs() {
        assert!(fpqsm_step(&[1.0], &[0.5], 1.0, 0.5, &id(1), &id(1)).is_err());
        assert!(fpqsm_step(&[1.0], &[1.0], 1.0, 0.0, &id(1), &id(1)).is_err());
        assert!(fpqsm_step(&[1.0, 2.0], &[1.0], 1.0, 0.5, &id(2), &id(2)).is_err());
    }

    #[test]
    fn step_lands_in_domain() {
        let d = Operator::box_set(crate::operators::BoxSet::uniform(1, 0.0, 1.0).unwrap());
        let x = fpqsm_step(&[0.2], &[1.0], 3.0, 0.5, &id(1), &d).unwrap();
        assert_eq!(x.coords(), &[0.0]);
    }

    #[test]
    fn zero_iterations_reports_projected_start() {
        let f = CappedNorm::norm(2).unwrap();
        let d = Operator::ball(crate::operators::Ball::new(vec![0.0, 0.0], 1.0).unwrap());
        let rec = fpqsm_run(
            &f,
            &id(2),
            &d,
            &StepSchedule::Constant(0.1),
            &AlphaSchedule::default(),
            &[3.0, 4.0],
            &RunOptions::iterations(0),
        )
        .unwrap();
        assert_eq!(rec.iterations, 0);
        assert!(rec.value_trace.is_empty());
        assert_eq!(rec.stop_reason, StopReason::MaxIter);
        assert!((rec.best_value - 1.0).abs() < 1e-15);
        assert_eq!(rec.initial_point, rec.final_point);
    }

    #[test]
    fn rejects_plain_nonexpansive_operator() {
        let f = CappedNorm::norm(1).unwrap();
        let avg = Operator::average(vec![id(1)]).unwrap();
        let err = fpqsm_run(
            &f,
            &avg,
            &id(1),
            &StepSchedule::Constant(0.1),
            &AlphaSchedule::default(),
            &[1.0],
            &RunOptions::iterations(5),
        );
        assert!(err.is_err());
    }

    #[test]
    fn norm_decreases_by_half_step() {
        let f = CappedNorm::norm(2).unwrap();
        let rec = fpqsm_run(
            &f,
            &id(2),
            &id(2),
            &StepSchedule::Constant(0.1),
            &AlphaSchedule::default(),
            &[1.0, 0.0],
            &RunOptions::iterations(25),
        )
        .unwrap();
        // ‖x_k‖ = 1 - 0.05 (k-1) until it would drop below 0.05
        for (k, v) in rec.value_trace.iter().enumerate().take(20) {
            assert!((v - (1.0 - 0.05 * k as f64)).abs() < 1e-12, "k={} v={v}", k + 1);
        }
        assert_eq!(rec.value_trace.len(), rec.iterations);
        let min = rec.value_trace.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(rec.best_value, min);
    }

    #[test]
    fn non_finite_objective_aborts() {
        struct Bad;
        impl QuasiSubgradientOracle for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                if x[0] < 0.5 {
                    f64::NAN
                } else {
                    x[0]
                }
            }
            fn unit_subgradient(&self, _x: &[f64]) -> Result<crate::subgradients::Subgradient> {
                Ok(crate::subgradients::Subgradient::from_raw(vec![1.0].into()))
            }
        }
        let rec = fpqsm_run(
            &Bad,
            &id(1),
            &id(1),
            &StepSchedule::Constant(0.5),
            &AlphaSchedule::default(),
            &[1.0],
            &RunOptions::iterations(100),
        )
        .unwrap();
        assert_eq!(rec.stop_reason, StopReason::Aborted);
        assert!(rec.message.is_some());
        assert_eq!(rec.iterations, 3);
    }

    #[test]
    fn time_budget_stops() {
        let f = CappedNorm::new(1, 1.0).unwrap();
        let rec = fpqsm_run(
            &f,
            &id(1),
            &id(1),
            &StepSchedule::Constant(2.0),
            &AlphaSchedule::default(),
            &[1.5],
            &RunOptions::seconds(0.02),
        )
        .unwrap();
        assert_eq!(rec.stop_reason, StopReason::Budget);
        assert!(rec.iterations > 0);
    }
}
