//! Checks of the convergence inequalities on recorded runs, for problems
//! whose optimal value, a minimizer and a Hölder constant are known.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dist, dist_sq, dot, sub, Point};
use crate::solver::record::RunRecord;
use crate::solver::schedule::{AlphaSchedule, StepSchedule};

/// Slack allowed in the per-iteration distance inequality.
pub const LEMMA_SLACK: f64 = 1e-10;
/// Slack allowed in the diminishing-step rate bound.
pub const RATE_SLACK: f64 = 1e-8;

/// Known optimum and Hölder data: `|f(z) - f(x)| ≤ L‖z - x‖^β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticOracle {
    pub f_star: f64,
    pub x_star: Point,
    pub lipschitz: f64,
    pub beta: f64,
}

impl DiagnosticOracle {
    pub fn new(f_star: f64, x_star: Point, lipschitz: f64, beta: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !(beta > 0.0) || !f_star.is_finite() {
            return Err(Error::invalid("diagnostic data needs finite f_star and positive L, beta"));
        }
        Ok(DiagnosticOracle {
            f_star,
            x_star,
            lipschitz,
            beta,
        })
    }

    fn gap_term(&self, fx: f64) -> f64 {
        ((fx - self.f_star) / self.lipschitz).powf(1.0 / self.beta)
    }
}

fn full_points(record: &RunRecord) -> Result<&[Point]> {
    if record.config.options.trace_stride != 1 || record.point_trace.len() != record.iterations {
        return Err(Error::invalid(
            "this check needs every iterate: run with record_points and trace stride 1",
        ));
    }
    Ok(&record.point_trace)
}

/// Evaluates, for each recorded pair `(x_k, x_{k+1})`,
///
/// `‖x_{k+1}-x*‖² ≤ ‖x_k-x*‖² - 2v_k(1-α_k)((f(x_k)-f*)/L)^{1/β} + (1-α_k)v_k²`.
///
/// Entries are `None` where `f(x_k) ≤ f*` (the inequality makes no claim
/// there).
pub fn lemma1_check(
    record: &RunRecord,
    diag: &DiagnosticOracle,
    steps: &StepSchedule,
    alphas: &AlphaSchedule,
) -> Result<Vec<Option<bool>>> {
    let points = full_points(record)?;
    let xs = &diag.x_star;
    Ok(points
        .windows(2)
        .zip(&record.value_trace)
        .enumerate()
        .map(|(i, (pair, &fx))| {
            if fx <= diag.f_star {
                return None;
            }
            let k = i + 1;
            let v = steps.value(k);
            let a = alphas.value(k);
            let lhs = dist_sq(&pair[1], xs);
            let rhs = dist_sq(&pair[0], xs) - 2.0 * v * (1.0 - a) * diag.gap_term(fx) + (1.0 - a) * v * v;
            Some(lhs <= rhs + LEMMA_SLACK)
        })
        .collect())
}

/// Right-hand side of the diminishing-step bound for `v_k = c/k` and
/// constant `α`:
/// `f* + L((‖x1-x*‖² + 2c²(1-α)) / (2c(1-α) log(k+1)))^β`.
pub fn corollary_rate_bound(diag: &DiagnosticOracle, x1: &[f64], c: f64, alpha: f64, k: usize) -> f64 {
    let num = dist_sq(x1, &diag.x_star) + 2.0 * c * c * (1.0 - alpha);
    let den = 2.0 * c * (1.0 - alpha) * ((k + 1) as f64).ln();
    diag.f_star + diag.lipschitz * (num / den).powf(diag.beta)
}

/// True iff `f(x*_k)` (the best value among the first `k` iterates) obeys
/// [`corollary_rate_bound`] for every recorded `k`.
pub fn rate_bound_check(record: &RunRecord, diag: &DiagnosticOracle, c: f64, alpha: f64) -> Result<bool> {
    if record.config.options.trace_stride != 1 {
        return Err(Error::invalid("rate check needs the full value trace"));
    }
    let mut best = f64::INFINITY;
    for (i, &fx) in record.value_trace.iter().enumerate() {
        best = best.min(fx);
        let k = i + 1;
        if best > corollary_rate_bound(diag, &record.initial_point, c, alpha, k) + RATE_SLACK {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Limit bound for a constant step `v`: `f* + L(v/2)^β`.
pub fn theorem1_value_bound(diag: &DiagnosticOracle, v: f64) -> f64 {
    diag.f_star + diag.lipschitz * (v / 2.0).powf(diag.beta)
}

/// Bound on the level-set radius after `k` constant steps:
/// `‖x1-x*‖² / (2(1-α)kv) + v/2`.
pub fn constant_rate_bound(x1_dist: f64, alpha: f64, k: usize, v: f64) -> f64 {
    x1_dist * x1_dist / (2.0 * (1.0 - alpha) * k as f64 * v) + v / 2.0
}

/// `f(x) - f* ≤ L⟨g, x - x*⟩^β` (with slack 1e-8), vacuous when `f(x) ≤ f*`.
pub fn holder_consistency(diag: &DiagnosticOracle, fx: f64, g: &[f64], x: &[f64]) -> bool {
    if fx <= diag.f_star {
        return true;
    }
    let inner = dot(g, &sub(x, &diag.x_star));
    if inner < 0.0 {
        return false;
    }
    fx - diag.f_star <= diag.lipschitz * inner.powf(diag.beta) + 1e-8
}

/// Minimum length of a trace tail before oscillation is reported.
pub const OSCILLATION_WINDOW: usize = 100;

/// Detects a persistent two-cycle in the most recent iterates: over the last
/// [`OSCILLATION_WINDOW`] points, `x_{k+2} = x_k` while `x_{k+1} ≠ x_k`.
///
/// Uses the record's tail when present, otherwise the point trace. Returns
/// false when fewer points are available.
pub fn detect_oscillation(record: &RunRecord) -> bool {
    let pts: &[Point] = if record.tail.len() >= OSCILLATION_WINDOW {
        &record.tail
    } else {
        &record.point_trace
    };
    if pts.len() < OSCILLATION_WINDOW {
        return false;
    }
    let w = &pts[pts.len() - OSCILLATION_WINDOW..];
    let scale = w.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let same = 1e-9 * scale;
    w.windows(3)
        .all(|t| dist(&t[0], &t[2]) <= same && dist(&t[0], &t[1]) > 1e3 * same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Operator;
    use crate::solver::fpqsm::fpqsm_run;
    use crate::solver::record::RunOptions;
    use crate::subgradients::{CappedNorm, QuasiSubgradientOracle};

    fn norm_diag() -> DiagnosticOracle {
        DiagnosticOracle::new(0.0, Point::zeros(2), 1.0, 1.0).unwrap()
    }

    fn run(steps: StepSchedule, iters: usize) -> RunRecord {
        let id = Operator::identity(2).unwrap();
        fpqsm_run(
            &CappedNorm::norm(2).unwrap(),
            &id,
            &id,
            &steps,
            &AlphaSchedule::default(),
            &[2.0, 0.0],
            &RunOptions::iterations(iters).with_points(),
        )
        .unwrap()
    }

    #[test]
    fn lemma_holds_and_negative_control_fails() {
        let rec = run(StepSchedule::Constant(0.1), 500);
        let checks = lemma1_check(&rec, &norm_diag(), &rec.config.step, &AlphaSchedule::default()).unwrap();
        assert_eq!(checks.len(), rec.iterations - 1);
        assert!(checks.iter().flatten().all(|&b| b));

        let bad = DiagnosticOracle::new(0.0, Point::zeros(2), 0.25, 1.0).unwrap();
        let checks = lemma1_check(&rec, &bad, &rec.config.step, &AlphaSchedule::default()).unwrap();
        assert!(checks.iter().flatten().any(|&b| !b));
    }

    #[test]
    fn lemma_requires_points() {
        let mut rec = run(StepSchedule::Constant(0.1), 5);
        rec.point_trace.clear();
        assert!(lemma1_check(&rec, &norm_diag(), &rec.config.step, &AlphaSchedule::default()).is_err());
    }

    #[test]
    fn corollary_at_k1_uses_log2() {
        let d = norm_diag();
        let b = corollary_rate_bound(&d, &[2.0, 0.0], 1.0, 0.5, 1);
        assert!((b - (4.0 + 1.0) / (2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rate_bound_and_negative_control() {
        let rec = run(StepSchedule::Diminishing(1.0), 2000);
        assert!(rate_bound_check(&rec, &norm_diag(), 1.0, 0.5).unwrap());
        let bad = DiagnosticOracle::new(0.0, Point::zeros(2), 1e-3, 1.0).unwrap();
        assert!(!rate_bound_check(&rec, &bad, 1.0, 0.5).unwrap());
    }

    #[test]
    fn holder_consistency_on_norm() {
        let f = CappedNorm::norm(2).unwrap();
        let d = norm_diag();
        for x in [[3.0, 4.0], [-1.0, 0.5], [1e-3, 0.0]] {
            let g = f.unit_subgradient(&x).unwrap();
            assert!(holder_consistency(&d, f.value(&x), &g.direction, &x));
        }
        assert!(!holder_consistency(&d, 5.0, &[1.0, 0.0], &[1.0, 0.0]));
    }

    #[test]
    fn oscillation_detected_only_for_two_cycles() {
        let id = Operator::identity(1).unwrap();
        let mut opts = RunOptions::iterations(300);
        opts.tail_points = OSCILLATION_WINDOW;
        let osc = fpqsm_run(
            &CappedNorm::new(1, 1.0).unwrap(),
            &id,
            &id,
            &StepSchedule::Constant(2.0),
            &AlphaSchedule::default(),
            &[1.5],
            &opts,
        )
        .unwrap();
        assert!(detect_oscillation(&osc));

        let calm = fpqsm_run(
            &CappedNorm::new(1, 1.0).unwrap(),
            &id,
            &id,
            &StepSchedule::Diminishing(1.0),
            &AlphaSchedule::default(),
            &[1.5],
            &opts,
        )
        .unwrap();
        assert!(!detect_oscillation(&calm));
    }
}
