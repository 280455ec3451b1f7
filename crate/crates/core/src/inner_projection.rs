//! Approximate metric projection onto an intersection of half-spaces and a
//! box, by Dykstra's cyclic projections with correction terms.
//!
//! Plain cyclic projection only finds *some* feasible point. Keeping one
//! correction vector per set makes the iterates converge to the nearest
//! feasible point instead. Sets are visited in declaration order with the
//! box last.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operators::{BoxSet, HalfSpace};
use crate::point::{dist, dot, Point};

pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Sweeps between two stagnation checkpoints.
const STAGNATION_WINDOW: usize = 1000;

/// An intersection of half-spaces and an optional box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr")]
pub struct ConvexRegion {
    halfspaces: Vec<HalfSpace>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    bounds: Option<BoxSet>,
}

#[derive(Deserialize)]
struct RegionRepr {
    #[serde(default)]
    halfspaces: Vec<HalfSpace>,
    #[serde(rename = "box", default)]
    bounds: Option<BoxSet>,
}

impl TryFrom<RegionRepr> for ConvexRegion {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        ConvexRegion::new(r.halfspaces, r.bounds)
    }
}

impl ConvexRegion {
    pub fn new(halfspaces: Vec<HalfSpace>, bounds: Option<BoxSet>) -> Result<Self> {
        let dim = match (halfspaces.first(), &bounds) {
            (Some(h), _) => h.dim(),
            (None, Some(b)) => b.dim(),
            (None, None) => return Err(Error::invalid("region needs at least one half-space or a box")),
        };
        for h in &halfspaces {
            check_dim(dim, h.dim())?;
        }
        if let Some(b) = &bounds {
            check_dim(dim, b.dim())?;
        }
        Ok(ConvexRegion { halfspaces, bounds })
    }

    /// R^n, expressed as an unbounded box.
    pub fn whole_space(dim: usize) -> Self {
        ConvexRegion {
            halfspaces: Vec::new(),
            bounds: Some(BoxSet::unbounded(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        match (self.halfspaces.first(), &self.bounds) {
            (Some(h), _) => h.dim(),
            (None, Some(b)) => b.dim(),
            (None, None) => unreachable!("validated at construction"),
        }
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn bounds(&self) -> Option<&BoxSet> {
        self.bounds.as_ref()
    }

    /// Largest distance from `x` to any single constituent set.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let hs = self.halfspaces.iter().map(|h| h.violation(x)).fold(0.0, f64::max);
        match &self.bounds {
            Some(b) => hs.max(b.violation(x)),
            None => hs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing region".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing region".into(),
            source,
        })
    }

    fn set_count(&self) -> usize {
        self.halfspaces.len() + usize::from(self.bounds.is_some())
    }

    fn project_onto(&self, i: usize, y: &[f64]) -> Point {
        if i < self.halfspaces.len() {
            crate::operators::project_halfspace(&self.halfspaces[i], y).expect("dimension validated")
        } else {
            crate::operators::project_box(self.bounds.as_ref().expect("box is last"), y).expect("dimension validated")
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DykstraOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Give up (with `timed_out` set) once this instant has passed.
    pub deadline: Option<Instant>,
    pub record_violations: bool,
}

impl DykstraOptions {
    pub fn new(tol: f64, max_sweeps: usize) -> Self {
        DykstraOptions {
            tol,
            max_sweeps,
            deadline: None,
            record_violations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub point: Point,
    /// Completed sweeps over all sets.
    pub iterations: usize,
    pub max_violation: f64,
    /// Smallest `tol` for which the stopping rule would have accepted the
    /// returned point.
    pub achieved_tol: f64,
    pub converged: bool,
    /// Violation stopped improving while still above the tolerance.
    pub infeasible: bool,
    pub timed_out: bool,
    /// Max violation after each sweep, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violation_history: Vec<f64>,
}

/// Projects `z` onto `region` to within `tol`.
///
/// Stops once a sweep moves the iterate and every correction term by at
/// most `tol / 10` and no set is violated by more than `tol / 10`. Running
/// out of sweeps is not an error: the report carries `converged = false`
/// and the tolerance actually reached.
pub fn dykstra_project(region: &ConvexRegion, z: &[f64], tol: f64, max_sweeps: usize) -> Result<ProjectionReport> {
    dykstra_project_with(region, z, &DykstraOptions::new(tol, max_sweeps))
}

pub fn dykstra_project_with(region: &ConvexRegion, z: &[f64], opts: &DykstraOptions) -> Result<ProjectionReport> {
    check_dim(region.dim(), z.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("projection tolerance must be positive, got {}", opts.tol)));
    }
    let eps = opts.tol / 10.0;
    let mut x = Point::from(z.to_vec());
    let initial_violation = region.max_violation(&x);
    let mut report = ProjectionReport {
        point: x.clone(),
        iterations: 0,
        max_violation: initial_violation,
        achieved_tol: 10.0 * initial_violation,
        converged: initial_violation <= eps,
        infeasible: false,
        timed_out: false,
        violation_history: Vec::new(),
    };
    if report.converged {
        return Ok(report);
    }

    let n = z.len();
    let mut increments = vec![vec![0.0; n]; region.set_count()];
    let mut checkpoint = f64::INFINITY;
    let mut y = vec![0.0; n];
    for sweep in 1..=opts.max_sweeps {
        let prev = x.clone();
        let mut inc_change_sq = 0.0;
        for (i, inc) in increments.iter_mut().enumerate() {
            for ((yj, xj), pj) in y.iter_mut().zip(x.iter()).zip(inc.iter()) {
                *yj = xj + pj;
            }
            x = region.project_onto(i, &y);
            for ((pj, yj), xj) in inc.iter_mut().zip(&y).zip(x.iter()) {
                let next = yj - xj;
                inc_change_sq += (next - *pj) * (next - *pj);
                *pj = next;
            }
        }
        // the iterate alone can sit still for a sweep while the corrections
        // are still moving, so both count towards the change
        let change = dist(&x, &prev).max(inc_change_sq.sqrt());
        let violation = region.max_violation(&x);
        if opts.record_violations {
            report.violation_history.push(violation);
        }
        report.iterations = sweep;
        report.max_violation = violation;
        report.achieved_tol = 10.0 * change.max(violation);
        if change <= eps && violation <= eps {
            report.converged = true;
            break;
        }
        if sweep % STAGNATION_WINDOW == 0 {
            if violation > eps && violation >= (1.0 - 1e-9) * checkpoint {
                report.infeasible = true;
                break;
            }
            checkpoint = violation;
        }
        if let Some(deadline) = opts.deadline {
            if Instant::now() >= deadline {
                report.timed_out = true;
                break;
            }
        }
    }
    report.point = x;
    Ok(report)
}

/// Exact projection for the regions with a closed form: a single
/// half-space, a lone box, or (in the plane) a box cut by one half-space.
pub fn exact_project_special(region: &ConvexRegion, z: &[f64]) -> Option<Point> {
    if z.len() != region.dim() {
        return None;
    }
    let bounds = region.bounds.as_ref().filter(|b| !b.is_unbounded());
    match (region.halfspaces.as_slice(), bounds) {
        ([], Some(b)) => crate::operators::project_box(b, z).ok(),
        ([], None) => Some(Point::from(z.to_vec())),
        ([h], None) => crate::operators::project_halfspace(h, z).ok(),
        ([h], Some(b)) if z.len() == 2 => project_box_cut_2d(b, h, z),
        _ => None,
    }
}

/// Nearest point of `box ∩ h` in R². If clamping already lands in `h` that
/// is the answer; otherwise the projection lies on the boundary line of `h`,
/// so it is the nearest point of the segment `line ∩ box`.
fn project_box_cut_2d(b: &BoxSet, h: &HalfSpace, z: &[f64]) -> Option<Point> {
    let clamped = crate::operators::project_box(b, z).ok()?;
    if h.contains(&clamped) {
        return Some(clamped);
    }
    let normal = h.normal();
    let nn = dot(normal, normal);
    let base = [h.threshold() * normal[0] / nn, h.threshold() * normal[1] / nn];
    let dir = [-normal[1], normal[0]];
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..2 {
        let (lo, hi) = (b.lower()[j], b.upper()[j]);
        if dir[j] == 0.0 {
            if base[j] < lo || base[j] > hi {
                return None;
            }
            continue;
        }
        let (a, c) = ((lo - base[j]) / dir[j], (hi - base[j]) / dir[j]);
        t_lo = t_lo.max(a.min(c));
        t_hi = t_hi.min(a.max(c));
    }
    if t_lo > t_hi {
        return None;
    }
    let t = (((z[0] - base[0]) * dir[0] + (z[1] - base[1]) * dir[1]) / dot(&dir, &dir)).clamp(t_lo, t_hi);
    Some(Point::from(vec![base[0] + t * dir[0], base[1] + t * dir[1]]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_lower_bounds() -> ConvexRegion {
        ConvexRegion::new(
            vec![
                HalfSpace::lower(vec![1.0, 0.0], 1.0).unwrap(),
                HalfSpace::lower(vec![0.0, 1.0], 1.0).unwrap(),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn corner_projection() {
        let r = dykstra_project(&two_lower_bounds(), &[0.0, 0.0], 1e-12, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(r.converged);
        assert!(dist(&r.point, &[1.0, 1.0]) < 1e-9);
        assert!(r.max_violation <= 1e-9);
    }

    #[test]
    fn feasible_point_needs_no_sweep() {
        let r = dykstra_project(&two_lower_bounds(), &[2.0, 3.0], 1e-6, 10).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.point.coords(), &[2.0, 3.0]);
        assert!(r.converged);
    }

    #[test]
    fn single_halfspace_matches_closed_form() {
        let h = HalfSpace::upper(vec![0.3, -1.2, 2.0], 0.7).unwrap();
        let region = ConvexRegion::new(vec![h.clone()], None).unwrap();
        let z = [4.0, -3.0, 1.0];
        let r = dykstra_project(&region, &z, 1e-12, 100).unwrap();
        let exact = crate::operators::project_halfspace(&h, &z).unwrap();
        assert!(dist(&r.point, &exact) <= 1e-9);
        assert_eq!(exact_project_special(&region, &z).unwrap(), exact);
    }

    #[test]
    fn rejects_bad_tolerance_and_dims() {
        assert!(dykstra_project(&two_lower_bounds(), &[0.0, 0.0], 0.0, 10).is_err());
        assert!(dykstra_project(&two_lower_bounds(), &[0.0], 1e-3, 10).is_err());
        assert!(ConvexRegion::new(vec![], None).is_err());
    }

    #[test]
    fn sweep_limit_reports_achieved_tolerance() {
        let region = ConvexRegion::new(
            vec![
                HalfSpace::lower(vec![1.0, 0.01], 1.0).unwrap(),
                HalfSpace::lower(vec![1.0, -0.01], 1.0).unwrap(),
            ],
            Some(BoxSet::uniform(2, -5.0, 5.0).unwrap()),
        )
        .unwrap();
        let r = dykstra_project(&region, &[-3.0, 0.2], 1e-14, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(r.achieved_tol > 1e-14);
    }

    #[test]
    fn conflicting_halfspaces_are_flagged() {
        let region = ConvexRegion::new(
            vec![
                HalfSpace::upper(vec![1.0], 0.0).unwrap(),
                HalfSpace::lower(vec![1.0], 2.0).unwrap(),
            ],
            None,
        )
        .unwrap();
        let r = dykstra_project(&region, &[5.0], 1e-6, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(r.infeasible);
        assert!(!r.converged);
        assert!(r.iterations < DEFAULT_MAX_SWEEPS);
    }

    #[test]
    fn deterministic() {
        let region = ConvexRegion::new(
            vec![
                HalfSpace::lower(vec![1.0, 2.0], 1.0).unwrap(),
                HalfSpace::upper(vec![3.0, -1.0], 0.5).unwrap(),
            ],
            Some(BoxSet::uniform(2, 0.0, 1.0).unwrap()),
        )
        .unwrap();
        let a = dykstra_project(&region, &[-0.4, 2.2], 1e-10, 10_000).unwrap();
        let b = dykstra_project(&region, &[-0.4, 2.2], 1e-10, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_forms() {
        let b = BoxSet::uniform(2, 0.0, 1.0).unwrap();
        let region = ConvexRegion::new(vec![], Some(b.clone())).unwrap();
        assert_eq!(exact_project_special(&region, &[2.0, -1.0]).unwrap().coords(), &[1.0, 0.0]);

        // box [0,1]² cut by x + y ≥ 1.5: from the origin the nearest point is (0.75, 0.75)
        let cut = ConvexRegion::new(vec![HalfSpace::lower(vec![1.0, 1.0], 1.5).unwrap()], Some(b.clone())).unwrap();
        let p = exact_project_special(&cut, &[0.0, 0.0]).unwrap();
        assert!(dist(&p, &[0.75, 0.75]) < 1e-15);
        // from far left the segment endpoint (0.5, 1) is nearest
        let p = exact_project_special(&cut, &[-3.0, 2.0]).unwrap();
        assert!(dist(&p, &[0.5, 1.0]) < 1e-15);
        // empty intersection
        let empty = ConvexRegion::new(vec![HalfSpace::lower(vec![1.0, 1.0], 3.0).unwrap()], Some(b)).unwrap();
        assert!(exact_project_special(&empty, &[0.0, 0.0]).is_none());
        assert!(exact_project_special(&two_lower_bounds(), &[0.0, 0.0]).is_none());
    }

    #[test]
    fn json_round_trip() {
        let region = ConvexRegion::new(
            vec![HalfSpace::lower(vec![1.0, 0.0], 1.0).unwrap()],
            Some(BoxSet::uniform(2, 0.0, f64::INFINITY).unwrap()),
        )
        .unwrap();
        let back = ConvexRegion::from_json(&region.to_json().unwrap()).unwrap();
        assert_eq!(back, region);
        assert!(ConvexRegion::from_json(r#"{"halfspaces":[]}"#).is_err());
    }
}
