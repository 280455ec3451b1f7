//! Nonexpansive mappings on R^n.
//!
//! An [`Operator`] is an immutable tree: leaves are metric projections onto
//! simple convex sets (half-spaces, boxes, balls) or the identity, inner
//! nodes combine children with rules that preserve nonexpansivity:
//!
//! * [`Operator::average`]: `x ↦ (1/N) Σ T_i(x)`, whose fixed-point set is
//!   the intersection of the members' fixed-point sets (when nonempty);
//! * [`Operator::firm_up`]: `x ↦ αx + (1-α)T(x)` for `α ∈ (0, 1/2]`, firmly
//!   nonexpansive with the same fixed points as `T`;
//! * [`Operator::gcfs`]: `x ↦ P_{X0}(Σ w_i P_{X_i}(x))`, whose fixed points
//!   are the minimizers over `X0` of `½ Σ w_i d(x, X_i)²` even when the
//!   `X_i` do not intersect;
//! * [`Operator::reflect`]: `x ↦ 2T(x) - x` for firmly nonexpansive `T`.
//!
//! Trees serialize to JSON as `{"kind": ..., <parameters>, <children>}`.
//! Every deserialized tree is validated exactly as if it had been built
//! through the constructors.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::float_serde;
use crate::point::{add_scaled, dist, dot, norm, norm_sq, Point};

/// Which side of the hyperplane `⟨b, x⟩ = p` is feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `p ≤ ⟨b, x⟩`
    Lower,
    /// `⟨b, x⟩ ≤ p`
    Upper,
}

/// A closed half-space `{x : p ≤ ⟨b, x⟩}` or `{x : ⟨b, x⟩ ≤ p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HalfSpaceRepr")]
pub struct HalfSpace {
    normal: Vec<f64>,
    threshold: f64,
    sense: Sense,
}

#[derive(Deserialize)]
struct HalfSpaceRepr {
    normal: Vec<f64>,
    threshold: f64,
    sense: Sense,
}

impl TryFrom<HalfSpaceRepr> for HalfSpace {
    type Error = Error;

    fn try_from(r: HalfSpaceRepr) -> Result<Self> {
        HalfSpace::new(r.normal, r.threshold, r.sense)
    }
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, threshold: f64, sense: Sense) -> Result<Self> {
        if normal.is_empty() || normal.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("half-space normal must be a finite, nonempty vector"));
        }
        if !(norm_sq(&normal) > 0.0) {
            return Err(Error::invalid("half-space normal must be nonzero"));
        }
        if !threshold.is_finite() {
            return Err(Error::invalid("half-space threshold must be finite"));
        }
        Ok(HalfSpace {
            normal,
            threshold,
            sense,
        })
    }

    /// `{x : p ≤ ⟨b, x⟩}`
    pub fn lower(normal: Vec<f64>, threshold: f64) -> Result<Self> {
        Self::new(normal, threshold, Sense::Lower)
    }

    /// `{x : ⟨b, x⟩ ≤ p}`
    pub fn upper(normal: Vec<f64>, threshold: f64) -> Result<Self> {
        Self::new(normal, threshold, Sense::Upper)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Signed amount by which `⟨b, x⟩` is on the wrong side of the
    /// threshold; nonpositive on the half-space.
    fn excess(&self, x: &[f64]) -> f64 {
        let bx = dot(&self.normal, x);
        match self.sense {
            Sense::Lower => self.threshold - bx,
            Sense::Upper => bx - self.threshold,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.excess(x) <= 0.0
    }

    /// Euclidean distance from `x` to the half-space.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.excess(x).max(0.0) / norm(&self.normal)
    }

    fn project_unchecked(&self, x: &[f64]) -> Point {
        let bx = dot(&self.normal, x);
        let feasible = match self.sense {
            Sense::Lower => self.threshold <= bx,
            Sense::Upper => bx <= self.threshold,
        };
        if feasible {
            Point::from(x.to_vec())
        } else {
            add_scaled(x, (self.threshold - bx) / norm_sq(&self.normal), &self.normal)
        }
    }
}

/// An axis-aligned box; bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr")]
pub struct BoxSet {
    #[serde(with = "float_serde::vec")]
    lower: Vec<f64>,
    #[serde(with = "float_serde::vec")]
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct BoxRepr {
    #[serde(with = "float_serde::vec")]
    lower: Vec<f64>,
    #[serde(with = "float_serde::vec")]
    upper: Vec<f64>,
}

impl TryFrom<BoxRepr> for BoxSet {
    type Error = Error;

    fn try_from(r: BoxRepr) -> Result<Self> {
        BoxSet::new(r.lower, r.upper)
    }
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("box must have at least one coordinate"));
        }
        check_dim(lower.len(), upper.len())?;
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo > hi {
                return Err(Error::invalid(format!(
                    "box coordinate {j}: bounds [{lo}, {hi}] do not form a nonempty interval"
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// `[lo, hi]^dim`
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// The whole space, as a box with infinite bounds.
    pub fn unbounded(dim: usize) -> Self {
        BoxSet {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|&l| l == f64::NEG_INFINITY)
            && self.upper.iter().all(|&u| u == f64::INFINITY)
    }

    /// Largest per-coordinate distance to the box.
    pub fn violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    fn project_unchecked(&self, x: &[f64]) -> Point {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
            .collect::<Vec<_>>()
            .into()
    }
}

/// A closed ball `{x : ‖x - center‖ ≤ radius}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BallRepr")]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
struct BallRepr {
    center: Vec<f64>,
    radius: f64,
}

impl TryFrom<BallRepr> for Ball {
    type Error = Error;

    fn try_from(r: BallRepr) -> Result<Self> {
        Ball::new(r.center, r.radius)
    }
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ball center must be a finite, nonempty vector"));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("ball radius must be finite and nonnegative, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn project_unchecked(&self, x: &[f64]) -> Point {
        let d = dist(x, &self.center);
        if d <= self.radius {
            return Point::from(x.to_vec());
        }
        let s = self.radius / d;
        x.iter()
            .zip(&self.center)
            .map(|(&v, &c)| c + s * (v - c))
            .collect::<Vec<_>>()
            .into()
    }
}

pub fn project_halfspace(hs: &HalfSpace, x: &[f64]) -> Result<Point> {
    check_dim(hs.dim(), x.len())?;
    Ok(hs.project_unchecked(x))
}

pub fn project_box(b: &BoxSet, x: &[f64]) -> Result<Point> {
    check_dim(b.dim(), x.len())?;
    Ok(b.project_unchecked(x))
}

pub fn project_ball(ball: &Ball, x: &[f64]) -> Result<Point> {
    check_dim(ball.dim(), x.len())?;
    Ok(ball.project_unchecked(x))
}

/// Nonexpansivity class of an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Nonexpansive,
    FirmlyNonexpansive,
}

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A caller-supplied map. Its tag is a claim, not something checked at
/// construction; it cannot be serialized.
#[derive(Clone)]
pub struct CustomMap {
    name: String,
    tag: Tag,
    dim: usize,
    f: Arc<MapFn>,
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMap")
            .field("name", &self.name)
            .field("tag", &self.tag)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedMember {
    pub weight: f64,
    pub op: Operator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Node {
    Identity {
        dim: usize,
    },
    #[serde(rename = "halfspace")]
    HalfSpace(HalfSpace),
    #[serde(rename = "box")]
    BoxSet(BoxSet),
    Ball(Ball),
    Average {
        members: Vec<Operator>,
    },
    FirmUp {
        alpha: f64,
        inner: Box<Operator>,
    },
    Gcfs {
        outer: Box<Operator>,
        members: Vec<WeightedMember>,
    },
    Reflect {
        inner: Box<Operator>,
    },
    #[serde(skip)]
    Custom(CustomMap),
}

/// An immutable nonexpansive mapping R^n → R^n.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Node", into = "Node")]
pub struct Operator {
    node: Node,
    dim: usize,
    tag: Tag,
}

impl From<Operator> for Node {
    fn from(op: Operator) -> Node {
        op.node
    }
}

impl TryFrom<Node> for Operator {
    type Error = Error;

    fn try_from(node: Node) -> Result<Self> {
        let (dim, tag) = match &node {
            Node::Identity { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("identity dimension must be positive"));
                }
                (*dim, Tag::FirmlyNonexpansive)
            }
            Node::HalfSpace(h) => (h.dim(), Tag::FirmlyNonexpansive),
            Node::BoxSet(b) => (b.dim(), Tag::FirmlyNonexpansive),
            Node::Ball(b) => (b.dim(), Tag::FirmlyNonexpansive),
            Node::Average { members } => {
                let first = members
                    .first()
                    .ok_or_else(|| Error::invalid("average of an empty operator list"))?;
                for m in members {
                    check_dim(first.dim, m.dim)?;
                }
                (first.dim, Tag::Nonexpansive)
            }
            Node::FirmUp { alpha, inner } => {
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(Error::invalid(format!("firm_up alpha must lie in (0, 1/2], got {alpha}")));
                }
                (inner.dim, Tag::FirmlyNonexpansive)
            }
            Node::Gcfs { outer, members } => {
                if members.is_empty() {
                    return Err(Error::invalid("generalized feasible set needs at least one member"));
                }
                let mut total = 0.0;
                for m in members {
                    check_dim(outer.dim, m.op.dim)?;
                    if !(m.weight > 0.0) || !m.weight.is_finite() {
                        return Err(Error::invalid(format!("member weight must be positive, got {}", m.weight)));
                    }
                    total += m.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("member weights must sum to 1, got {total}")));
                }
                (outer.dim, Tag::Nonexpansive)
            }
            Node::Reflect { inner } => {
                if inner.tag != Tag::FirmlyNonexpansive {
                    return Err(Error::invalid("reflection needs a firmly nonexpansive operator"));
                }
                (inner.dim, Tag::Nonexpansive)
            }
            Node::Custom(c) => (c.dim, c.tag),
        };
        Ok(Operator { node, dim, tag })
    }
}

impl Operator {
    pub fn identity(dim: usize) -> Result<Self> {
        Node::Identity { dim }.try_into()
    }

    pub fn halfspace(hs: HalfSpace) -> Self {
        Operator {
            dim: hs.dim(),
            tag: Tag::FirmlyNonexpansive,
            node: Node::HalfSpace(hs),
        }
    }

    pub fn box_set(b: BoxSet) -> Self {
        Operator {
            dim: b.dim(),
            tag: Tag::FirmlyNonexpansive,
            node: Node::BoxSet(b),
        }
    }

    pub fn ball(b: Ball) -> Self {
        Operator {
            dim: b.dim(),
            tag: Tag::FirmlyNonexpansive,
            node: Node::Ball(b),
        }
    }

    /// Arithmetic mean of the members. The intersection of their fixed-point
    /// sets is assumed nonempty; that is not checked.
    pub fn average(members: Vec<Operator>) -> Result<Self> {
        Node::Average { members }.try_into()
    }

    /// `x ↦ αx + (1-α)T(x)` with `α ∈ (0, 1/2]`.
    pub fn firm_up(inner: Operator, alpha: f64) -> Result<Self> {
        Node::FirmUp {
            alpha,
            inner: Box::new(inner),
        }
        .try_into()
    }

    /// `x ↦ outer(Σ w_i member_i(x))`, weights positive and summing to one.
    pub fn gcfs(outer: Operator, members: Vec<(Operator, f64)>) -> Result<Self> {
        Node::Gcfs {
            outer: Box::new(outer),
            members: members
                .into_iter()
                .map(|(op, weight)| WeightedMember { weight, op })
                .collect(),
        }
        .try_into()
    }

    /// `x ↦ 2T(x) - x`.
    pub fn reflect(inner: Operator) -> Result<Self> {
        Node::Reflect {
            inner: Box::new(inner),
        }
        .try_into()
    }

    pub fn custom<F>(name: impl Into<String>, dim: usize, tag: Tag, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::invalid("operator dimension must be positive"));
        }
        Node::Custom(CustomMap {
            name: name.into(),
            tag,
            dim,
            f: Arc::new(f),
        })
        .try_into()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn is_firm(&self) -> bool {
        self.tag == Tag::FirmlyNonexpansive
    }

    pub fn is_identity(&self) -> bool {
        match &self.node {
            Node::Identity { .. } => true,
            Node::BoxSet(b) => b.is_unbounded(),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.node {
            Node::Identity { .. } => "identity",
            Node::HalfSpace(_) => "halfspace",
            Node::BoxSet(_) => "box",
            Node::Ball(_) => "ball",
            Node::Average { .. } => "average",
            Node::FirmUp { .. } => "firm_up",
            Node::Gcfs { .. } => "gcfs",
            Node::Reflect { .. } => "reflect",
            Node::Custom(_) => "custom",
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Point> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval(x))
    }

    /// Evaluation without the dimension check; `x.len()` must equal
    /// `self.dim()`.
    pub(crate) fn eval(&self, x: &[f64]) -> Point {
        debug_assert_eq!(x.len(), self.dim);
        match &self.node {
            Node::Identity { .. } => Point::from(x.to_vec()),
            Node::HalfSpace(h) => h.project_unchecked(x),
            Node::BoxSet(b) => b.project_unchecked(x),
            Node::Ball(b) => b.project_unchecked(x),
            Node::Average { members } => {
                let mut acc = vec![0.0; self.dim];
                for m in members {
                    for (a, v) in acc.iter_mut().zip(m.eval(x).iter()) {
                        *a += v;
                    }
                }
                let inv = 1.0 / members.len() as f64;
                acc.iter_mut().for_each(|a| *a *= inv);
                acc.into()
            }
            Node::FirmUp { alpha, inner } => {
                let tx = inner.eval(x);
                x.iter()
                    .zip(tx.iter())
                    .map(|(&v, &t)| alpha * v + (1.0 - alpha) * t)
                    .collect::<Vec<_>>()
                    .into()
            }
            Node::Gcfs { outer, members } => {
                let mut acc = vec![0.0; self.dim];
                for m in members {
                    for (a, v) in acc.iter_mut().zip(m.op.eval(x).iter()) {
                        *a += m.weight * v;
                    }
                }
                outer.eval(&acc)
            }
            Node::Reflect { inner } => {
                let tx = inner.eval(x);
                x.iter()
                    .zip(tx.iter())
                    .map(|(&v, &t)| 2.0 * t - v)
                    .collect::<Vec<_>>()
                    .into()
            }
            Node::Custom(c) => {
                let out = (c.f)(x);
                assert_eq!(out.len(), self.dim, "custom operator `{}` changed the dimension", c.name);
                out.into()
            }
        }
    }

    /// Fixed-point residual `‖x - T(x)‖`.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        Ok(dist(x, &self.apply(x)?))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing operator".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing operator".into(),
            source,
        })
    }

    /// Picard iteration `x ← T(x)` until the residual drops to `tol`.
    /// Returns the last iterate, its residual and the number of
    /// applications of `T`.
    pub fn iterate_to_fixed_point(&self, x0: &[f64], tol: f64, max_iter: usize) -> Result<(Point, f64, usize)> {
        check_dim(self.dim, x0.len())?;
        let mut x = Point::from(x0.to_vec());
        for k in 0..max_iter {
            let tx = self.eval(&x);
            let r = dist(&x, &tx);
            if r <= tol {
                return Ok((x, r, k));
            }
            x = tx;
        }
        let r = dist(&x, &self.eval(&x));
        Ok((x, r, max_iter))
    }
}

pub fn identity(dim: usize) -> Result<Operator> {
    Operator::identity(dim)
}

pub fn average(ops: Vec<Operator>) -> Result<Operator> {
    Operator::average(ops)
}

pub fn firm_up(op: Operator, alpha: f64) -> Result<Operator> {
    Operator::firm_up(op, alpha)
}

pub fn gcfs_operator(outer: Operator, members: Vec<(Operator, f64)>) -> Result<Operator> {
    Operator::gcfs(outer, members)
}
