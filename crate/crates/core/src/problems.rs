//! Cobb-Douglas production-efficiency instances, their random generators,
//! and small diagnostic problems with known optimum.
//!
//! Generation is driven by `ChaCha20Rng::seed_from_u64(seed)`. Stream 0
//! produces the instance and stream 1 the initial points, so the starting
//! points of a benchmark do not depend on how many draws the instance took.
//! Within stream 0 the draw order is `a0, c0, ã_1..ã_n, c_1..c_n`, then for
//! each constraint `b_1..b_n, p_lo, p_hi` (the last only when finite).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::float_serde;
use crate::inner_projection::ConvexRegion;
use crate::operators::{BoxSet, HalfSpace, Operator};
use crate::point::{dot, norm, Point};
use crate::solver::diagnostics::DiagnosticOracle;
use crate::subgradients::{
    cobb_douglas_subgradient, CappedNorm, FractionalObjective, NegCobbDouglas, NormExcess, QuasiSubgradientOracle,
    Subgradient,
};

const INSTANCE_STREAM: u64 = 0;
const INITIAL_POINT_STREAM: u64 = 1;

/// The three constraint regimes of the Cobb-Douglas experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// Lower bounds only, `D = [0, ∞)^n`.
    Unbounded,
    /// Lower and upper bounds, `D = [0, 100]^n`.
    Bounded,
    /// Possibly conflicting bounds handled as a generalized feasible set.
    Gcfs,
}

impl Case {
    pub fn name(&self) -> &'static str {
        match self {
            Case::Unbounded => "unbounded",
            Case::Bounded => "bounded",
            Case::Gcfs => "gcfs",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unbounded" => Ok(Case::Unbounded),
            "bounded" => Ok(Case::Bounded),
            "gcfs" => Ok(Case::Gcfs),
            other => Err(Error::invalid(format!("unknown case `{other}` (expected unbounded, bounded or gcfs)"))),
        }
    }
}

/// `p_lo ≤ ⟨b, x⟩ ≤ p_hi`; `p_hi` may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub b: Vec<f64>,
    pub lower: f64,
    #[serde(with = "float_serde::scalar")]
    pub upper: f64,
}

impl Constraint {
    pub fn has_upper(&self) -> bool {
        self.upper.is_finite()
    }

    pub fn is_conflicting(&self) -> bool {
        self.upper < self.lower
    }

    fn lower_set(&self) -> HalfSpace {
        HalfSpace::lower(self.b.clone(), self.lower).expect("validated constraint")
    }

    fn upper_set(&self) -> Option<HalfSpace> {
        self.has_upper()
            .then(|| HalfSpace::upper(self.b.clone(), self.upper).expect("validated constraint"))
    }
}

/// Maximize `a0 Π x_j^{a_j} / (⟨c, x⟩ + c0)` subject to the constraints and
/// `x ∈ [0, M]^n`, posed as minimization of the negated ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr")]
pub struct CobbDouglasInstance {
    pub case: Case,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub a0: f64,
    pub c0: f64,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// `M`, the upper corner of the domain box; may be `+∞`.
    #[serde(with = "float_serde::scalar")]
    pub bound: f64,
}

#[derive(Deserialize)]
struct InstanceRepr {
    case: Case,
    #[serde(default)]
    seed: u64,
    n: usize,
    m: usize,
    a0: f64,
    c0: f64,
    a: Vec<f64>,
    c: Vec<f64>,
    constraints: Vec<Constraint>,
    #[serde(with = "float_serde::scalar")]
    bound: f64,
}

impl TryFrom<InstanceRepr> for CobbDouglasInstance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        let inst = CobbDouglasInstance {
            case: r.case,
            seed: r.seed,
            n: r.n,
            m: r.m,
            a0: r.a0,
            c0: r.c0,
            a: r.a,
            c: r.c,
            constraints: r.constraints,
            bound: r.bound,
        };
        inst.validate()?;
        Ok(inst)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl CobbDouglasInstance {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::invalid("n and m must be positive"));
        }
        positive("a0", self.a0)?;
        positive("c0", self.c0)?;
        check_dim(self.n, self.a.len())?;
        check_dim(self.n, self.c.len())?;
        for &a in &self.a {
            positive("exponent", a)?;
        }
        let total: f64 = self.a.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("exponents must sum to 1, got {total}")));
        }
        for &c in &self.c {
            positive("cost coefficient", c)?;
        }
        if self.constraints.len() != self.m {
            return Err(Error::invalid(format!("expected {} constraints, got {}", self.m, self.constraints.len())));
        }
        for (i, con) in self.constraints.iter().enumerate() {
            check_dim(self.n, con.b.len())?;
            if con.b.iter().any(|v| !v.is_finite()) || !(norm(&con.b) > 0.0) {
                return Err(Error::invalid(format!("constraint {i}: b must be finite and nonzero")));
            }
            if !con.lower.is_finite() || con.upper.is_nan() || con.upper == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("constraint {i}: bad bounds [{}, {}]", con.lower, con.upper)));
            }
        }
        if !(self.bound > 0.0) {
            return Err(Error::invalid(format!("domain bound must be positive, got {}", self.bound)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The objective as a ratio of the convex `-a0 Π x^a` and `⟨c,x⟩+c0`.
    pub fn fractional(&self) -> FractionalObjective<NegCobbDouglas> {
        FractionalObjective {
            numerator: NegCobbDouglas {
                a0: self.a0,
                exponents: self.a.clone(),
            },
            c: self.c.clone(),
            c0: self.c0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        cobb_douglas_value(self, x)
    }

    /// `D = [0, M]^n`.
    pub fn domain_box(&self) -> BoxSet {
        BoxSet::uniform(self.n, 0.0, self.bound).expect("validated bound")
    }

    /// `P_D`.
    pub fn domain_operator(&self) -> Operator {
        Operator::box_set(self.domain_box())
    }

    /// All finite half-spaces together with `D`, the feasible region the
    /// projection baseline works with.
    pub fn region(&self) -> ConvexRegion {
        let mut hs = Vec::with_capacity(2 * self.m);
        for con in &self.constraints {
            hs.push(con.lower_set());
            hs.extend(con.upper_set());
        }
        ConvexRegion::new(hs, Some(self.domain_box())).expect("validated instance")
    }

    /// The firmly nonexpansive operator the fixed-point method uses for this
    /// instance's case.
    pub fn solver_operator(&self) -> Operator {
        match self.case {
            Case::Gcfs => build_gcfs_operator(self),
            Case::Unbounded | Case::Bounded => build_constraint_operator(self),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing instance".into(),
            source,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|source| Error::Json {
            context: "parsing instance".into(),
            source,
        })
    }
}

impl QuasiSubgradientOracle for CobbDouglasInstance {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        cobb_douglas_value(self, x)
    }

    fn unit_subgradient(&self, x: &[f64]) -> Result<Subgradient> {
        cobb_douglas_subgradient(self, x)
    }
}

/// `-a0 Π x_j^{a_j} / (⟨c,x⟩ + c0)` on the open orthant, `0` elsewhere.
pub fn cobb_douglas_value(inst: &CobbDouglasInstance, x: &[f64]) -> f64 {
    if x.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let num = NegCobbDouglas {
        a0: inst.a0,
        exponents: inst.a.clone(),
    };
    -inst.a0 * num.product(x) / (dot(&inst.c, x) + inst.c0)
}

/// `T = (Id + T̃)/2` with `T̃ = (1/m) Σ_i (P_lo_i + P_hi_i)/2`. A missing
/// upper bound contributes the identity in place of its projection.
pub fn build_constraint_operator(inst: &CobbDouglasInstance) -> Operator {
    let pairs: Vec<Operator> = inst
        .constraints
        .iter()
        .map(|con| {
            let lo = Operator::halfspace(con.lower_set());
            let hi = match con.upper_set() {
                Some(h) => Operator::halfspace(h),
                None => Operator::identity(inst.n).expect("n > 0"),
            };
            Operator::average(vec![lo, hi]).expect("equal dims")
        })
        .collect();
    let t_tilde = Operator::average(pairs).expect("m > 0");
    Operator::firm_up(t_tilde, 0.5).expect("alpha = 1/2")
}

/// `T = (Id + P_D ∘ Σ w_i P_i)/2` over the `2m` half-spaces with uniform
/// weights `1/(2m)`.
pub fn build_gcfs_operator(inst: &CobbDouglasInstance) -> Operator {
    let w = 1.0 / (2 * inst.m) as f64;
    let mut members = Vec::with_capacity(2 * inst.m);
    for con in &inst.constraints {
        members.push((Operator::halfspace(con.lower_set()), w));
        let hi = match con.upper_set() {
            Some(h) => Operator::halfspace(h),
            None => Operator::identity(inst.n).expect("n > 0"),
        };
        members.push((hi, w));
    }
    let g = Operator::gcfs(inst.domain_operator(), members).expect("uniform weights");
    Operator::firm_up(g, 0.5).expect("alpha = 1/2")
}

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform on `(0, 1]`.
fn open_unit(r: &mut ChaCha20Rng) -> f64 {
    1.0 - r.random::<f64>()
}

struct Common {
    a0: f64,
    c0: f64,
    a: Vec<f64>,
    c: Vec<f64>,
}

fn draw_common(r: &mut ChaCha20Rng, n: usize) -> Common {
    let a0 = 10.0 * open_unit(r);
    let c0 = 10.0 * open_unit(r);
    let raw: Vec<f64> = (0..n).map(|_| open_unit(r)).collect();
    let total: f64 = raw.iter().sum();
    let mut a: Vec<f64> = raw.iter().map(|v| v / total).collect();
    // push the rounding residue onto the largest exponent so Σa = 1 tightly
    let drift = 1.0 - a.iter().sum::<f64>();
    let jmax = (0..n).max_by(|&i, &j| a[i].total_cmp(&a[j])).expect("n > 0");
    a[jmax] += drift;
    let c = (0..n).map(|_| 10.0 * open_unit(r)).collect();
    Common { a0, c0, a, c }
}

/// Entries uniform on `[0, 1)`, redrawn in the (measure-zero) event that
/// all of them are zero.
fn draw_b(r: &mut ChaCha20Rng, n: usize) -> (Vec<f64>, f64) {
    loop {
        let b: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let nb = norm(&b);
        if nb > 0.0 {
            return (b, nb);
        }
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::invalid(format!("n and m must be at least 1, got n={n}, m={m}")));
    }
    Ok(())
}

fn assemble(case: Case, seed: u64, n: usize, common: Common, constraints: Vec<Constraint>, bound: f64) -> CobbDouglasInstance {
    let inst = CobbDouglasInstance {
        case,
        seed,
        n,
        m: constraints.len(),
        a0: common.a0,
        c0: common.c0,
        a: common.a,
        c: common.c,
        constraints,
        bound,
    };
    debug_assert!(inst.validate().is_ok());
    inst
}

/// `p_lo ∈ [0, 25‖b‖)`, no upper bounds, `M = ∞`.
pub fn gen_unbounded_case(n: usize, m: usize, seed: u64) -> Result<CobbDouglasInstance> {
    check_sizes(n, m)?;
    let mut r = rng(seed, INSTANCE_STREAM);
    let common = draw_common(&mut r, n);
    let constraints = (0..m)
        .map(|_| {
            let (b, nb) = draw_b(&mut r, n);
            let lower = 25.0 * nb * r.random::<f64>();
            Constraint {
                b,
                lower,
                upper: f64::INFINITY,
            }
        })
        .collect();
    Ok(assemble(Case::Unbounded, seed, n, common, constraints, f64::INFINITY))
}

/// `p_lo ∈ [0, 25‖b‖)`, `p_hi ∈ (75‖b‖, 100‖b‖]`, `M = 100`.
pub fn gen_bounded_case(n: usize, m: usize, seed: u64) -> Result<CobbDouglasInstance> {
    check_sizes(n, m)?;
    let mut r = rng(seed, INSTANCE_STREAM);
    let common = draw_common(&mut r, n);
    let constraints = (0..m)
        .map(|_| {
            let (b, nb) = draw_b(&mut r, n);
            let lower = 25.0 * nb * r.random::<f64>();
            let upper = 100.0 * nb - 25.0 * nb * r.random::<f64>();
            Constraint { b, lower, upper }
        })
        .collect();
    Ok(assemble(Case::Bounded, seed, n, common, constraints, 100.0))
}

/// `p_lo, p_hi ∈ [0, 100‖b‖)` independently, `M = ∞`. If no constraint
/// came out conflicting, the bounds of the first one are swapped.
pub fn gen_gcfs_case(n: usize, m: usize, seed: u64) -> Result<CobbDouglasInstance> {
    check_sizes(n, m)?;
    let mut r = rng(seed, INSTANCE_STREAM);
    let common = draw_common(&mut r, n);
    let mut constraints: Vec<Constraint> = (0..m)
        .map(|_| {
            let (b, nb) = draw_b(&mut r, n);
            let lower = 100.0 * nb * r.random::<f64>();
            let upper = 100.0 * nb * r.random::<f64>();
            Constraint { b, lower, upper }
        })
        .collect();
    if !constraints.iter().any(Constraint::is_conflicting) {
        let first = &mut constraints[0];
        std::mem::swap(&mut first.lower, &mut first.upper);
        if first.lower == first.upper {
            // both draws coincided; move the upper bound down within range
            first.upper *= 0.5;
        }
    }
    Ok(assemble(Case::Gcfs, seed, n, common, constraints, f64::INFINITY))
}

pub fn generate(case: Case, n: usize, m: usize, seed: u64) -> Result<CobbDouglasInstance> {
    match case {
        Case::Unbounded => gen_unbounded_case(n, m, seed),
        Case::Bounded => gen_bounded_case(n, m, seed),
        Case::Gcfs => gen_gcfs_case(n, m, seed),
    }
}

/// `count` starting points, uniform on `[0, min(M, 100)]^n`, from the
/// initial-point stream of `seed`.
pub fn initial_points(n: usize, bound: f64, count: usize, seed: u64) -> Vec<Point> {
    let side = bound.min(100.0);
    let mut r = rng(seed, INITIAL_POINT_STREAM);
    (0..count)
        .map(|_| (0..n).map(|_| side * r.random::<f64>()).collect::<Vec<_>>().into())
        .collect()
}

/// A test problem with known minimum value, minimizer and Hölder data.
#[derive(Clone)]
pub struct DiagnosticProblem {
    pub name: String,
    pub oracle: Arc<dyn QuasiSubgradientOracle>,
    pub diag: DiagnosticOracle,
    pub operator: Operator,
    pub domain: Operator,
}

impl fmt::Debug for DiagnosticProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagnosticProblem")
            .field("name", &self.name)
            .field("diag", &self.diag)
            .field("operator", &self.operator.kind())
            .finish()
    }
}

impl DiagnosticProblem {
    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.oracle.value(x)
    }
}

fn unconstrained(name: String, oracle: Arc<dyn QuasiSubgradientOracle>) -> Result<DiagnosticProblem> {
    let dim = oracle.dim();
    Ok(DiagnosticProblem {
        name,
        diag: DiagnosticOracle::new(0.0, Point::zeros(dim), 1.0, 1.0)?,
        operator: Operator::identity(dim)?,
        domain: Operator::identity(dim)?,
        oracle,
    })
}

/// `f(x) = ‖x‖` on `R^dim`: `f* = 0`, `x* = 0`, `L = β = 1`.
pub fn diagnostic_norm_problem(dim: usize) -> Result<DiagnosticProblem> {
    unconstrained(format!("norm-{dim}"), Arc::new(CappedNorm::norm(dim)?))
}

/// `f(x) = min{‖x‖, α}`, quasiconvex but not convex.
pub fn diagnostic_capped_problem(dim: usize, alpha: f64) -> Result<DiagnosticProblem> {
    unconstrained(format!("capped-norm-{dim}"), Arc::new(CappedNorm::new(dim, alpha)?))
}

/// `f(x) = max{‖x‖ - r, 0}`, minimized on the whole ball of radius `r`.
pub fn norm_excess_problem(dim: usize, radius: f64) -> Result<DiagnosticProblem> {
    unconstrained(format!("norm-excess-{dim}"), Arc::new(NormExcess::new(dim, radius)?))
}
