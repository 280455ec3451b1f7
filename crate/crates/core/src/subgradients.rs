//! Quasi-subgradient oracles.
//!
//! For a quasiconvex `f`, the quasi-subdifferential at `x` is the normal cone
//! of the strict sublevel set `{y : f(y) < f(x)}` at `x`, i.e. every `g` with
//! `⟨g, y - x⟩ ≤ 0` whenever `f(y) < f(x)`. The solvers only need one unit
//! element of it per iterate. When the cone is the whole space (`x` is a
//! minimizer) any unit vector would do; oracles then return the first basis
//! vector and raise [`Subgradient::at_minimum`] so the caller can stop.
//!
//! Which element of the cone is returned is an implementation detail. Tests
//! should check the defining inequality, not a particular vector.

use crate::error::{check_dim, Error, Result};
use crate::point::{dot, norm, Point};
use crate::problems::CobbDouglasInstance;

/// Raw directions shorter than this are treated as zero.
pub const ZERO_GRADIENT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub direction: Point,
    pub at_minimum: bool,
}

impl Subgradient {
    /// Normalizes `raw` onto the unit sphere, or flags a minimizer when it
    /// is numerically zero.
    pub fn from_raw(raw: Point) -> Self {
        let n = raw.norm();
        if !(n >= ZERO_GRADIENT_TOL) {
            return Self::minimum(raw.dim());
        }
        let direction: Vec<f64> = raw.iter().map(|v| v / n).collect();
        Subgradient {
            direction: direction.into(),
            at_minimum: false,
        }
    }

    pub fn minimum(dim: usize) -> Self {
        Subgradient {
            direction: Point::basis(dim, 0),
            at_minimum: true,
        }
    }
}

/// Objective evaluation paired with a unit quasi-subgradient.
pub trait QuasiSubgradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// `f(x)`; NaN outside the objective's domain.
    fn value(&self, x: &[f64]) -> f64;

    fn unit_subgradient(&self, x: &[f64]) -> Result<Subgradient>;
}

/// A convex functional with subgradient access, used as the numerator of a
/// [`FractionalObjective`].
pub trait ConvexFunctional: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Point;
}

/// `a(x) = ‖x‖²`
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredNorm;

impl ConvexFunctional for SquaredNorm {
    fn value(&self, x: &[f64]) -> f64 {
        dot(x, x)
    }

    fn subgradient(&self, x: &[f64]) -> Point {
        x.iter().map(|v| 2.0 * v).collect::<Vec<_>>().into()
    }
}

/// `a(x) = -a0 Π x_j^{a_j}` on the open positive orthant, with the exponents
/// summing to one. Convex there as the negative of a concave geometric mean.
#[derive(Debug, Clone)]
pub struct NegCobbDouglas {
    pub a0: f64,
    pub exponents: Vec<f64>,
}

impl NegCobbDouglas {
    /// `Π x_j^{a_j}` via logarithms; zero if any coordinate is nonpositive.
    pub fn product(&self, x: &[f64]) -> f64 {
        if x.iter().any(|&v| v <= 0.0) {
            return 0.0;
        }
        self.exponents
            .iter()
            .zip(x)
            .map(|(a, v)| a * v.ln())
            .sum::<f64>()
            .exp()
    }
}

impl ConvexFunctional for NegCobbDouglas {
    fn value(&self, x: &[f64]) -> f64 {
        -self.a0 * self.product(x)
    }

    fn subgradient(&self, x: &[f64]) -> Point {
        let p = self.a0 * self.product(x);
        self.exponents
            .iter()
            .zip(x)
            .map(|(a, v)| -p * a / v)
            .collect::<Vec<_>>()
            .into()
    }
}

/// `f(x) = a(x) / b(x)` with convex `a` and affine `b(x) = ⟨c, x⟩ + c0`
/// positive on the domain of interest.
#[derive(Debug, Clone)]
pub struct FractionalObjective<A> {
    pub numerator: A,
    pub c: Vec<f64>,
    pub c0: f64,
}

impl<A: ConvexFunctional> FractionalObjective<A> {
    pub fn new(numerator: A, c: Vec<f64>, c0: f64) -> Result<Self> {
        if c.is_empty() || !c0.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("denominator coefficients must be finite"));
        }
        Ok(FractionalObjective { numerator, c, c0 })
    }

    pub fn denominator(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + self.c0
    }
}

/// `∂(a - f(x) b)(x) = ∂a(x) - f(x) c`, normalized. Every subgradient of the
/// convex function `a - f(x) b` at `x` lies in the quasi-subdifferential of
/// `a / b` at `x`.
pub fn fractional_subgradient<A: ConvexFunctional>(obj: &FractionalObjective<A>, x: &[f64]) -> Result<Subgradient> {
    check_dim(obj.c.len(), x.len())?;
    let b = obj.denominator(x);
    if !(b > 0.0) {
        return Err(Error::Domain(format!("denominator is {b}, must be positive")));
    }
    let fx = obj.numerator.value(x) / b;
    let mut raw = obj.numerator.subgradient(x);
    for (r, c) in raw.iter_mut().zip(&obj.c) {
        *r -= fx * c;
    }
    Ok(Subgradient::from_raw(raw))
}

impl<A: ConvexFunctional> QuasiSubgradientOracle for FractionalObjective<A> {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let b = self.denominator(x);
        if b > 0.0 {
            self.numerator.value(x) / b
        } else {
            f64::NAN
        }
    }

    fn unit_subgradient(&self, x: &[f64]) -> Result<Subgradient> {
        fractional_subgradient(self, x)
    }
}

/// `x / ‖x‖`, the quasi-subgradient of `min{‖x‖, α}` for any `α > 0`.
pub fn capped_norm_subgradient(_alpha: f64, x: &[f64]) -> Subgradient {
    Subgradient::from_raw(Point::from(x.to_vec()))
}

/// `f(x) = min{‖x‖, α}`; `α = ∞` gives the plain norm.
#[derive(Debug, Clone, Copy)]
pub struct CappedNorm {
    pub dim: usize,
    pub alpha: f64,
}

impl CappedNorm {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 || !(alpha > 0.0) {
            return Err(Error::invalid("capped norm needs dim ≥ 1 and alpha > 0"));
        }
        Ok(CappedNorm { dim, alpha })
    }

    pub fn norm(dim: usize) -> Result<Self> {
        Self::new(dim, f64::INFINITY)
    }
}

impl QuasiSubgradientOracle for CappedNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        norm(x).min(self.alpha)
    }

    fn unit_subgradient(&self, x: &[f64]) -> Result<Subgradient> {
        check_dim(self.dim, x.len())?;
        Ok(capped_norm_subgradient(self.alpha, x))
    }
}

/// `f(x) = max{‖x‖ - r, 0}`: zero on the whole ball of radius `r`, so the
/// solution set has nonempty interior when `r > 0`.
#[derive(Debug, Clone, Copy)]
pub struct NormExcess {
    pub dim: usize,
    pub radius: f64,
}

impl NormExcess {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::invalid("norm excess needs dim ≥ 1 and a finite radius ≥ 0"));
        }
        Ok(NormExcess { dim, radius })
    }
}

impl QuasiSubgradientOracle for NormExcess {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (norm(x) - self.radius).max(0.0)
    }

    fn unit_subgradient(&self, x: &[f64]) -> Result<Subgradient> {
        check_dim(self.dim, x.len())?;
        if self.value(x) <= 0.0 {
            return Ok(Subgradient::minimum(self.dim));
        }
        Ok(Subgradient::from_raw(Point::from(x.to_vec())))
    }
}

/// Quasi-subgradient of the extended Cobb-Douglas efficiency objective.
///
/// On the open orthant this is the normalized gradient. Where some
/// coordinate is nonpositive, `f(x) = 0` and the strict sublevel set sits
/// inside the open orthant, so `-Σ_{x_j ≤ 0} e_j` (normalized) satisfies
/// the defining inequality.
pub fn cobb_douglas_subgradient(inst: &CobbDouglasInstance, x: &[f64]) -> Result<Subgradient> {
    check_dim(inst.n(), x.len())?;
    if x.iter().any(|&v| v <= 0.0) {
        let raw: Vec<f64> = x.iter().map(|&v| if v <= 0.0 { -1.0 } else { 0.0 }).collect();
        return Ok(Subgradient::from_raw(raw.into()));
    }
    fractional_subgradient(&inst.fractional(), x)
}
