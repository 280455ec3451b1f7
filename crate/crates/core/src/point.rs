//! Dense points in R^n and the handful of vector kernels the solvers need.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^n.
///
/// Constructed through [`Point::new`] the coordinates are checked to be
/// finite; the arithmetic helpers below assume matching dimensions and are
/// only called after the dimension has been validated at an API boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point must have at least one coordinate"));
        }
        if let Some(j) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "coordinate {j} is not finite ({})",
                coords[j]
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    /// The `j`-th canonical basis vector of R^dim.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.0[j] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

pub fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist_sq(x, y).sqrt()
}

/// `x - y`
pub fn sub(x: &[f64], y: &[f64]) -> Point {
    Point(x.iter().zip(y).map(|(a, b)| a - b).collect())
}

/// `x + s * d`
pub fn add_scaled(x: &[f64], s: f64, d: &[f64]) -> Point {
    Point(x.iter().zip(d).map(|(a, b)| a + s * b).collect())
}

/// `a * x + (1 - a) * y`
pub fn convex_combination(a: f64, x: &[f64], y: &[f64]) -> Point {
    Point(
        x.iter()
            .zip(y)
            .map(|(p, q)| a * p + (1.0 - a) * q)
            .collect(),
    )
}
