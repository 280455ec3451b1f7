use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step sizes `v_k`, indexed from `k = 1`.
///
/// Serialized as `"constant:<v>"` or `"diminishing:<c>"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StepSchedule {
    /// `v_k = v`
    Constant(f64),
    /// `v_k = c / k`, so `v_k → 0` and `Σ v_k = ∞`.
    Diminishing(f64),
}

impl StepSchedule {
    pub fn constant(v: f64) -> Result<Self> {
        Self::Constant(v).validated()
    }

    pub fn diminishing(c: f64) -> Result<Self> {
        Self::Diminishing(c).validated()
    }

    fn validated(self) -> Result<Self> {
        let p = self.parameter();
        if p > 0.0 && p.is_finite() {
            Ok(self)
        } else {
            Err(Error::invalid(format!("step parameter must be positive and finite, got {p}")))
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            StepSchedule::Constant(v) | StepSchedule::Diminishing(v) => v,
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "step indices start at 1");
        match *self {
            StepSchedule::Constant(v) => v,
            StepSchedule::Diminishing(c) => c / k as f64,
        }
    }

    /// Table label in the style `1e-1` / `1e-1/k`.
    pub fn label(&self) -> String {
        match *self {
            StepSchedule::Constant(v) => format!("{v:e}"),
            StepSchedule::Diminishing(c) => format!("{c:e}/k"),
        }
    }

    /// The three constant and three diminishing rules used throughout the
    /// Cobb-Douglas experiments.
    pub fn standard_six() -> Vec<StepSchedule> {
        let mut rules: Vec<_> = [1e-1, 1e-2, 1e-3].into_iter().map(StepSchedule::Constant).collect();
        rules.extend([1e-1, 1e-2, 1e-3].into_iter().map(StepSchedule::Diminishing));
        rules
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Constant(v) => write!(f, "constant:{v}"),
            StepSchedule::Diminishing(c) => write!(f, "diminishing:{c}"),
        }
    }
}

impl FromStr for StepSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("step rule `{s}` is not of the form constant:<v> or diminishing:<c>")))?;
        let p: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("step rule `{s}`: `{value}` is not a number")))?;
        match kind.trim() {
            "constant" => Self::constant(p),
            "diminishing" => Self::diminishing(p),
            other => Err(Error::invalid(format!("unknown step rule kind `{other}`"))),
        }
    }
}

impl TryFrom<String> for StepSchedule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StepSchedule> for String {
    fn from(s: StepSchedule) -> String {
        s.to_string()
    }
}

/// Averaging weights `α_k ∈ (0, 1]` of the Krasnosel'skii-Mann step.
///
/// Serialized as a number (constant) or an array; an array is read from
/// `k = 1` and its last entry is held once exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub enum AlphaSchedule {
    Constant(f64),
    Sequence(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl TryFrom<AlphaRepr> for AlphaSchedule {
    type Error = Error;

    fn try_from(r: AlphaRepr) -> Result<Self> {
        match r {
            AlphaRepr::Constant(a) => AlphaSchedule::constant(a),
            AlphaRepr::Sequence(v) => AlphaSchedule::sequence(v),
        }
    }
}

impl From<AlphaSchedule> for AlphaRepr {
    fn from(a: AlphaSchedule) -> AlphaRepr {
        match a {
            AlphaSchedule::Constant(a) => AlphaRepr::Constant(a),
            AlphaSchedule::Sequence(v) => AlphaRepr::Sequence(v),
        }
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1], got {a}")))
    }
}

impl AlphaSchedule {
    pub fn constant(a: f64) -> Result<Self> {
        check_alpha(a)?;
        Ok(AlphaSchedule::Constant(a))
    }

    pub fn sequence(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("alpha sequence is empty"));
        }
        values.iter().try_for_each(|&a| check_alpha(a))?;
        Ok(AlphaSchedule::Sequence(values))
    }

    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self {
            AlphaSchedule::Constant(a) => *a,
            AlphaSchedule::Sequence(v) => v[(k - 1).min(v.len() - 1)],
        }
    }
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule::Constant(0.5)
    }
}
