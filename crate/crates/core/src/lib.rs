//! Fixed-point quasiconvex subgradient method.
//!
//! Minimizes a quasiconvex `f` over `D ∩ Fix(T)`, where `T` is a firmly
//! nonexpansive mapping whose fixed points encode the constraints and `D` is
//! a simple set with an explicit projection. Each iteration is
//!
//! ```text
//! x_{k+1} = P_D(α_k x_k + (1 - α_k) T(x_k - v_k g_k))
//! ```
//!
//! with `g_k` a unit quasi-subgradient of `f` at `x_k`. Because only `T` is
//! evaluated, no projection onto the constraint set is ever needed.
//!
//! ```
//! use fpqsm::operators::Operator;
//! use fpqsm::solver::{fpqsm_run, AlphaSchedule, RunOptions, StepSchedule};
//! use fpqsm::subgradients::CappedNorm;
//!
//! let f = CappedNorm::norm(2).unwrap();
//! let id = Operator::identity(2).unwrap();
//! let rec = fpqsm_run(
//!     &f,
//!     &id,
//!     &id,
//!     &StepSchedule::Diminishing(1.0),
//!     &AlphaSchedule::default(),
//!     &[2.0, 0.0],
//!     &RunOptions::iterations(1000),
//! )
//! .unwrap();
//! assert!(rec.best_value < 0.1);
//! ```
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
mod float_serde;
pub mod inner_projection;
pub mod operators;
pub mod point;
pub mod problems;
pub mod solver;
pub mod subgradients;

pub use error::{Error, Result};
pub use operators::Operator;
pub use point::Point;
