//! The fixed-point quasiconvex subgradient method, the projection-based
//! baseline, their schedules and run records, and inequality diagnostics.

pub mod diagnostics;
mod fpqsm;
mod qsm;
mod record;
mod schedule;

pub use fpqsm::{fpqsm_run, fpqsm_step, UNIT_NORM_TOL};
pub use qsm::{qsm_run, require_completed};
pub use record::{Algorithm, RunConfig, RunOptions, RunRecord, StopReason};
pub use schedule::{AlphaSchedule, StepSchedule};
