//! Mean-field integration of the driven cavity and lock-in extraction of the
//! sideband amplitudes, used as an independent check on the analytic response.

mod demod;
mod integrate;
mod oracle;

use thiserror::Error;

use crate::model::ModelError;
use crate::nullfinder::NullError;

pub use demod::{demodulate, DemodResult, MIN_WINDOW_PERIODS};
pub use integrate::{
    integrate, max_step, DriveSpec, Integrator, State, TimeTrace, STEP_HALVING_TOLERANCE,
};
pub use oracle::{
    null_operating_point, oracle_compare, settle_time, OperatingPoint, OracleComparison,
    OracleOptions, MAX_PROBE_RATIO,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeDomainError {
    #[error("probe/pump ratio {ratio:e} is outside (0, 1e-2]")]
    ProbeTooStrong { ratio: f64 },
    #[error("step {dt:e} s must be positive and at most {limit:e} s")]
    InvalidStep { dt: f64, limit: f64 },
    #[error("invalid span: t_end = {t_end:e} s, record_from = {record_from:e} s")]
    InvalidSpan { t_end: f64, record_from: f64 },
    #[error("state became non-finite at t = {t:e} s")]
    NonFinite { t: f64 },
    #[error("step-halving deviation {deviation:e} exceeds tolerance")]
    StepTooLarge { deviation: f64 },
    #[error("demodulation window holds only {samples} samples")]
    WindowTooShort { samples: usize },
    #[error("window {window:?} lies outside the trace {trace:?}")]
    WindowOutsideTrace { window: (f64, f64), trace: (f64, f64) },
    #[error("window spans {periods:.2} beat periods; at least 20 are needed")]
    IllConditioned { periods: f64 },
    #[error("the decoupled comparison needs a non-zero pump")]
    NoPump,
    #[error("self-consistent null operating point did not settle")]
    NoOperatingPoint,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Null(#[from] NullError),
}
