//! Domain types, steady state and first-order sideband response.

mod params;
mod pump;
mod reduced;
mod response;
mod steady;

use thiserror::Error;

pub use params::{
    Conventions, KappaConvention, PhysicalParams, Pump, Q0Sign, HBAR, SPEED_OF_LIGHT,
};
pub use pump::{effective_coupling, pump_power_for_coupling, PumpSetting, COUPLING_MATCH};
pub use reduced::{reduce, reduce_with_detuning, PhysicalRates, ReducedContext};
pub use response::{
    linearized_response, output_field, sideband_response, Derivation, OutputFieldComponents,
    ResponseParts, SidebandResponse, SINGULAR_DENOMINATOR, SINGULAR_PIVOT,
};
pub use steady::{solve_steady_state, SteadyState, DEGENERATE_ROOT_GAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bistability cubic has no non-negative real root")]
    NoRealRoot,
    #[error("steady-state branches are degenerate: {roots:?}")]
    DegenerateBistability { roots: Vec<f64> },
    #[error("response denominator is singular (|D| = {magnitude:e})")]
    SingularDenominator { magnitude: f64 },
    #[error("linearized system is singular (relative pivot {relative_pivot:e})")]
    SingularSystem { relative_pivot: f64 },
    #[error("coupling {target:e} rad/s not attainable (got {achieved:e})")]
    NotAttainable { target: f64, achieved: f64 },
}
