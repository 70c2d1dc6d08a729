//! Sideband response of a driven optomechanical cavity.
//!
//! * [`model`]: steady state, closed-form and linear-solve sideband amplitudes.
//! * [`nullfinder`]: locating the operating point where the Stokes amplitude
//!   `c₊` vanishes, plus response sweeps and the anti-Stokes bandwidth.
//! * [`timedomain`]: mean-field integration with a two-tone drive and lock-in
//!   extraction of the sideband amplitudes.
//! * [`cli`]: configuration, command dispatch and CSV/manifest output.

pub mod model;
pub mod nullfinder;
pub mod timedomain;
pub mod cli;
