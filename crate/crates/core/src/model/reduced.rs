use serde::{Deserialize, Serialize};

use super::params::PhysicalParams;

/// Model inputs expressed in units of the mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedContext {
    /// κ / ω_m
    pub kappa: f64,
    /// γ / ω_m
    pub gamma: f64,
    /// Δ / ω_m (effective detuning)
    pub detuning: f64,
    /// g / ω_m
    pub coupling: f64,
    /// Δ_p / ω_m
    pub probe_detuning: f64,
    /// ω_m in rad/s, kept to restore physical units.
    pub mechanical_frequency: f64,
}

/// Rates in rad/s recovered from a [`ReducedContext`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalRates {
    pub kappa: f64,
    pub gamma: f64,
    pub detuning: f64,
    pub coupling: f64,
    pub probe_detuning: f64,
}

impl ReducedContext {
    /// A context that lives purely in reduced units (ω_m = 1).
    pub fn new(kappa: f64, gamma: f64, detuning: f64, coupling: f64, probe_detuning: f64) -> Self {
        Self { kappa, gamma, detuning, coupling, probe_detuning, mechanical_frequency: 1.0 }
    }

    pub fn with_probe_detuning(mut self, probe_detuning: f64) -> Self {
        self.probe_detuning = probe_detuning;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.kappa > 0.0
            && self.gamma >= 0.0
            && self.coupling >= 0.0
            && self.detuning.is_finite()
            && self.probe_detuning.is_finite()
            && self.mechanical_frequency > 0.0
    }

    pub fn restore(&self) -> PhysicalRates {
        let w = self.mechanical_frequency;
        PhysicalRates {
            kappa: self.kappa * w,
            gamma: self.gamma * w,
            detuning: self.detuning * w,
            coupling: self.coupling * w,
            probe_detuning: self.probe_detuning * w,
        }
    }
}

/// Divides every rate by ω_m. The detuning is taken from `params.bare_detuning`;
/// use [`reduce_with_detuning`] to supply an effective detuning instead.
pub fn reduce(params: &PhysicalParams, coupling: f64, probe_detuning: f64) -> ReducedContext {
    reduce_with_detuning(params, params.bare_detuning, coupling, probe_detuning)
}

pub fn reduce_with_detuning(
    params: &PhysicalParams,
    detuning: f64,
    coupling: f64,
    probe_detuning: f64,
) -> ReducedContext {
    let w = params.mechanical_frequency;
    ReducedContext {
        kappa: params.cavity_decay / w,
        gamma: params.mechanical_damping / w,
        detuning: detuning / w,
        coupling: coupling / w,
        probe_detuning: probe_detuning / w,
        mechanical_frequency: w,
    }
}
