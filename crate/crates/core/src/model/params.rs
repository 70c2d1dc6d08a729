use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the cavity loss enters the steady-state amplitude.
///
/// `Single` uses the same κ in the steady state, the sideband response and the
/// equations of motion (amplitude-decay reading). `Doubled` uses the
/// `ε_L / (2κ + iΔ)` steady state and integrates with a `2κ` loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaConvention {
    #[default]
    Single,
    Doubled,
}

/// Sign of the static mirror displacement.
///
/// `Derived` follows the radiation force of the Hamiltonian (`q0 > 0`),
/// `Negated` uses `q0 = -ħ g0 |c0|² / (m ω_m²)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q0Sign {
    #[default]
    Derived,
    Negated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conventions {
    pub kappa: KappaConvention,
    pub q0_sign: Q0Sign,
}

impl Conventions {
    pub fn q0_sign_factor(&self) -> f64 {
        match self.q0_sign {
            Q0Sign::Derived => 1.0,
            Q0Sign::Negated => -1.0,
        }
    }
}

/// Coupling-laser drive: either an optical power or the amplitude `ε_L` directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pump {
    /// Pump power in W.
    Power(f64),
    /// Pump amplitude `ε_L` in 1/s.
    Amplitude(f64),
}

/// Laboratory description of the cavity, the mirror and the coupling drive.
///
/// All rates are angular (rad/s). The cavity frequency and the single-photon
/// coupling `g0 = ω_c / L` are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Cavity length L (m).
    pub cavity_length: f64,
    /// Wavelength λ = 2πc/ω_c (m).
    pub pump_wavelength: f64,
    /// Mirror mass m (kg).
    pub mirror_mass: f64,
    /// ω_m (rad/s).
    pub mechanical_frequency: f64,
    /// γ (rad/s).
    pub mechanical_damping: f64,
    /// κ (rad/s).
    pub cavity_decay: f64,
    /// Δ_c = ω_c − ω_L (rad/s).
    pub bare_detuning: f64,
    pub pump: Pump,
    pub conventions: Conventions,
    /// When false the radiation-pressure coupling is switched off (g0 = 0).
    pub mirror_coupled: bool,
}

impl PhysicalParams {
    /// Membrane-in-the-middle parameter set: L = 6.7 cm, λ = 1064 nm,
    /// m = 40 ng, ω_m = 2π·134 kHz, γ = 0.76 rad/s, κ = ω_m/10, Δ = ω_m.
    ///
    /// The pump is left at zero power; callers pick it from a target coupling.
    pub fn thompson() -> Self {
        let omega_m = 2.0 * PI * 134.0e3;
        Self {
            cavity_length: 6.7e-2,
            pump_wavelength: 1.064e-6,
            mirror_mass: 4.0e-11,
            mechanical_frequency: omega_m,
            mechanical_damping: 0.76,
            cavity_decay: omega_m / 10.0,
            bare_detuning: omega_m,
            pump: Pump::Power(0.0),
            conventions: Conventions::default(),
            mirror_coupled: true,
        }
    }

    pub fn with_pump(mut self, pump: Pump) -> Self {
        self.pump = pump;
        self
    }

    pub fn with_conventions(mut self, conventions: Conventions) -> Self {
        self.conventions = conventions;
        self
    }

    pub fn decoupled(mut self) -> Self {
        self.mirror_coupled = false;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("cavity_length", self.cavity_length),
            ("pump_wavelength", self.pump_wavelength),
            ("mirror_mass", self.mirror_mass),
            ("mechanical_frequency", self.mechanical_frequency),
            ("cavity_decay", self.cavity_decay),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParams(format!("{name} must be > 0, got {value}")));
            }
        }
        if !(self.mechanical_damping.is_finite() && self.mechanical_damping >= 0.0) {
            return Err(ModelError::InvalidParams(format!(
                "mechanical_damping must be >= 0, got {}",
                self.mechanical_damping
            )));
        }
        if !self.bare_detuning.is_finite() {
            return Err(ModelError::InvalidParams("bare_detuning must be finite".into()));
        }
        match self.pump {
            Pump::Power(p) if !(p.is_finite() && p >= 0.0) => {
                Err(ModelError::InvalidParams(format!("pump power must be >= 0, got {p}")))
            }
            Pump::Amplitude(a) if !(a.is_finite() && a >= 0.0) => {
                Err(ModelError::InvalidParams(format!("pump amplitude must be >= 0, got {a}")))
            }
            _ => Ok(()),
        }
    }

    /// ω_c = 2πc/λ.
    pub fn cavity_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.pump_wavelength
    }

    /// ω_L = ω_c − Δ_c.
    pub fn pump_frequency(&self) -> f64 {
        self.cavity_frequency() - self.bare_detuning
    }

    /// g0 = ω_c / L in rad/(s·m), or zero when the mirror is decoupled.
    pub fn single_photon_coupling(&self) -> f64 {
        if self.mirror_coupled {
            self.cavity_frequency() / self.cavity_length
        } else {
            0.0
        }
    }

    /// √(ħ / (m ω_m)), the length that turns g0|c0| into a rate.
    pub fn displacement_scale(&self) -> f64 {
        (HBAR / (self.mirror_mass * self.mechanical_frequency)).sqrt()
    }

    /// Loss rate entering the steady state and the equations of motion.
    pub fn effective_decay(&self) -> f64 {
        match self.conventions.kappa {
            KappaConvention::Single => self.cavity_decay,
            KappaConvention::Doubled => 2.0 * self.cavity_decay,
        }
    }

    /// ε_L in 1/s; a power is converted with ε_L = √(2κ P_L / ħω_L).
    pub fn pump_amplitude(&self) -> f64 {
        match self.pump {
            Pump::Amplitude(a) => a,
            Pump::Power(p) => amplitude_from_power(self, p),
        }
    }

    /// P_L in W, the inverse of [`Self::pump_amplitude`].
    pub fn pump_power(&self) -> f64 {
        match self.pump {
            Pump::Power(p) => p,
            Pump::Amplitude(a) => power_from_amplitude(self, a),
        }
    }

    /// Photon-number-to-detuning slope η: Δ_eff = Δ_c − η |c0|² (rad/s).
    pub(crate) fn detuning_pull(&self) -> f64 {
        let g0 = self.single_photon_coupling();
        self.conventions.q0_sign_factor() * HBAR * g0 * g0
            / (self.mirror_mass * self.mechanical_frequency * self.mechanical_frequency)
    }
}

pub(crate) fn amplitude_from_power(params: &PhysicalParams, power: f64) -> f64 {
    (2.0 * params.cavity_decay * power / (HBAR * params.pump_frequency())).sqrt()
}

pub(crate) fn power_from_amplitude(params: &PhysicalParams, amplitude: f64) -> f64 {
    amplitude * amplitude * HBAR * params.pump_frequency() / (2.0 * params.cavity_decay)
}
