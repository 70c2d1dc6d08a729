use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Value;

use crate::model::{Conventions, KappaConvention, PhysicalParams, Pump, Q0Sign};
use crate::nullfinder::{
    SweepAxis, SweepVariable, DEFAULT_TOLERANCE, REFERENCE_COUPLING, REFERENCE_PROBE_DETUNING,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("`{key}` is a frequency and needs a unit tag, e.g. {{ value = 1.0, unit = \"hz\" }}")]
    UnitMissing { key: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), message: message.into() }
}

/// A value that is either a number or the self-found null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Value(f64),
    Keyword(NullKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKeyword {
    Null,
}

impl Target {
    pub const NULL: Target = Target::Keyword(NullKeyword::Null);

    pub fn value(&self) -> Option<f64> {
        match self {
            Target::Value(v) => Some(*v),
            Target::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl AxisConfig {
    pub fn to_axis(&self, variable: SweepVariable, key: &str) -> Result<SweepAxis, ConfigError> {
        let axis = SweepAxis::linear(variable, self.start, self.stop, self.points);
        axis.validate().map_err(|e| invalid(key, e.to_string()))?;
        Ok(axis)
    }
}

/// Explicit physical parameters. Lengths in m, mass in kg; every rate is a
/// table `{ value, unit }` with unit `hz`, `rad_per_s` or `omega_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub cavity_length: f64,
    pub pump_wavelength: f64,
    pub mirror_mass: f64,
    pub mechanical_frequency: Value,
    pub mechanical_damping: Value,
    pub cavity_decay: Value,
    pub detuning: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RateUnit {
    Hz,
    RadPerS,
    OmegaM,
}

fn tagged_rate(key: &str, raw: &Value) -> Result<(f64, RateUnit), ConfigError> {
    let table = match raw {
        Value::Float(_) | Value::Integer(_) => {
            return Err(ConfigError::UnitMissing { key: key.to_string() })
        }
        Value::Table(t) => t,
        _ => return Err(invalid(key, "expected { value = <number>, unit = \"hz\" | \"rad_per_s\" | \"omega_m\" }")),
    };
    if let Some(extra) = table.keys().find(|k| *k != "value" && *k != "unit") {
        return Err(invalid(&format!("{key}.{extra}"), "unknown key"));
    }
    let value = match table.get("value") {
        Some(Value::Float(v)) => *v,
        Some(Value::Integer(v)) => *v as f64,
        Some(_) => return Err(invalid(&format!("{key}.value"), "expected a number")),
        None => return Err(invalid(&format!("{key}.value"), "missing")),
    };
    let unit = match table.get("unit").and_then(Value::as_str) {
        Some("hz") => RateUnit::Hz,
        Some("rad_per_s") => RateUnit::RadPerS,
        Some("omega_m") => RateUnit::OmegaM,
        None => return Err(ConfigError::UnitMissing { key: key.to_string() }),
        Some(other) => {
            return Err(invalid(&format!("{key}.unit"), format!("unknown unit `{other}`")))
        }
    };
    Ok((value, unit))
}

fn to_rad_per_s(key: &str, raw: &Value, omega_m: f64) -> Result<f64, ConfigError> {
    let (value, unit) = tagged_rate(key, raw)?;
    Ok(match unit {
        RateUnit::Hz => 2.0 * PI * value,
        RateUnit::RadPerS => value,
        RateUnit::OmegaM => value * omega_m,
    })
}

impl ParamsSection {
    fn resolve(&self) -> Result<PhysicalParams, ConfigError> {
        let (_, unit) = tagged_rate("params.mechanical_frequency", &self.mechanical_frequency)?;
        if unit == RateUnit::OmegaM {
            return Err(invalid("params.mechanical_frequency.unit", "cannot be expressed in omega_m"));
        }
        let omega_m = to_rad_per_s("params.mechanical_frequency", &self.mechanical_frequency, 0.0)?;
        Ok(PhysicalParams {
            cavity_length: self.cavity_length,
            pump_wavelength: self.pump_wavelength,
            mirror_mass: self.mirror_mass,
            mechanical_frequency: omega_m,
            mechanical_damping: to_rad_per_s("params.mechanical_damping", &self.mechanical_damping, omega_m)?,
            cavity_decay: to_rad_per_s("params.cavity_decay", &self.cavity_decay, omega_m)?,
            bare_detuning: to_rad_per_s("params.detuning", &self.detuning, omega_m)?,
            ..PhysicalParams::thompson()
        })
    }
}

/// Pump setting for the physical commands: a target coupling g/ω_m or a power in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self { coupling: Some(REFERENCE_COUPLING), power: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseSection {
    /// g/ω_m
    pub coupling: f64,
    /// Δ_p/ω_m
    pub probe_detuning: f64,
}

impl Default for ResponseSection {
    fn default() -> Self {
        Self { coupling: REFERENCE_COUPLING, probe_detuning: REFERENCE_PROBE_DETUNING }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Coupling held fixed along the detuning axis.
    pub coupling: f64,
    /// Probe detuning held fixed along the coupling axis.
    pub probe_detuning: f64,
    pub detuning_axis: AxisConfig,
    pub coupling_axis: AxisConfig,
}

pub const DEFAULT_DETUNING_AXIS: AxisConfig = AxisConfig { start: 0.9995, stop: 1.0005, points: 20001 };

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            coupling: REFERENCE_COUPLING,
            probe_detuning: REFERENCE_PROBE_DETUNING,
            detuning_axis: DEFAULT_DETUNING_AXIS,
            coupling_axis: AxisConfig { start: 0.0, stop: 0.01, points: 1001 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSection {
    pub tolerance: f64,
}

impl Default for NullSection {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EitSection {
    pub coupling_axis: AxisConfig,
}

impl Default for EitSection {
    fn default() -> Self {
        Self { coupling_axis: AxisConfig { start: 0.0, stop: 0.01, points: 1001 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthSection {
    /// g/ω_m, or "null" for the self-found null coupling.
    pub coupling: Target,
    pub detuning_axis: AxisConfig,
}

impl Default for BandwidthSection {
    fn default() -> Self {
        Self { coupling: Target::Value(REFERENCE_COUPLING), detuning_axis: DEFAULT_DETUNING_AXIS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// g/ω_m, or "null" for the self-consistent null of the physical system.
    pub coupling: Target,
    /// Δ_p/ω_m, or "null".
    pub probe_detuning: Target,
    pub probe_ratio: f64,
    pub steps_per_period: f64,
    pub window_periods: u32,
    /// Keep every n-th sample in the trace dump.
    pub trace_stride: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            coupling: Target::NULL,
            probe_detuning: Target::NULL,
            probe_ratio: 1e-3,
            steps_per_period: 1000.0,
            window_periods: 64,
            trace_stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// g/ω_m, or "null"; 0 disables the mirror coupling.
    pub coupling: Target,
    /// Δ_p/ω_m values; empty means five points spanning the null.
    pub probe_detunings: Vec<f64>,
    pub probe_ratio: f64,
    /// Gate on the relative error against the linearized response.
    pub tolerance: f64,
    pub steps_per_period: f64,
    pub window_periods: u32,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            coupling: Target::NULL,
            probe_detunings: Vec::new(),
            probe_ratio: 1e-3,
            tolerance: 5e-3,
            steps_per_period: 1000.0,
            window_periods: 64,
        }
    }
}

/// Parsed configuration. Serializing it back gives a file that reloads to the
/// same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub kappa_convention: KappaConvention,
    #[serde(default)]
    pub q0_sign: Q0Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default)]
    pub pump: PumpSection,
    #[serde(default)]
    pub response: ResponseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub null: NullSection,
    #[serde(default)]
    pub eit: EitSection,
    #[serde(default)]
    pub bandwidth: BandwidthSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

pub const PRESETS: &[&str] = &["thompson"];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: Some("thompson".to_string()),
            out: default_out(),
            kappa_convention: KappaConvention::default(),
            q0_sign: Q0Sign::default(),
            params: None,
            pump: PumpSection::default(),
            response: ResponseSection::default(),
            sweep: SweepSection::default(),
            null: NullSection::default(),
            eit: EitSection::default(),
            bandwidth: BandwidthSection::default(),
            simulate: SimulateSection::default(),
            verify: VerifySection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = match e.span() {
                Some(span) => line_column(text, span.start),
                None => (0, 0),
            };
            ConfigError::Parse { line, column, message: e.message().to_string() }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    pub fn conventions(&self) -> Conventions {
        Conventions { kappa: self.kappa_convention, q0_sign: self.q0_sign }
    }

    /// Physical parameters without a pump; the preset applies when neither
    /// `preset` nor `[params]` is given.
    pub fn base_params(&self) -> Result<PhysicalParams, ConfigError> {
        let params = match (&self.preset, &self.params) {
            (Some(_), Some(_)) => {
                return Err(invalid("params", "`preset` and `[params]` are mutually exclusive"))
            }
            (None, None) => PhysicalParams::thompson(),
            (Some(name), None) => match name.as_str() {
                "thompson" => PhysicalParams::thompson(),
                other => {
                    return Err(invalid(
                        "preset",
                        format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")),
                    ))
                }
            },
            (None, Some(section)) => section.resolve()?,
        };
        let params = params.with_conventions(self.conventions());
        params.validate().map_err(|e| invalid("params", e.to_string()))?;
        Ok(params)
    }

    /// The `[pump]` section as a drive, or the coupling target to derive one from.
    pub fn pump_request(&self) -> Result<PumpRequest, ConfigError> {
        match (self.pump.coupling, self.pump.power) {
            (Some(_), Some(_)) => {
                Err(invalid("pump", "`coupling` and `power` are mutually exclusive"))
            }
            (None, None) => Err(invalid("pump", "set either `coupling` or `power`")),
            (Some(g), None) if g >= 0.0 && g.is_finite() => Ok(PumpRequest::Coupling(g)),
            (None, Some(p)) if p >= 0.0 && p.is_finite() => Ok(PumpRequest::Power(p)),
            (Some(_), None) => Err(invalid("pump.coupling", "must be finite and >= 0")),
            (None, Some(_)) => Err(invalid("pump.power", "must be finite and >= 0")),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.base_params()?;
        self.pump_request()?;
        positive("response.probe_detuning", self.response.probe_detuning)?;
        non_negative("response.coupling", self.response.coupling)?;
        non_negative("sweep.coupling", self.sweep.coupling)?;
        positive("sweep.probe_detuning", self.sweep.probe_detuning)?;
        self.sweep.detuning_axis.to_axis(SweepVariable::ProbeDetuning, "sweep.detuning_axis")?;
        self.sweep.coupling_axis.to_axis(SweepVariable::Coupling, "sweep.coupling_axis")?;
        self.eit.coupling_axis.to_axis(SweepVariable::Coupling, "eit.coupling_axis")?;
        self.bandwidth.detuning_axis.to_axis(SweepVariable::ProbeDetuning, "bandwidth.detuning_axis")?;
        positive("null.tolerance", self.null.tolerance)?;
        if let Some(g) = self.bandwidth.coupling.value() {
            positive("bandwidth.coupling", g)?;
        }
        let sim = &self.simulate;
        if let Some(g) = sim.coupling.value() {
            non_negative("simulate.coupling", g)?;
        }
        if let Some(d) = sim.probe_detuning.value() {
            positive("simulate.probe_detuning", d)?;
        }
        probe_ratio("simulate.probe_ratio", sim.probe_ratio)?;
        steps("simulate.steps_per_period", sim.steps_per_period)?;
        periods("simulate.window_periods", sim.window_periods)?;
        if sim.trace_stride == 0 {
            return Err(invalid("simulate.trace_stride", "must be >= 1"));
        }
        let ver = &self.verify;
        if let Some(g) = ver.coupling.value() {
            non_negative("verify.coupling", g)?;
        }
        for d in &ver.probe_detunings {
            positive("verify.probe_detunings", *d)?;
        }
        probe_ratio("verify.probe_ratio", ver.probe_ratio)?;
        positive("verify.tolerance", ver.tolerance)?;
        steps("verify.steps_per_period", ver.steps_per_period)?;
        periods("verify.window_periods", ver.window_periods)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpRequest {
    /// Target g/ω_m.
    Coupling(f64),
    /// W
    Power(f64),
}

impl PumpRequest {
    pub fn as_pump(&self) -> Option<Pump> {
        match self {
            PumpRequest::Power(p) => Some(Pump::Power(*p)),
            PumpRequest::Coupling(_) => None,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and >= 0, got {v}")))
    }
}

fn probe_ratio(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v <= crate::timedomain::MAX_PROBE_RATIO {
        Ok(())
    } else {
        Err(invalid(key, format!("must lie in (0, 1e-2], got {v}")))
    }
}

fn steps(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 50.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be >= 50, got {v}")))
    }
}

fn periods(key: &str, v: u32) -> Result<(), ConfigError> {
    if f64::from(v) >= crate::timedomain::MIN_WINDOW_PERIODS {
        Ok(())
    } else {
        Err(invalid(key, format!("must be >= 20, got {v}")))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    RunConfig::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXPLICIT: &str = r#"
[params]
cavity_length = 0.067
pump_wavelength = 1.064e-6
mirror_mass = 4e-11
mechanical_frequency = { value = 134e3, unit = "hz" }
mechanical_damping = { value = 0.76, unit = "hz" }
cavity_decay = { value = 0.1, unit = "omega_m" }
detuning = { value = 1.0, unit = "omega_m" }
"#;

    #[test]
    fn preset_defaults() {
        let c = RunConfig::from_toml("preset = \"thompson\"").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.base_params().unwrap(), PhysicalParams::thompson());
    }

    #[test]
    fn explicit_params_with_units() {
        let c = RunConfig::from_toml(EXPLICIT).unwrap();
        let p = c.base_params().unwrap();
        let t = PhysicalParams::thompson();
        assert_eq!(p.mechanical_damping, 2.0 * PI * 0.76);
        assert_eq!(p.mechanical_frequency, t.mechanical_frequency);
        assert_eq!(p.cavity_decay, t.cavity_decay);
        assert_eq!(p.bare_detuning, t.bare_detuning);
    }

    #[test]
    fn bare_frequency_is_rejected() {
        let text = EXPLICIT.replace("{ value = 0.76, unit = \"hz\" }", "0.76");
        match RunConfig::from_toml(&text) {
            Err(ConfigError::UnitMissing { key }) => assert_eq!(key, "params.mechanical_damping"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn preset_and_params_conflict() {
        let text = format!("preset = \"thompson\"\n{EXPLICIT}");
        assert!(matches!(RunConfig::from_toml(&text), Err(ConfigError::Validation { key, .. }) if key == "params"));
    }

    #[test]
    fn unknown_key_reports_position() {
        let err = RunConfig::from_toml("preset = \"thompson\"\n[sweep]\nbogus = 1\n").unwrap_err();
        match err {
            ConfigError::Parse { line, column, message } => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn null_keyword() {
        let c = RunConfig::from_toml("preset = \"thompson\"\n[bandwidth]\ncoupling = \"null\"\n").unwrap();
        assert_eq!(c.bandwidth.coupling, Target::NULL);
        assert!(RunConfig::from_toml("preset = \"thompson\"\n[bandwidth]\ncoupling = \"nul\"\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        for text in ["preset = \"thompson\"\nq0_sign = \"negated\"", EXPLICIT] {
            let c = RunConfig::from_toml(text).unwrap();
            assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        }
    }
}
