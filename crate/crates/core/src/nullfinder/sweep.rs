use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NullError;
use crate::model::{sideband_response, ReducedContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Δ_p / ω_m
    ProbeDetuning,
    /// g / ω_m
    Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn linear(variable: SweepVariable, start: f64, stop: f64, count: usize) -> Self {
        Self { variable, start, stop, count, spacing: Spacing::Linear }
    }

    pub fn validate(&self) -> Result<(), NullError> {
        if self.count < 2 {
            return Err(NullError::InvalidAxis(format!("count must be >= 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start == self.stop {
            return Err(NullError::InvalidAxis(format!(
                "axis [{}, {}] is not strictly monotone",
                self.start, self.stop
            )));
        }
        if self.variable == SweepVariable::Coupling && self.start.min(self.stop) < 0.0 {
            return Err(NullError::InvalidAxis("coupling axis must be non-negative".into()));
        }
        Ok(())
    }

    pub fn value(&self, index: usize) -> f64 {
        if index + 1 == self.count {
            return self.stop;
        }
        let frac = index as f64 / (self.count - 1) as f64;
        self.start + (self.stop - self.start) * frac
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    fn place(&self, template: &ReducedContext, value: f64) -> ReducedContext {
        match self.variable {
            SweepVariable::ProbeDetuning => template.with_probe_detuning(value),
            SweepVariable::Coupling => template.with_coupling(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl SweepRow {
    pub fn abs2_plus(&self) -> f64 {
        self.c_plus.norm_sqr()
    }

    pub fn abs2_minus(&self) -> f64 {
        self.c_minus.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub template: ReducedContext,
    pub rows: Vec<SweepRow>,
}

/// Evaluates the closed-form response at every grid point, in axis order.
///
/// Points are evaluated in parallel; each row depends only on its own grid
/// value, so the table is identical for any thread count.
pub fn scan_intensity(template: &ReducedContext, axis: SweepAxis) -> Result<SweepTable, NullError> {
    axis.validate()?;
    let results: Vec<_> = (0..axis.count)
        .into_par_iter()
        .map(|i| {
            let x = axis.value(i);
            sideband_response(&axis.place(template, x)).map(|r| SweepRow {
                axis_value: x,
                c_plus: r.c_plus,
                c_minus: r.c_minus,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for (index, row) in results.into_iter().enumerate() {
        rows.push(row.map_err(|source| NullError::Scan { index, source })?);
    }
    Ok(SweepTable { axis, template: *template, rows })
}

/// Coupling sweep with the probe pinned to the mechanical resonance (Δ_p = ω_m).
pub fn eit_comparison(template: &ReducedContext, g_axis: SweepAxis) -> Result<SweepTable, NullError> {
    if g_axis.variable != SweepVariable::Coupling {
        return Err(NullError::InvalidAxis("EIT comparison sweeps the coupling".into()));
    }
    scan_intensity(&template.with_probe_detuning(1.0), g_axis)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthReport {
    /// Δ_p / ω_m at the |c₋|² maximum.
    pub peak_center: f64,
    pub peak_value: f64,
    /// FWHM in units of ω_m.
    pub fwhm_reduced: f64,
    /// FWHM × ω_m (rad/s).
    pub fwhm_rad_per_s: f64,
    /// FWHM × ω_m / 2π (Hz).
    pub fwhm_hz: f64,
}

/// Full width at half maximum of the |c₋|² peak of a probe-detuning sweep,
/// with linear interpolation of the half-maximum crossings.
pub fn bandwidth(table: &SweepTable, mechanical_frequency: f64) -> Result<BandwidthReport, NullError> {
    if table.axis.variable != SweepVariable::ProbeDetuning {
        return Err(NullError::InvalidAxis("bandwidth needs a probe-detuning sweep".into()));
    }
    let values: Vec<f64> = table.rows.iter().map(SweepRow::abs2_minus).collect();
    let (peak, &peak_value) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(NullError::FlatSpectrum)?;
    if !(peak_value >= 1e-30) {
        return Err(NullError::FlatSpectrum);
    }
    if peak == 0 || peak + 1 == values.len() {
        return Err(NullError::NoPeak { index: peak });
    }
    let half = 0.5 * peak_value;
    let x = |i: usize| table.rows[i].axis_value;
    let crossing = |inside: usize, outside: usize| {
        let (yi, yo) = (values[inside], values[outside]);
        x(inside) + (half - yi) * (x(outside) - x(inside)) / (yo - yi)
    };

    let left = (0..peak).rev().find(|&i| values[i] < half).ok_or(NullError::NoPeak { index: peak })?;
    let right =
        (peak + 1..values.len()).find(|&i| values[i] < half).ok_or(NullError::NoPeak { index: peak })?;
    let width = (crossing(right - 1, right) - crossing(left + 1, left)).abs();

    Ok(BandwidthReport {
        peak_center: x(peak),
        peak_value,
        fwhm_reduced: width,
        fwhm_rad_per_s: width * mechanical_frequency,
        fwhm_hz: width * mechanical_frequency / (2.0 * PI),
    })
}
