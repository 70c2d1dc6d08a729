use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::demod::{demodulate, DemodResult};
use super::integrate::{DriveSpec, Integrator, TimeTrace};
use super::TimeDomainError;
use crate::model::{
    linearized_response, pump_power_for_coupling, reduce_with_detuning, sideband_response,
    solve_steady_state, PhysicalParams, Pump, PumpSetting, ReducedContext, SidebandResponse,
    SteadyState,
};
use crate::nullfinder::{find_stokes_null, CancellationPoint, DEFAULT_TOLERANCE};

/// Largest probe-to-pump ratio accepted by the oracle.
pub const MAX_PROBE_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Integration steps per period of the fastest rate.
    pub steps_per_period: f64,
    /// Length of the demodulation window in probe-beat periods.
    pub window_periods: u32,
    /// Run the built-in step-halving check.
    pub check_step: bool,
    /// Return the analysis-window trace with the comparison.
    pub keep_trace: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { steps_per_period: 1000.0, window_periods: 64, check_step: true, keep_trace: false }
    }
}

/// Time needed for the start-up transient to die out.
///
/// The cavity needs 40/κ; the mechanics relaxes at Γ_eff/2 with
/// Γ_eff = γ + g²/κ (g, κ as in the closed-form response). The pump switch-on
/// rings the mirror about 1/probe_ratio harder than the probe does, so it gets
/// 20 amplitude e-folds.
pub fn settle_time(params: &PhysicalParams, ctx: &ReducedContext) -> f64 {
    let cavity = 40.0 / params.effective_decay();
    if params.single_photon_coupling() == 0.0 {
        return cavity;
    }
    let w = params.mechanical_frequency;
    let gamma_eff = w * (ctx.gamma + ctx.coupling * ctx.coupling / ctx.kappa);
    cavity.max(40.0 / gamma_eff)
}

/// Demodulated sideband amplitudes next to both analytic routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    /// Context at the self-consistent steady state (Δ = Δ_eff, g achieved).
    pub ctx: ReducedContext,
    pub pump: PumpSetting,
    pub steady: SteadyState,
    pub probe_ratio: f64,
    /// a₊ ω_m / ε_p (reduced units).
    pub measured_plus: Complex64,
    /// a₋ ω_m / ε_p* (reduced units).
    pub measured_minus: Complex64,
    pub closed_form: SidebandResponse,
    pub linearized: SidebandResponse,
    pub demod: DemodResult,
    /// max over both channels of |measured − linearized|, over the larger |linearized| channel.
    pub relative_error: f64,
    /// Same against the closed form for c₊; magnitudes only for c₋.
    pub relative_error_closed_form: f64,
    pub settle_time: f64,
    pub dt: f64,
    /// Largest relative change of the raw trace under step halving.
    pub step_check: Option<f64>,
    #[serde(skip)]
    pub trace: Option<TimeTrace>,
}

impl OracleComparison {
    /// |a₊| / |a₋|
    pub fn stokes_suppression(&self) -> f64 {
        self.measured_plus.norm() / self.measured_minus.norm()
    }
}

fn channel_error(measured: (Complex64, Complex64), expected: (Complex64, Complex64)) -> f64 {
    let scale = expected.0.norm().max(expected.1.norm());
    (measured.0 - expected.0).norm().max((measured.1 - expected.1).norm()) / scale
}

/// Drives the full pipeline: pump for `coupling` → steady state → integration
/// from rest → lock-in extraction, then compares with the analytic response.
///
/// `coupling` and `probe_detuning` are in rad/s. With `coupling == 0` the mirror
/// is decoupled and the pump in `params` is used as is.
pub fn oracle_compare(
    params: &PhysicalParams,
    coupling: f64,
    probe_detuning: f64,
    probe_ratio: f64,
    options: &OracleOptions,
) -> Result<OracleComparison, TimeDomainError> {
    if !(probe_ratio > 0.0 && probe_ratio <= MAX_PROBE_RATIO) {
        return Err(TimeDomainError::ProbeTooStrong { ratio: probe_ratio });
    }
    let (driven, pump) = if coupling == 0.0 {
        let driven = params.decoupled();
        let amplitude = driven.pump_amplitude();
        if amplitude == 0.0 {
            return Err(TimeDomainError::NoPump);
        }
        let setting = PumpSetting {
            power: driven.pump_power(),
            amplitude,
            achieved_coupling: 0.0,
            displacement_scale: driven.displacement_scale(),
        };
        (driven, setting)
    } else {
        let setting = pump_power_for_coupling(params, coupling)?;
        (params.with_pump(Pump::Amplitude(setting.amplitude)), setting)
    };

    let steady = solve_steady_state(&driven)?;
    let ctx = reduce_with_detuning(&driven, steady.effective_detuning, pump.achieved_coupling, probe_detuning);
    let closed_form = sideband_response(&ctx)?;
    let linearized = linearized_response(&ctx, steady.c0.arg())?;

    let epsilon = driven.pump_amplitude();
    let drive = DriveSpec::new(epsilon, probe_ratio * epsilon, probe_detuning);
    drive.check_linear_regime()?;

    let fastest = driven
        .mechanical_frequency
        .max(driven.bare_detuning.abs())
        .max(driven.effective_decay())
        .max(probe_detuning.abs());
    // a whole number of steps per beat period keeps the discrete harmonics orthogonal
    let period = 2.0 * PI / probe_detuning.abs();
    let per_beat = (options.steps_per_period * fastest / probe_detuning.abs()).ceil();
    let dt = period / per_beat;
    let settle = settle_time(&driven, &ctx);
    let settle_steps = (settle / dt).ceil();
    let window_steps = options.window_periods as f64 * per_beat - 1.0;
    let t_start = settle_steps * dt;
    let t_end = (settle_steps + window_steps) * dt;

    let trace = Integrator::new(dt)
        .record_from(t_start)
        .check_step(options.check_step)
        .run(&driven, &drive, t_end)?;
    let demod = demodulate(&trace, probe_detuning, (t_start, t_end))?;

    let w = driven.mechanical_frequency;
    let measured_plus = demod.a_plus * w / drive.probe;
    let measured_minus = demod.a_minus * w / drive.probe.conj();
    let relative_error =
        channel_error((measured_plus, measured_minus), (linearized.c_plus, linearized.c_minus));
    let closed_scale = closed_form.c_plus.norm().max(closed_form.c_minus.norm());
    let relative_error_closed_form = (measured_plus - closed_form.c_plus)
        .norm()
        .max((measured_minus.norm() - closed_form.c_minus.norm()).abs())
        / closed_scale;

    Ok(OracleComparison {
        ctx,
        pump,
        steady,
        probe_ratio,
        measured_plus,
        measured_minus,
        closed_form,
        linearized,
        demod,
        relative_error,
        relative_error_closed_form,
        settle_time: t_start,
        dt,
        step_check: trace.step_check,
        trace: options.keep_trace.then_some(trace),
    })
}

/// Self-consistent Stokes-null operating point of a physical system.
///
/// The null coupling depends on the effective detuning, which itself depends on
/// the pump needed for that coupling; the loop alternates the two until the
/// coupling settles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub pump: PumpSetting,
    pub steady: SteadyState,
    /// Context at the null, with the achieved coupling.
    pub ctx: ReducedContext,
    pub null: CancellationPoint,
    pub iterations: usize,
}

pub fn null_operating_point(params: &PhysicalParams) -> Result<OperatingPoint, TimeDomainError> {
    let w = params.mechanical_frequency;
    let mut template = reduce_with_detuning(params, params.bare_detuning, 0.0, w);
    let mut null = find_stokes_null(&template, DEFAULT_TOLERANCE)?;
    for iterations in 1..=100 {
        let pump = pump_power_for_coupling(params, null.g_star * w)?;
        let steady = solve_steady_state(&params.with_pump(Pump::Amplitude(pump.amplitude)))?;
        template = reduce_with_detuning(params, steady.effective_detuning, 0.0, w);
        let next = find_stokes_null(&template, DEFAULT_TOLERANCE)?;
        let settled = (next.g_star - null.g_star).abs() <= 1e-14 * null.g_star;
        null = next;
        if settled {
            let ctx = reduce_with_detuning(
                params,
                steady.effective_detuning,
                pump.achieved_coupling,
                null.delta_p_star * w,
            );
            return Ok(OperatingPoint { pump, steady, ctx, null, iterations });
        }
    }
    Err(TimeDomainError::NoOperatingPoint)
}
