use std::fmt::Write as _;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{PumpRequest, RunConfig, Target};
use super::manifest::{ArtifactWriter, DerivedConstants, RunManifest, Timing};
use super::{CliError, Command};
use crate::model::{
    effective_coupling, linearized_response, output_field, pump_power_for_coupling, reduce,
    reduce_with_detuning, sideband_response, solve_steady_state, PhysicalParams, Pump,
    PumpSetting, ReducedContext, SidebandResponse, SteadyState,
};
use crate::nullfinder::{
    bandwidth, eit_comparison, find_stokes_null, reference_point_audit, scan_intensity,
    SweepTable, SweepVariable,
};
use crate::timedomain::{null_operating_point, oracle_compare, OracleComparison, OracleOptions};

pub const SWEEP_COLUMNS: [&str; 7] =
    ["axis_value", "re_c_plus", "im_c_plus", "abs2_c_plus", "re_c_minus", "im_c_minus", "abs2_c_minus"];
/// Coupling range (g/ω_m) over which `eit` reports the smallest |Im c₊|.
pub const EIT_REPORT_RANGE: (f64, f64) = (0.002, 0.01);
pub const TRACE_COLUMNS: [&str; 5] = ["t", "re_c", "im_c", "q", "p"];
pub const VERIFY_COLUMNS: [&str; 11] = [
    "probe_detuning",
    "re_measured_plus",
    "im_measured_plus",
    "re_measured_minus",
    "im_measured_minus",
    "re_linear_plus",
    "im_linear_plus",
    "re_linear_minus",
    "im_linear_minus",
    "relative_error",
    "passed",
];

/// Outcome of a successful command: what to print, the manifest, and any
/// failed verification gates.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: String,
    pub manifest: RunManifest,
    pub gate_failures: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(CliError::io)?;
    for row in rows {
        w.write_record(row).map_err(CliError::io)?;
    }
    w.into_inner().map_err(|e| CliError::io(e.into_error()))
}

pub fn sweep_csv(table: &SweepTable) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &SWEEP_COLUMNS,
        table.rows.iter().map(|r| {
            [
                num(r.axis_value),
                num(r.c_plus.re),
                num(r.c_plus.im),
                num(r.abs2_plus()),
                num(r.c_minus.re),
                num(r.c_minus.im),
                num(r.abs2_minus()),
            ]
        }),
    )
}

fn response_row(axis_value: f64, r: &SidebandResponse) -> [String; 7] {
    [
        num(axis_value),
        num(r.c_plus.re),
        num(r.c_plus.im),
        num(r.stokes_intensity()),
        num(r.c_minus.re),
        num(r.c_minus.im),
        num(r.anti_stokes_intensity()),
    ]
}

/// Reduced context with the configured detuning taken as the effective one.
fn reduced_template(params: &PhysicalParams, coupling: f64, probe_detuning: f64) -> ReducedContext {
    reduce(params, 0.0, 0.0).with_coupling(coupling).with_probe_detuning(probe_detuning)
}

fn fmt_c(z: Complex64) -> String {
    format!("{:+.10e} {:+.10e}i", z.re, z.im)
}

struct Context<'a> {
    config: &'a RunConfig,
    params: PhysicalParams,
    writer: ArtifactWriter,
    derived: DerivedConstants,
    summary: String,
    gate_failures: Vec<String>,
}

macro_rules! say {
    ($ctx:expr, $($arg:tt)*) => {
        let _ = writeln!($ctx.summary, $($arg)*);
    };
}

pub fn run(config: &RunConfig, command: Command) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let started_unix_ms =
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let params = config.base_params()?;
    config.pump_request()?;
    let mut ctx = Context {
        config,
        params,
        writer: ArtifactWriter::new(&config.out).map_err(CliError::io)?,
        derived: DerivedConstants::new(&params),
        summary: String::new(),
        gate_failures: Vec::new(),
    };
    match command {
        Command::Steady => steady(&mut ctx)?,
        Command::Response => response(&mut ctx)?,
        Command::Sweep => sweep(&mut ctx)?,
        Command::Null => null(&mut ctx)?,
        Command::Eit => eit(&mut ctx)?,
        Command::Bandwidth => bandwidth_cmd(&mut ctx)?,
        Command::Simulate => simulate(&mut ctx)?,
        Command::Verify => verify(&mut ctx)?,
    }
    let dir = ctx.writer.dir().to_path_buf();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        config: config.to_toml(),
        conventions: config.conventions(),
        threads: rayon::current_num_threads(),
        derived: ctx.derived,
        outputs: ctx.writer.into_records(),
        timing: Timing { started_unix_ms, wall_seconds: started.elapsed().as_secs_f64() },
    };
    manifest.write(&dir).map_err(CliError::io)?;
    Ok(RunReport { summary: ctx.summary, manifest, gate_failures: ctx.gate_failures })
}

/// A physical drive resolved from the configuration.
struct Drive {
    /// Parameters carrying the pump amplitude.
    params: PhysicalParams,
    setting: PumpSetting,
    /// Coupling handed to the oracle (rad/s); zero decouples the mirror.
    coupling: f64,
    /// Δ_p*/ω_m at the effective detuning of this drive.
    null_detuning: f64,
}

fn drive_from_pump_section(ctx: &Context) -> Result<(PhysicalParams, PumpSetting), CliError> {
    let params = ctx.params;
    match ctx.config.pump_request()? {
        PumpRequest::Coupling(g) => {
            let setting = pump_power_for_coupling(&params, g * params.mechanical_frequency)?;
            Ok((params.with_pump(Pump::Amplitude(setting.amplitude)), setting))
        }
        PumpRequest::Power(p) => {
            let driven = params.with_pump(Pump::Power(p));
            let setting = PumpSetting {
                power: p,
                amplitude: driven.pump_amplitude(),
                achieved_coupling: effective_coupling(&driven)?,
                displacement_scale: driven.displacement_scale(),
            };
            Ok((driven, setting))
        }
    }
}

fn resolve_drive(ctx: &mut Context, target: Target) -> Result<Drive, CliError> {
    let params = ctx.params;
    let w = params.mechanical_frequency;
    let drive = match target.value() {
        None => {
            let op = null_operating_point(&params)?;
            say!(ctx, "self-consistent null after {} iterations", op.iterations);
            Drive {
                params: params.with_pump(Pump::Amplitude(op.pump.amplitude)),
                setting: op.pump,
                coupling: op.null.g_star * w,
                null_detuning: op.null.delta_p_star,
            }
        }
        Some(g) if g == 0.0 => {
            let (driven, _) = drive_from_pump_section(ctx)?;
            let decoupled = driven.decoupled();
            let steady = solve_steady_state(&decoupled)?;
            let template = reduce_with_detuning(&decoupled, steady.effective_detuning, 0.0, w);
            Drive {
                params: driven,
                setting: PumpSetting {
                    power: decoupled.pump_power(),
                    amplitude: decoupled.pump_amplitude(),
                    achieved_coupling: 0.0,
                    displacement_scale: decoupled.displacement_scale(),
                },
                coupling: 0.0,
                null_detuning: find_stokes_null(&template, ctx.config.null.tolerance)?.delta_p_star,
            }
        }
        Some(g) => {
            let setting = pump_power_for_coupling(&params, g * w)?;
            let driven = params.with_pump(Pump::Amplitude(setting.amplitude));
            let steady = solve_steady_state(&driven)?;
            let template = reduce_with_detuning(&driven, steady.effective_detuning, 0.0, w);
            Drive {
                params: driven,
                setting,
                coupling: g * w,
                null_detuning: find_stokes_null(&template, ctx.config.null.tolerance)?.delta_p_star,
            }
        }
    };
    ctx.derived.pump_amplitude = Some(drive.setting.amplitude);
    ctx.derived.pump_power = Some(drive.setting.power);
    Ok(drive)
}

#[derive(Serialize)]
struct SteadyReport {
    pump: PumpSetting,
    steady: SteadyState,
    /// Δ_eff/ω_m
    effective_detuning_reduced: f64,
    /// g/ω_m
    coupling_reduced: f64,
    field_residual: f64,
    displacement_residual: f64,
}

fn steady(ctx: &mut Context) -> Result<(), CliError> {
    let (driven, setting) = drive_from_pump_section(ctx)?;
    let steady = solve_steady_state(&driven)?;
    let (field_residual, displacement_residual) = steady.residuals(&driven);
    let w = driven.mechanical_frequency;
    ctx.derived.pump_amplitude = Some(setting.amplitude);
    ctx.derived.pump_power = Some(setting.power);
    say!(ctx, "pump power        P_L   = {:.10e} W", setting.power);
    say!(ctx, "pump amplitude    eps_L = {:.10e} 1/s", setting.amplitude);
    say!(ctx, "photon number     |c0|^2 = {:.10e}", steady.photon_number);
    say!(ctx, "c0                       = {}", fmt_c(steady.c0));
    say!(ctx, "q0                       = {:.10e} m", steady.q0);
    say!(ctx, "effective detuning       = {:.15} omega_m", steady.effective_detuning / w);
    say!(ctx, "effective coupling g     = {:.15} omega_m", setting.achieved_coupling / w);
    say!(ctx, "steady-state branches    = {}", steady.branch_count);
    let report = SteadyReport {
        pump: setting,
        effective_detuning_reduced: steady.effective_detuning / w,
        coupling_reduced: setting.achieved_coupling / w,
        steady,
        field_residual,
        displacement_residual,
    };
    ctx.writer.write_json("steady.json", &report).map_err(CliError::io)?;
    Ok(())
}

#[derive(Serialize)]
struct ResponseReport {
    context: ReducedContext,
    closed_form: SidebandResponse,
    linearized: SidebandResponse,
    /// 2κ̃·c± (units of the probe amplitude over ω_m)
    output_plus: Complex64,
    output_minus: Complex64,
}

fn response(ctx: &mut Context) -> Result<(), CliError> {
    let sec = ctx.config.response;
    let reduced = reduced_template(&ctx.params, sec.coupling, sec.probe_detuning);
    let closed = sideband_response(&reduced)?;
    let linear = linearized_response(&reduced, 0.0)?;
    let out = output_field(&closed, Complex64::new(0.0, 0.0), reduced.kappa);
    say!(ctx, "context: kappa = {:.6e}, gamma = {:.6e}, Delta = {:.6e}, g = {}, Delta_p = {} (omega_m)",
        reduced.kappa, reduced.gamma, reduced.detuning, sec.coupling, sec.probe_detuning);
    say!(ctx, "c+ = {}   |c+|^2 = {:.10e}", fmt_c(closed.c_plus), closed.stokes_intensity());
    say!(ctx, "c- = {}   |c-|^2 = {:.10e}", fmt_c(closed.c_minus), closed.anti_stokes_intensity());
    say!(ctx, "linear solve (c0 phase 0): c+ = {}, c- = {}", fmt_c(linear.c_plus), fmt_c(linear.c_minus));
    let csv = csv_bytes(&SWEEP_COLUMNS, [response_row(sec.probe_detuning, &closed)])?;
    ctx.writer.write("response.csv", &csv).map_err(CliError::io)?;
    let report = ResponseReport {
        context: reduced,
        closed_form: closed,
        linearized: linear,
        output_plus: out.out_plus,
        output_minus: out.out_minus,
    };
    ctx.writer.write_json("response.json", &report).map_err(CliError::io)?;
    Ok(())
}

fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let sec = ctx.config.sweep;
    let detuning_axis = sec.detuning_axis.to_axis(SweepVariable::ProbeDetuning, "sweep.detuning_axis")?;
    let coupling_axis = sec.coupling_axis.to_axis(SweepVariable::Coupling, "sweep.coupling_axis")?;

    let spectrum = scan_intensity(&reduced_template(&ctx.params, sec.coupling, 1.0), detuning_axis)?;
    let peak = spectrum
        .rows
        .iter()
        .max_by(|a, b| a.abs2_minus().total_cmp(&b.abs2_minus()))
        .map(|r| (r.axis_value, r.abs2_minus()))
        .unwrap_or_default();
    ctx.writer.write("sweep_detuning.csv", &sweep_csv(&spectrum)?).map_err(CliError::io)?;
    say!(ctx, "sweep_detuning.csv: {} points at g = {} omega_m; max |c-|^2 = {:.6} at Delta_p = {:.9} omega_m",
        spectrum.rows.len(), sec.coupling, peak.1, peak.0);

    let coupling = scan_intensity(&reduced_template(&ctx.params, 0.0, sec.probe_detuning), coupling_axis)?;
    ctx.writer.write("sweep_coupling.csv", &sweep_csv(&coupling)?).map_err(CliError::io)?;
    say!(ctx, "sweep_coupling.csv: {} points at Delta_p = {} omega_m", coupling.rows.len(), sec.probe_detuning);
    Ok(())
}

fn null(ctx: &mut Context) -> Result<(), CliError> {
    let template = reduced_template(&ctx.params, 0.0, 1.0);
    let point = find_stokes_null(&template, ctx.config.null.tolerance)?;
    let at_null = sideband_response(&point.apply(&template))?;
    let audit = reference_point_audit(&template)?;
    say!(ctx, "Delta_p* = {:.16} omega_m", point.delta_p_star);
    say!(ctx, "g*       = {:.16} omega_m", point.g_star);
    say!(ctx, "residual = {:.3e}", point.residual);
    say!(ctx, "|c+|^2 = {:.3e}, |c-|^2 = {:.10}", at_null.stokes_intensity(), at_null.anti_stokes_intensity());
    say!(ctx, "reference point ({}, {}): |c+|^2 = {:.6e}", audit.reference_probe_detuning,
        audit.reference_coupling, audit.reference_abs2_plus);

    #[derive(Serialize)]
    struct NullReport<'a> {
        point: crate::nullfinder::CancellationPoint,
        abs2_plus: f64,
        abs2_minus: f64,
        audit: &'a crate::nullfinder::ReferenceAudit,
    }
    let report = NullReport {
        point,
        abs2_plus: at_null.stokes_intensity(),
        abs2_minus: at_null.anti_stokes_intensity(),
        audit: &audit,
    };
    ctx.writer.write_json("null.json", &report).map_err(CliError::io)?;
    ctx.writer.write("discrepancy.md", audit.note.as_bytes()).map_err(CliError::io)?;
    Ok(())
}

fn eit(ctx: &mut Context) -> Result<(), CliError> {
    let axis = ctx.config.eit.coupling_axis.to_axis(SweepVariable::Coupling, "eit.coupling_axis")?;
    let table = eit_comparison(&reduced_template(&ctx.params, 0.0, 1.0), axis)?;
    let (lo, hi) = EIT_REPORT_RANGE;
    let min_im = table
        .rows
        .iter()
        .filter(|r| r.axis_value >= lo && r.axis_value <= hi)
        .map(|r| r.c_plus.im.abs())
        .fold(f64::INFINITY, f64::min);
    ctx.writer.write("eit.csv", &sweep_csv(&table)?).map_err(CliError::io)?;
    say!(ctx, "eit.csv: {} points at Delta_p = 1 omega_m", table.rows.len());
    if min_im.is_finite() {
        say!(ctx, "min |Im c+| for g in [{lo}, {hi}] omega_m = {:.6}", min_im);
    }
    Ok(())
}

fn bandwidth_cmd(ctx: &mut Context) -> Result<(), CliError> {
    let sec = ctx.config.bandwidth;
    let template = reduced_template(&ctx.params, 0.0, 1.0);
    let coupling = match sec.coupling.value() {
        Some(g) => g,
        None => find_stokes_null(&template, ctx.config.null.tolerance)?.g_star,
    };
    let axis = sec.detuning_axis.to_axis(SweepVariable::ProbeDetuning, "bandwidth.detuning_axis")?;
    let table = scan_intensity(&template.with_coupling(coupling), axis)?;
    let report = bandwidth(&table, ctx.params.mechanical_frequency)?;
    say!(ctx, "g = {:.10} omega_m", coupling);
    say!(ctx, "peak |c-|^2 = {:.10} at Delta_p = {:.10} omega_m", report.peak_value, report.peak_center);
    say!(ctx, "FWHM = {:.6e} omega_m = {:.4} rad/s = {:.4} Hz", report.fwhm_reduced, report.fwhm_rad_per_s, report.fwhm_hz);
    ctx.writer.write("bandwidth.csv", &sweep_csv(&table)?).map_err(CliError::io)?;
    ctx.writer.write_json("bandwidth.json", &report).map_err(CliError::io)?;
    Ok(())
}

fn simulate(ctx: &mut Context) -> Result<(), CliError> {
    let sec = ctx.config.simulate;
    let drive = resolve_drive(ctx, sec.coupling)?;
    let w = drive.params.mechanical_frequency;
    let probe = sec.probe_detuning.value().unwrap_or(drive.null_detuning);
    let options = OracleOptions {
        steps_per_period: sec.steps_per_period,
        window_periods: sec.window_periods,
        check_step: true,
        keep_trace: true,
    };
    let cmp = oracle_compare(&drive.params, drive.coupling, probe * w, sec.probe_ratio, &options)?;
    report_comparison(ctx, &cmp, probe);
    if let Some(trace) = &cmp.trace {
        let csv = csv_bytes(
            &TRACE_COLUMNS,
            (0..trace.len()).step_by(sec.trace_stride).map(|i| {
                [num(trace.t[i]), num(trace.c[i].re), num(trace.c[i].im), num(trace.q[i]), num(trace.p[i])]
            }),
        )?;
        ctx.writer.write("trace.csv", &csv).map_err(CliError::io)?;
    }
    ctx.writer.write_json("simulate.json", &cmp).map_err(CliError::io)?;
    Ok(())
}

fn report_comparison(ctx: &mut Context, cmp: &OracleComparison, probe: f64) {
    say!(ctx, "Delta_p = {:.15} omega_m, g = {:.10} omega_m, probe/pump = {:e}", probe, cmp.ctx.coupling, cmp.probe_ratio);
    say!(ctx, "  measured   c+ = {}   c- = {}", fmt_c(cmp.measured_plus), fmt_c(cmp.measured_minus));
    say!(ctx, "  linearized c+ = {}   c- = {}", fmt_c(cmp.linearized.c_plus), fmt_c(cmp.linearized.c_minus));
    say!(ctx, "  relative error {:.3e}, |c+|/|c-| = {:.3e}, step check {:.1e}", cmp.relative_error,
        cmp.stokes_suppression(), cmp.step_check.unwrap_or(f64::NAN));
}

#[derive(Serialize)]
struct VerifyReport {
    coupling: f64,
    null_detuning: f64,
    tolerance: f64,
    points: Vec<OracleComparison>,
    gate_failures: Vec<String>,
}

fn verify(ctx: &mut Context) -> Result<(), CliError> {
    let sec = ctx.config.verify.clone();
    let drive = resolve_drive(ctx, sec.coupling)?;
    let w = drive.params.mechanical_frequency;
    let center = drive.null_detuning;
    let probes = if sec.probe_detunings.is_empty() {
        vec![0.999, center - 2e-4, center, center + 2e-4, 1.001]
    } else {
        sec.probe_detunings.clone()
    };
    let options = OracleOptions {
        steps_per_period: sec.steps_per_period,
        window_periods: sec.window_periods,
        check_step: true,
        keep_trace: false,
    };
    let results: Vec<_> = probes
        .par_iter()
        .map(|&p| oracle_compare(&drive.params, drive.coupling, p * w, sec.probe_ratio, &options))
        .collect::<Result<_, _>>()?;

    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (&probe, cmp) in probes.iter().zip(&results) {
        report_comparison(ctx, cmp, probe);
        let before = failures.len();
        if cmp.relative_error > sec.tolerance {
            failures.push(format!("Delta_p = {probe}: relative error {:.3e} > {:e}", cmp.relative_error, sec.tolerance));
        }
        if drive.coupling == 0.0 && cmp.measured_minus.norm() >= 1e-10 * cmp.measured_plus.norm() {
            failures.push(format!("Delta_p = {probe}: |c-| = {:e} with the mirror decoupled", cmp.measured_minus.norm()));
        }
        if sec.coupling.value().is_none() && probe == center && cmp.stokes_suppression() >= 1e-3 {
            failures.push(format!("null: |c+|/|c-| = {:.3e} is not below 1e-3", cmp.stokes_suppression()));
        }
        rows.push([
            num(probe),
            num(cmp.measured_plus.re),
            num(cmp.measured_plus.im),
            num(cmp.measured_minus.re),
            num(cmp.measured_minus.im),
            num(cmp.linearized.c_plus.re),
            num(cmp.linearized.c_plus.im),
            num(cmp.linearized.c_minus.re),
            num(cmp.linearized.c_minus.im),
            num(cmp.relative_error),
            (failures.len() == before).to_string(),
        ]);
    }
    if drive.coupling == 0.0 {
        say!(ctx, "mirror decoupled: c- tone amplitude {:.3e} (largest over points)",
            results.iter().map(|c| c.measured_minus.norm()).fold(0.0, f64::max));
    }
    say!(ctx, "{}", if failures.is_empty() { "verify: all gates passed".to_string() }
        else { format!("verify: {} gate(s) failed", failures.len()) });
    ctx.writer.write("verify.csv", &csv_bytes(&VERIFY_COLUMNS, rows)?).map_err(CliError::io)?;
    let report = VerifyReport {
        coupling: drive.coupling / w,
        null_detuning: center,
        tolerance: sec.tolerance,
        points: results,
        gate_failures: failures.clone(),
    };
    ctx.writer.write_json("verify.json", &report).map_err(CliError::io)?;
    ctx.gate_failures = failures;
    Ok(())
}
