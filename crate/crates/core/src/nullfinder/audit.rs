use std::fmt::Write as _;

use serde::Serialize;

use super::{find_stokes_null, stokes_null_residual, CancellationPoint, NullError};
use crate::model::{sideband_response, ReducedContext};

/// Reference operating point quoted for the preset parameters (units of ω_m).
pub const REFERENCE_PROBE_DETUNING: f64 = 0.999_995_486_667_198;
pub const REFERENCE_COUPLING: f64 = 0.0043;

/// Closed-form response at the reference point next to the exact null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceAudit {
    pub reference_probe_detuning: f64,
    pub reference_coupling: f64,
    pub reference_abs2_plus: f64,
    pub reference_abs2_minus: f64,
    pub reference_residual: f64,
    pub exact: CancellationPoint,
    pub exact_abs2_minus: f64,
    /// √(κ/(κ+γ)), the detuning the reference digits track.
    pub lossless_split_detuning: f64,
    /// Coupling where Im c₊ changes sign along g at the reference detuning.
    pub im_zero_coupling: Option<f64>,
    /// Coupling minimizing |c₊| along g at the reference detuning, and that minimum.
    pub min_abs_coupling: (f64, f64),
    pub note: String,
}

pub fn reference_point_audit(template: &ReducedContext) -> Result<ReferenceAudit, NullError> {
    let at_reference =
        template.with_probe_detuning(REFERENCE_PROBE_DETUNING).with_coupling(REFERENCE_COUPLING);
    let reference = sideband_response(&at_reference)
        .map_err(|source| NullError::Scan { index: 0, source })?;
    let reference_residual = stokes_null_residual(&at_reference).norm();

    let exact = find_stokes_null(template, super::DEFAULT_TOLERANCE)?;
    let at_null = sideband_response(&exact.apply(template))
        .map_err(|source| NullError::Scan { index: 0, source })?;
    let lossless = (template.kappa / (template.kappa + template.gamma)).sqrt();
    let along_g = |g: f64| {
        sideband_response(&at_reference.with_coupling(g))
            .map(|r| r.c_plus)
            .map_err(|source| NullError::Scan { index: 0, source })
    };
    let im_zero_coupling = bisect(|g| along_g(g).map(|c| c.im), 1e-3, 1e-2)?;
    let re_zero_coupling = bisect(|g| along_g(g).map(|c| c.re), 1e-3, 1e-2)?;
    let min_abs_coupling = golden_min(|g| along_g(g).map(|c| c.norm()), 1e-3, 1e-2)?;

    let mut note = String::new();
    let _ = writeln!(note, "# Stokes-null discrepancy note\n");
    let _ = writeln!(
        note,
        "Context: kappa = {:.17e}, gamma = {:.17e}, detuning = {:.17e} (units of omega_m).\n",
        template.kappa, template.gamma, template.detuning
    );
    let _ = writeln!(note, "| point | Delta_p / omega_m | g / omega_m | abs(N+) | abs(c+)^2 | abs(c-)^2 |");
    let _ = writeln!(note, "|---|---|---|---|---|---|");
    let _ = writeln!(
        note,
        "| reference digits | {:.15} | {:.4} | {:.6e} | {:.6e} | {:.6} |",
        REFERENCE_PROBE_DETUNING,
        REFERENCE_COUPLING,
        reference_residual,
        reference.stokes_intensity(),
        reference.anti_stokes_intensity()
    );
    let _ = writeln!(
        note,
        "| exact root of A*B - i g^2 | {:.16} | {:.16} | {:.3e} | {:.3e} | {:.6} |\n",
        exact.delta_p_star,
        exact.g_star,
        exact.residual,
        at_null.stokes_intensity(),
        at_null.anti_stokes_intensity()
    );
    let _ = writeln!(
        note,
        "Offsets (exact - reference): Delta_p {:+.6e}, g {:+.6e}.",
        exact.delta_p_star - REFERENCE_PROBE_DETUNING,
        exact.g_star - REFERENCE_COUPLING
    );
    let _ = writeln!(
        note,
        "The reference detuning is close to sqrt(kappa/(kappa+gamma)) = {:.15} (difference {:+.3e}); \
         the real part of the numerator is instead (kappa+gamma) x^2 + gamma*Delta*x - kappa, \
         a quadratic whose positive root carries the additional gamma*Delta term.",
        lossless,
        REFERENCE_PROBE_DETUNING - lossless
    );
    match im_zero_coupling {
        Some(g) => {
            let _ = writeln!(
                note,
                "Along g in [0.001, 0.01] at the reference detuning, Im c+ changes sign at g = {g:.6} \
                 and abs(c+) is smallest ({:.4e}) at g = {:.6}; {}.",
                min_abs_coupling.1,
                min_abs_coupling.0,
                match re_zero_coupling {
                    Some(r) => format!("Re c+ changes sign at g = {r:.6}"),
                    None => "Re c+ keeps one sign".to_string(),
                }
            );
        }
        None => {
            let _ = writeln!(
                note,
                "Along g at the reference detuning abs(c+) is smallest ({:.4e}) at g = {:.6}.",
                min_abs_coupling.1, min_abs_coupling.0
            );
        }
    }
    let _ = writeln!(
        note,
        "At the reference digits the Stokes intensity is {:.4e}, small but not zero; \
         at the exact root it vanishes to {:.1e}.",
        reference.stokes_intensity(),
        at_null.stokes_intensity()
    );

    Ok(ReferenceAudit {
        reference_probe_detuning: REFERENCE_PROBE_DETUNING,
        reference_coupling: REFERENCE_COUPLING,
        reference_abs2_plus: reference.stokes_intensity(),
        reference_abs2_minus: reference.anti_stokes_intensity(),
        reference_residual,
        exact,
        exact_abs2_minus: at_null.anti_stokes_intensity(),
        lossless_split_detuning: lossless,
        im_zero_coupling,
        min_abs_coupling,
        note,
    })
}

fn bisect<F>(f: F, mut lo: f64, mut hi: f64) -> Result<Option<f64>, NullError>
where
    F: Fn(f64) -> Result<f64, NullError>,
{
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn golden_min<F>(f: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64), NullError>
where
    F: Fn(f64) -> Result<f64, NullError>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > 1e-12 * hi {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}
