//! Locating the Stokes null: the (Δ_p, g) pair where the numerator of c₊ vanishes.
//!
//! The condition `A·B − i g² = 0` is one complex equation in two real unknowns.
//! Its real part `Re(A·B) = (κ+γ)Δ_p² + γΔ Δ_p − κ` involves Δ_p only, and the
//! imaginary part then fixes `g² = Im(A·B)`. That split is solved in closed form;
//! a damped 2D Newton iteration seeded from a coarse grid solves the same
//! equation without using the split, and the two answers must agree.

mod audit;
mod sweep;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelError, ReducedContext, ResponseParts};

pub use audit::{reference_point_audit, ReferenceAudit, REFERENCE_COUPLING, REFERENCE_PROBE_DETUNING};
pub use sweep::{
    bandwidth, eit_comparison, scan_intensity, BandwidthReport, Spacing, SweepAxis, SweepRow,
    SweepTable, SweepVariable,
};

/// Default bound on |numerator_plus| at a returned null.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Closed-form and Newton roots must coincide to this in both coordinates.
pub const METHOD_AGREEMENT: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NullError {
    #[error("no physical null: g² = {g_squared:e} < 0")]
    NoPhysicalRoot { g_squared: f64 },
    #[error("closed form ({closed:?}) and Newton ({newton:?}) disagree")]
    MethodDisagreement { closed: (f64, f64), newton: (f64, f64) },
    #[error("γ = 0 admits only the trivial null g = 0")]
    Degenerate,
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("{method:?} did not reach |N| < {tol:e} (got {residual:e})")]
    NotConverged { method: NullMethod, residual: f64, tol: f64 },
    #[error("invalid sweep axis: {0}")]
    InvalidAxis(String),
    #[error("grid point {index}: {source}")]
    Scan { index: usize, source: ModelError },
    #[error("spectral peak lies on the scan boundary (index {index})")]
    NoPeak { index: usize },
    #[error("|c₋|² is below 1e-30 over the whole scan")]
    FlatSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMethod {
    ClosedFormSplit,
    Newton2d,
    GridRefine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellationPoint {
    /// Δ_p* / ω_m
    pub delta_p_star: f64,
    /// g* / ω_m
    pub g_star: f64,
    /// |A·B − i g²| at the point.
    pub residual: f64,
    pub method: NullMethod,
    pub iterations: usize,
}

impl CancellationPoint {
    /// The template with (Δ_p, g) moved onto the null.
    pub fn apply(&self, template: &ReducedContext) -> ReducedContext {
        template.with_probe_detuning(self.delta_p_star).with_coupling(self.g_star)
    }
}

/// The Stokes numerator `A·B − i g²`.
pub fn stokes_null_residual(ctx: &ReducedContext) -> Complex64 {
    ResponseParts::new(ctx).numerator_plus
}

/// ∂N/∂Δ_p = −i B + A (2Δ_p + iγ).
pub fn residual_derivative(ctx: &ReducedContext) -> Complex64 {
    let parts = ResponseParts::new(ctx);
    -I * parts.b + parts.a * Complex64::new(2.0 * ctx.probe_detuning, ctx.gamma)
}

fn check_template(ctx: &ReducedContext) -> Result<(), NullError> {
    if !(ctx.kappa > 0.0) {
        return Err(NullError::InvalidContext(format!("κ must be > 0, got {}", ctx.kappa)));
    }
    if !(ctx.gamma >= 0.0) {
        return Err(NullError::InvalidContext(format!("γ must be >= 0, got {}", ctx.gamma)));
    }
    if !(ctx.detuning > 0.0) {
        return Err(NullError::InvalidContext(format!("Δ must be > 0, got {}", ctx.detuning)));
    }
    if ctx.gamma == 0.0 {
        return Err(NullError::Degenerate);
    }
    Ok(())
}

/// Closed-form null, cross-checked against the 2D Newton solve.
///
/// Returns the closed-form point; fails if either method misses `tol` or the
/// two disagree by more than [`METHOD_AGREEMENT`].
pub fn find_stokes_null(template: &ReducedContext, tol: f64) -> Result<CancellationPoint, NullError> {
    let closed = solve_null(template, NullMethod::ClosedFormSplit, tol)?;
    let newton = solve_null(template, NullMethod::Newton2d, tol)?;
    if (closed.delta_p_star - newton.delta_p_star).abs() > METHOD_AGREEMENT
        || (closed.g_star - newton.g_star).abs() > METHOD_AGREEMENT
    {
        return Err(NullError::MethodDisagreement {
            closed: (closed.delta_p_star, closed.g_star),
            newton: (newton.delta_p_star, newton.g_star),
        });
    }
    Ok(closed)
}

pub fn solve_null(
    template: &ReducedContext,
    method: NullMethod,
    tol: f64,
) -> Result<CancellationPoint, NullError> {
    check_template(template)?;
    let point = match method {
        NullMethod::ClosedFormSplit => closed_form_split(template)?,
        NullMethod::Newton2d => newton_2d(template, tol)?,
        NullMethod::GridRefine => grid_refine(template, tol)?,
    };
    if !(point.residual < tol) {
        return Err(NullError::NotConverged { method, residual: point.residual, tol });
    }
    Ok(point)
}

fn residual_at(template: &ReducedContext, dp: f64, g: f64) -> Complex64 {
    stokes_null_residual(&template.with_probe_detuning(dp).with_coupling(g))
}

/// Positive roots of `(κ+γ)x² + γΔ x − κ = 0`; the one nearest 1 wins.
fn closed_form_split(template: &ReducedContext) -> Result<CancellationPoint, NullError> {
    let (kappa, gamma, delta) = (template.kappa, template.gamma, template.detuning);
    let a = kappa + gamma;
    let b = gamma * delta;
    let c = -kappa;
    let disc = b * b - 4.0 * a * c;
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let dp = [q / a, c / q]
        .into_iter()
        .filter(|x| x.is_finite() && *x > 0.0)
        .min_by(|x, y| (x - 1.0).abs().total_cmp(&(y - 1.0).abs()))
        .ok_or(NullError::NoPhysicalRoot { g_squared: f64::NAN })?;

    let parts = ResponseParts::new(&template.with_probe_detuning(dp).with_coupling(0.0));
    let g_squared = (parts.a * parts.b).im;
    if g_squared < 0.0 {
        return Err(NullError::NoPhysicalRoot { g_squared });
    }
    let g = g_squared.sqrt();
    Ok(CancellationPoint {
        delta_p_star: dp,
        g_star: g,
        residual: residual_at(template, dp, g).norm(),
        method: NullMethod::ClosedFormSplit,
        iterations: 0,
    })
}

/// Local minima of |N| on the grid Δ_p = 1 ± 10^e by log-spaced g, best first.
///
/// The global grid minimum can sit in the g → 0 valley near Δ_p = 1, where
/// |N| ≈ γ|A| is small but no root exists, so callers try several seeds.
fn coarse_seeds(template: &ReducedContext) -> Vec<(f64, f64)> {
    const SEEDS: usize = 12;
    let mut offsets: Vec<f64> = (0..=170).map(|i| 10f64.powf(-9.0 + 0.05 * i as f64)).collect();
    offsets.reverse();
    let mut detunings: Vec<f64> = offsets.iter().map(|o| 1.0 - o).filter(|x| *x > 0.0).collect();
    detunings.push(1.0);
    detunings.extend(offsets.iter().rev().map(|o| 1.0 + o));
    let couplings: Vec<f64> = (0..=120).map(|i| 10f64.powf(-6.0 + 0.05 * i as f64)).collect();
    let (nd, ng) = (detunings.len(), couplings.len());
    let grid: Vec<f64> = detunings
        .iter()
        .flat_map(|&dp| couplings.iter().map(move |&g| residual_at(template, dp, g).norm()))
        .collect();
    let at = |i: usize, j: usize| grid[i * ng + j];
    let mut minima = Vec::new();
    for i in 0..nd {
        for j in 0..ng {
            let r = at(i, j);
            let lower = |a: usize, b: usize| at(a, b) < r;
            let is_min = !(i > 0 && lower(i - 1, j)
                || i + 1 < nd && lower(i + 1, j)
                || j > 0 && lower(i, j - 1)
                || j + 1 < ng && lower(i, j + 1));
            if is_min {
                minima.push((r, detunings[i], couplings[j]));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.into_iter().take(SEEDS).map(|(_, dp, g)| (dp, g)).collect()
}

/// Runs `solve` from each seed and keeps the smallest residual.
fn multi_start(
    template: &ReducedContext,
    tol: f64,
    solve: impl Fn(&ReducedContext, (f64, f64)) -> CancellationPoint,
) -> CancellationPoint {
    let mut best: Option<CancellationPoint> = None;
    for seed in coarse_seeds(template) {
        let point = solve(template, seed);
        if best.is_none_or(|b| point.residual < b.residual) {
            best = Some(point);
        }
        if point.residual < tol {
            break;
        }
    }
    best.expect("seed grid is never empty")
}

fn newton_2d(template: &ReducedContext, tol: f64) -> Result<CancellationPoint, NullError> {
    Ok(multi_start(template, tol, |t, seed| newton_from(t, seed, tol)))
}

/// Damped Newton in (Δ_p, s = g²); N is affine in s, so s may pass through
/// negative values on the way and g = √s is taken at the end.
fn newton_from(template: &ReducedContext, (mut dp, g): (f64, f64), tol: f64) -> CancellationPoint {
    let at = |dp: f64, s: f64| residual_at(template, dp, 0.0) - I * s;
    let mut s = g * g;
    let mut f = at(dp, s);
    let mut iterations = 0;
    while iterations < 100 && f.norm() >= 0.01 * tol {
        iterations += 1;
        let d_dp = residual_derivative(&template.with_probe_detuning(dp).with_coupling(0.0));
        // ∂N/∂s = −i
        let (j11, j21) = (d_dp.re, d_dp.im);
        if j11 == 0.0 || !j11.is_finite() {
            break;
        }
        let step_dp = f.re / j11;
        let step_s = (f.re * j21 - j11 * f.im) / j11;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (trial_dp, trial_s) = (dp - scale * step_dp, s - scale * step_s);
            let trial = at(trial_dp, trial_s);
            if trial.norm() < f.norm() {
                (dp, s, f) = (trial_dp, trial_s, trial);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = s.max(0.0).sqrt();
    CancellationPoint {
        delta_p_star: dp,
        g_star: g,
        residual: residual_at(template, dp, g).norm(),
        method: NullMethod::Newton2d,
        iterations,
    }
}

/// Successive zooming of a 21×21 grid on |N|.
fn grid_refine(template: &ReducedContext, tol: f64) -> Result<CancellationPoint, NullError> {
    Ok(multi_start(template, tol, zoom_from))
}

fn zoom_from(template: &ReducedContext, (mut dp, mut g): (f64, f64)) -> CancellationPoint {
    const SIDE: usize = 21;
    // a grid minimum is within one log cell (≈ 12 %) of a root in its basin
    let mut half_dp = (0.3 * (1.0 - dp).abs()).max(1e-12);
    let mut half_g = 0.3 * g;
    let mut iterations = 0;
    let mut best = residual_at(template, dp, g).norm();
    while iterations < 200 && (half_dp > 1e-17 || half_g > 1e-17 * g.max(1e-300)) {
        iterations += 1;
        let (center_dp, center_g) = (dp, g);
        for i in 0..SIDE {
            let x = center_dp + half_dp * (2.0 * i as f64 / (SIDE - 1) as f64 - 1.0);
            for j in 0..SIDE {
                let y = (center_g + half_g * (2.0 * j as f64 / (SIDE - 1) as f64 - 1.0)).abs();
                let r = residual_at(template, x, y).norm();
                if r < best {
                    best = r;
                    dp = x;
                    g = y;
                }
            }
        }
        half_dp *= 0.5;
        half_g *= 0.5;
    }
    CancellationPoint {
        delta_p_star: dp,
        g_star: g,
        residual: best,
        method: NullMethod::GridRefine,
        iterations,
    }
}
