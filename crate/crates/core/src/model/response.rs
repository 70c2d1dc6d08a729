//! First-order sideband amplitudes.
//!
//! With `c(t) = c0 + c₊ ε_p e^{−iΔ_p t} + c₋ ε_p* e^{iΔ_p t}`, every quantity here is
//! in units of ω_m:
//!
//! ```text
//! A  = κ − i(Δ + Δ_p)        A' = κ + i(Δ − Δ_p)        B = Δ_p² − 1 + iγΔ_p
//! c₊ = (A·B − i g²) / D      c₋ = i g² / D              D = A·A'·B + 2Δ g²
//! ```
//!
//! [`sideband_response`] evaluates these closed forms. [`linearized_response`]
//! gets the same amplitudes by solving the linearized equations of motion as a
//! 3×3 complex system, and keeps the steady-state phase that the closed form drops.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::reduced::ReducedContext;
use super::ModelError;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this |D| the closed form is treated as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-300;
/// Smallest pivot, relative to the largest matrix entry, accepted by the 3×3 solve.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Intermediate complex quantities of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseParts {
    pub a: Complex64,
    pub a_prime: Complex64,
    pub b: Complex64,
    pub numerator_plus: Complex64,
    pub numerator_minus: Complex64,
    pub denominator: Complex64,
}

impl ResponseParts {
    pub fn new(ctx: &ReducedContext) -> Self {
        let (kappa, delta, dp) = (ctx.kappa, ctx.detuning, ctx.probe_detuning);
        let g2 = ctx.coupling * ctx.coupling;
        let a = Complex64::new(kappa, -(delta + dp));
        let a_prime = Complex64::new(kappa, delta - dp);
        let b = Complex64::new(dp * dp - 1.0, ctx.gamma * dp);
        let numerator_plus = a * b - I * g2;
        let numerator_minus = I * g2;
        let denominator = (a * a_prime) * b + 2.0 * delta * g2;
        Self { a, a_prime, b, numerator_plus, numerator_minus, denominator }
    }
}

/// How a [`SidebandResponse`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Derivation {
    /// Closed-form ratios; `c₊ = numerator_plus / denominator` exactly.
    ClosedForm(ResponseParts),
    /// Direct solve of the linearized equations. `mechanical` is the reduced
    /// displacement amplitude at e^{−iΔ_p t}.
    LinearSolve { mechanical: Complex64, c0_phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandResponse {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub ctx: ReducedContext,
    pub derivation: Derivation,
}

impl SidebandResponse {
    pub fn parts(&self) -> Option<&ResponseParts> {
        match &self.derivation {
            Derivation::ClosedForm(parts) => Some(parts),
            Derivation::LinearSolve { .. } => None,
        }
    }

    /// |c₊|²
    pub fn stokes_intensity(&self) -> f64 {
        self.c_plus.norm_sqr()
    }

    /// |c₋|²
    pub fn anti_stokes_intensity(&self) -> f64 {
        self.c_minus.norm_sqr()
    }
}

pub fn sideband_response(ctx: &ReducedContext) -> Result<SidebandResponse, ModelError> {
    let parts = ResponseParts::new(ctx);
    let magnitude = parts.denominator.norm();
    if !(magnitude >= SINGULAR_DENOMINATOR) {
        return Err(ModelError::SingularDenominator { magnitude });
    }
    let zero = Complex64::new(0.0, 0.0);
    // dividing a zero numerator can leave signed zeros; extinction is exact +0.0
    let c_minus = if parts.numerator_minus == zero { zero } else { parts.numerator_minus / parts.denominator };
    Ok(SidebandResponse {
        c_plus: parts.numerator_plus / parts.denominator,
        c_minus,
        ctx: *ctx,
        derivation: Derivation::ClosedForm(parts),
    })
}

/// Solves for `(c₊, c₋*, Q)` from the linearized rotating-frame equations
///
/// ```text
/// (κ + i(Δ − Δ_p)) c₊  − i g e^{iφ} Q  = 1
/// (κ − i(Δ + Δ_p)) c₋* + i g e^{−iφ} Q = 0
/// g e^{−iφ} c₊ + g e^{iφ} c₋* + (Δ_p² − 1 + iγΔ_p) Q = 0
/// ```
///
/// where φ is the phase of the steady-state amplitude and Q the mechanical
/// amplitude scaled by √(ħ/mω_m).
pub fn linearized_response(
    ctx: &ReducedContext,
    c0_phase: f64,
) -> Result<SidebandResponse, ModelError> {
    let (kappa, delta, dp, g) = (ctx.kappa, ctx.detuning, ctx.probe_detuning, ctx.coupling);
    let rot = Complex64::from_polar(1.0, c0_phase);
    let cavity_plus = Complex64::new(kappa, delta - dp);
    let cavity_minus = Complex64::new(kappa, -(delta + dp));
    let mechanics = Complex64::new(dp * dp - 1.0, ctx.gamma * dp);
    let zero = Complex64::new(0.0, 0.0);

    #[rustfmt::skip]
    let system = Matrix3::new(
        cavity_plus,        zero,          -I * g * rot,
        zero,               cavity_minus,   I * g * rot.conj(),
        g * rot.conj(),     g * rot,        mechanics,
    );
    let rhs = Vector3::new(Complex64::new(1.0, 0.0), zero, zero);

    let scale = system.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = system.lu();
    let min_pivot = lu.u().diagonal().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_PIVOT * scale) {
        return Err(ModelError::SingularSystem { relative_pivot: min_pivot / scale });
    }
    let x = lu.solve(&rhs).ok_or(ModelError::SingularSystem { relative_pivot: 0.0 })?;

    Ok(SidebandResponse {
        c_plus: x[0],
        c_minus: x[1].conj(),
        ctx: *ctx,
        derivation: Derivation::LinearSolve { mechanical: x[2], c0_phase },
    })
}

/// Output-field components at ω_L, ω_p and 2ω_L − ω_p (reduced units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputFieldComponents {
    pub out0: Complex64,
    pub out_plus: Complex64,
    pub out_minus: Complex64,
}

/// ε_out = 2κ⟨c⟩ applied term by term.
pub fn output_field(resp: &SidebandResponse, c0: Complex64, kappa: f64) -> OutputFieldComponents {
    let scale = 2.0 * kappa;
    OutputFieldComponents {
        out0: scale * c0,
        out_plus: scale * resp.c_plus,
        out_minus: scale * resp.c_minus,
    }
}
