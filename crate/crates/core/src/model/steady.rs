use num_complex::Complex64;
use serde::Serialize;

use super::params::{PhysicalParams, HBAR};
use super::ModelError;

/// Two photon-number roots closer than this (relative) count as degenerate.
pub const DEGENERATE_ROOT_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub c0: Complex64,
    /// Static mirror displacement (m).
    pub q0: f64,
    /// Δ_c − g0 q0 (rad/s).
    pub effective_detuning: f64,
    /// |c0|²
    pub photon_number: f64,
    /// Number of distinct non-negative real roots of the bistability cubic.
    pub branch_count: usize,
    /// All photon-number roots, ascending. The selected branch is the first.
    pub branches: Vec<f64>,
}

impl SteadyState {
    /// Relative residuals of `c0 = ε_L / (κ + iΔ_eff)` and of
    /// `q0 = ±ħ g0 |c0|² / (m ω_m²)`.
    pub fn residuals(&self, params: &PhysicalParams) -> (f64, f64) {
        let eps = params.pump_amplitude();
        let kappa = params.effective_decay();
        let g0 = params.single_photon_coupling();
        let delta = params.bare_detuning - g0 * self.q0;
        let c0 = eps / Complex64::new(kappa, delta);
        let r_field = relative(self.c0 - c0, c0.norm());
        let q0 = static_displacement(params, self.c0.norm_sqr());
        let r_disp = if q0 == 0.0 && self.q0 == 0.0 {
            0.0
        } else {
            (self.q0 - q0).abs() / q0.abs().max(self.q0.abs())
        };
        (r_field, r_disp)
    }
}

fn relative(diff: Complex64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff.norm()
    } else {
        diff.norm() / scale
    }
}

fn static_displacement(params: &PhysicalParams, photon_number: f64) -> f64 {
    let g0 = params.single_photon_coupling();
    let w = params.mechanical_frequency;
    params.conventions.q0_sign_factor() * HBAR * g0 * photon_number
        / (params.mirror_mass * w * w)
}

/// Self-consistent driven steady state.
///
/// Substituting `Δ_eff = Δ_c − η n` with `η = ±ħ g0² / (m ω_m²)` into
/// `n = ε_L² / (κ² + Δ_eff²)` gives a real cubic in the photon number `n`.
/// All real roots are found; the smallest one (lower stable branch) is used.
pub fn solve_steady_state(params: &PhysicalParams) -> Result<SteadyState, ModelError> {
    params.validate()?;
    let eps = params.pump_amplitude();
    let kappa = params.effective_decay();
    let delta_c = params.bare_detuning;
    let eta = params.detuning_pull();

    let branches = if eps == 0.0 {
        vec![0.0]
    } else if eta == 0.0 {
        vec![eps * eps / (kappa * kappa + delta_c * delta_c)]
    } else {
        // u = η n / ω_m keeps the coefficients O(1):
        // u ((d − u)² + k²) − P = 0
        let w = params.mechanical_frequency;
        let (k, d) = (kappa / w, delta_c / w);
        let drive = (eps / w) * (eps / w) * (eta / w);
        let roots = bistability_roots(k, d, drive);
        let mut n: Vec<f64> = roots.iter().map(|u| u * w / eta).filter(|n| *n >= 0.0).collect();
        n.sort_by(|a, b| a.total_cmp(b));
        n
    };
    if branches.is_empty() {
        return Err(ModelError::NoRealRoot);
    }
    if branches.len() == 3 {
        for pair in branches.windows(2) {
            if (pair[1] - pair[0]).abs() <= DEGENERATE_ROOT_GAP * pair[1].abs() {
                return Err(ModelError::DegenerateBistability { roots: branches.clone() });
            }
        }
    }

    let n = branches[0];
    let q0 = static_displacement(params, n);
    let effective_detuning = delta_c - params.single_photon_coupling() * q0;
    let c0 = eps / Complex64::new(kappa, effective_detuning);
    Ok(SteadyState {
        c0,
        q0,
        effective_detuning,
        photon_number: c0.norm_sqr(),
        branch_count: branches.len(),
        branches,
    })
}

/// Real roots of `u ((d − u)² + k²) = p`, Newton-polished, ascending.
pub(crate) fn bistability_roots(k: f64, d: f64, p: f64) -> Vec<f64> {
    // u³ − 2d u² + (d² + k²) u − p
    let coeffs = [-2.0 * d, d * d + k * k, -p];
    let f = |u: f64| u * ((d - u) * (d - u) + k * k) - p;
    let df = |u: f64| 3.0 * u * u - 4.0 * d * u + d * d + k * k;
    let mut roots: Vec<f64> = real_cubic_roots(coeffs)
        .into_iter()
        .map(|mut u| {
            for _ in 0..8 {
                let slope = df(u);
                if slope == 0.0 {
                    break;
                }
                let step = f(u) / slope;
                u -= step;
                if step.abs() <= 1e-17 * u.abs() {
                    break;
                }
            }
            u
        })
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(b.abs()));
    roots
}

/// Real roots of the monic cubic `x³ + a x² + b x + c`.
fn real_cubic_roots([a, b, c]: [f64; 3]) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = ((-q / 2.0) / (r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}
