use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::{TimeDomainError, TimeTrace};

/// Minimum number of probe-beat periods in a demodulation window.
pub const MIN_WINDOW_PERIODS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemodResult {
    /// Coefficient of e^{−iΔ_p t}.
    pub a_plus: Complex64,
    /// Coefficient of e^{+iΔ_p t}.
    pub a_minus: Complex64,
    pub dc: Complex64,
    pub fit_residual_rms: f64,
    pub samples: usize,
}

impl DemodResult {
    pub fn reconstruct(&self, t: f64, probe_detuning: f64) -> Complex64 {
        let phasor = Complex64::from_polar(1.0, -probe_detuning * t);
        self.dc + self.a_plus * phasor + self.a_minus * phasor.conj()
    }
}

/// Least-squares fit of `c(t)` on `window` to `dc + a₊ e^{−iΔ_p t} + a₋ e^{iΔ_p t}`,
/// with `t` the absolute trace time.
pub fn demodulate(
    trace: &TimeTrace,
    probe_detuning: f64,
    window: (f64, f64),
) -> Result<DemodResult, TimeDomainError> {
    let (start, stop) = window;
    let (first, last) = match (trace.t.first(), trace.t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(TimeDomainError::WindowTooShort { samples: 0 }),
    };
    // half-step slack so windows built from step multiples stay inside
    let slack = 0.5 * trace.dt;
    if !(stop > start) || start < first - slack || stop > last + slack {
        return Err(TimeDomainError::WindowOutsideTrace { window, trace: (first, last) });
    }
    if probe_detuning.abs() * (stop - start) < 2.0 * PI * MIN_WINDOW_PERIODS {
        return Err(TimeDomainError::IllConditioned {
            periods: probe_detuning.abs() * (stop - start) / (2.0 * PI),
        });
    }

    let selected: Vec<usize> = (0..trace.len())
        .filter(|&i| trace.t[i] >= start - slack && trace.t[i] <= stop + slack)
        .collect();
    if selected.len() < 3 {
        return Err(TimeDomainError::WindowTooShort { samples: selected.len() });
    }

    let basis = |t: f64| {
        let minus = Complex64::from_polar(1.0, -probe_detuning * t);
        [Complex64::new(1.0, 0.0), minus, minus.conj()]
    };
    let mut gram = Matrix3::<Complex64>::zeros();
    let mut rhs = Vector3::<Complex64>::zeros();
    for &i in &selected {
        let phi = basis(trace.t[i]);
        for j in 0..3 {
            for k in 0..3 {
                gram[(j, k)] += phi[j].conj() * phi[k];
            }
            rhs[j] += phi[j].conj() * trace.c[i];
        }
    }
    let coeffs = gram.lu().solve(&rhs).ok_or(TimeDomainError::IllConditioned { periods: 0.0 })?;
    let fit = DemodResult {
        dc: coeffs[0],
        a_plus: coeffs[1],
        a_minus: coeffs[2],
        fit_residual_rms: 0.0,
        samples: selected.len(),
    };
    let sum_sq: f64 = selected
        .iter()
        .map(|&i| (trace.c[i] - fit.reconstruct(trace.t[i], probe_detuning)).norm_sqr())
        .sum();
    Ok(DemodResult { fit_residual_rms: (sum_sq / selected.len() as f64).sqrt(), ..fit })
}
