use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::TimeDomainError;
use crate::model::{PhysicalParams, HBAR};

/// Relative tolerance of the built-in step-halving check.
pub const STEP_HALVING_TOLERANCE: f64 = 1e-6;

/// Coupling and probe drive in the frame rotating at ω_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveSpec {
    /// ε_L (1/s); a phase rotates the whole steady state.
    pub pump: Complex64,
    /// ε_p (1/s)
    pub probe: Complex64,
    /// Δ_p = ω_p − ω_L (rad/s)
    pub probe_detuning: f64,
}

impl DriveSpec {
    pub fn new(pump: f64, probe: f64, probe_detuning: f64) -> Self {
        Self {
            pump: Complex64::new(pump, 0.0),
            probe: Complex64::new(probe, 0.0),
            probe_detuning,
        }
    }

    pub fn undriven() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Linear-response runs need |ε_p| ≤ 1e-2 |ε_L|.
    pub fn check_linear_regime(&self) -> Result<(), TimeDomainError> {
        if self.probe.norm() > 1e-2 * self.pump.norm() {
            return Err(TimeDomainError::ProbeTooStrong {
                ratio: self.probe.norm() / self.pump.norm(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct State {
    pub c: Complex64,
    /// Mirror displacement (m).
    pub q: f64,
    /// Mirror momentum (kg·m/s).
    pub p: f64,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> State {
        State { c: self.c + h * d.c, q: self.q + h * d.q, p: self.p + h * d.p }
    }
}

/// Sampled rotating-frame trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    pub dt: f64,
    pub t: Vec<f64>,
    pub c: Vec<Complex64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(skip)]
    pub params: PhysicalParams,
    pub drive: DriveSpec,
    /// Largest relative deviation found by the step-halving check, if run.
    pub step_check: Option<f64>,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Mean-field equations of motion, evaluated at time `t`.
struct Dynamics {
    decay: f64,
    detuning: f64,
    g0: f64,
    mass: f64,
    omega_m2: f64,
    damping: f64,
    drive: DriveSpec,
}

impl Dynamics {
    fn new(params: &PhysicalParams, drive: DriveSpec) -> Self {
        Self {
            decay: params.effective_decay(),
            detuning: params.bare_detuning,
            g0: params.single_photon_coupling(),
            mass: params.mirror_mass,
            omega_m2: params.mechanical_frequency * params.mechanical_frequency,
            damping: params.mechanical_damping,
            drive,
        }
    }

    /// ċ = −(κ + iΔ_c)c + i g0 q c + ε_L + ε_p e^{−iΔ_p t}
    /// q̇ = p/m
    /// ṗ = −m ω_m² q − γ p + ħ g0 |c|²
    #[inline]
    fn rhs(&self, s: &State, probe_phasor: Complex64) -> State {
        let field = Complex64::new(-self.decay, self.g0 * s.q - self.detuning) * s.c
            + self.drive.pump
            + self.drive.probe * probe_phasor;
        State {
            c: field,
            q: s.p / self.mass,
            p: -self.mass * self.omega_m2 * s.q - self.damping * s.p
                + HBAR * self.g0 * s.c.norm_sqr(),
        }
    }

    #[inline]
    fn phasor(&self, t: f64) -> Complex64 {
        let (s, c) = (-self.drive.probe_detuning * t).sin_cos();
        Complex64::new(c, s)
    }

    /// One classical fourth-order Runge–Kutta step from step index `k`.
    #[inline]
    fn step(&self, s: &State, k: u64, dt: f64) -> State {
        let t = k as f64 * dt;
        let e0 = self.phasor(t);
        let e_mid = self.phasor(t + 0.5 * dt);
        let e1 = self.phasor((k + 1) as f64 * dt);
        let k1 = self.rhs(s, e0);
        let k2 = self.rhs(&s.axpy(0.5 * dt, &k1), e_mid);
        let k3 = self.rhs(&s.axpy(0.5 * dt, &k2), e_mid);
        let k4 = self.rhs(&s.axpy(dt, &k3), e1);
        State {
            c: s.c + dt / 6.0 * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c),
            q: s.q + dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
            p: s.p + dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
        }
    }
}

/// Largest step allowed: 2π / (50 · max(ω_m, |Δ_c|, κ, |Δ_p|)).
pub fn max_step(params: &PhysicalParams, drive: &DriveSpec) -> f64 {
    let fastest = params
        .mechanical_frequency
        .max(params.bare_detuning.abs())
        .max(params.effective_decay())
        .max(drive.probe_detuning.abs());
    2.0 * PI / (50.0 * fastest)
}

/// Fixed-step integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt: f64,
    /// Samples are kept from the first step at or after this time.
    pub record_from: f64,
    /// Keep every `stride`-th step.
    pub stride: usize,
    /// Re-run at dt/2 and compare the overlapping samples.
    pub check_step: bool,
    pub initial: State,
}

impl Integrator {
    pub fn new(dt: f64) -> Self {
        Self { dt, record_from: 0.0, stride: 1, check_step: true, initial: State::default() }
    }

    pub fn record_from(mut self, t: f64) -> Self {
        self.record_from = t;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn check_step(mut self, check: bool) -> Self {
        self.check_step = check;
        self
    }

    pub fn initial(mut self, state: State) -> Self {
        self.initial = state;
        self
    }

    pub fn run(
        &self,
        params: &PhysicalParams,
        drive: &DriveSpec,
        t_end: f64,
    ) -> Result<TimeTrace, TimeDomainError> {
        params.validate()?;
        let limit = max_step(params, drive);
        if !(self.dt > 0.0 && self.dt <= limit) {
            return Err(TimeDomainError::InvalidStep { dt: self.dt, limit });
        }
        let steps = (t_end / self.dt).round() as u64;
        let first = (self.record_from / self.dt).ceil().max(0.0) as u64;
        if steps < 1 || first > steps {
            return Err(TimeDomainError::InvalidSpan { t_end, record_from: self.record_from });
        }

        let mut trace = sweep(params, drive, self.initial, self.dt, steps, first, self.stride)?;
        if self.check_step {
            let fine =
                sweep(params, drive, self.initial, 0.5 * self.dt, 2 * steps, 2 * first, 2 * self.stride)?;
            let deviation = max_relative_deviation(&trace, &fine);
            trace.step_check = Some(deviation);
            if !(deviation <= STEP_HALVING_TOLERANCE) {
                return Err(TimeDomainError::StepTooLarge { deviation });
            }
        }
        Ok(trace)
    }
}

/// Integrates from `Integrator::initial` (rest by default) to `t_end`, keeping
/// every step and running the step-halving check.
pub fn integrate(
    params: &PhysicalParams,
    drive: &DriveSpec,
    t_end: f64,
    dt: f64,
) -> Result<TimeTrace, TimeDomainError> {
    Integrator::new(dt).run(params, drive, t_end)
}

fn sweep(
    params: &PhysicalParams,
    drive: &DriveSpec,
    initial: State,
    dt: f64,
    steps: u64,
    first: u64,
    stride: usize,
) -> Result<TimeTrace, TimeDomainError> {
    let dynamics = Dynamics::new(params, *drive);
    let capacity = ((steps - first) / stride as u64 + 1) as usize;
    let mut trace = TimeTrace {
        dt,
        t: Vec::with_capacity(capacity),
        c: Vec::with_capacity(capacity),
        q: Vec::with_capacity(capacity),
        p: Vec::with_capacity(capacity),
        params: *params,
        drive: *drive,
        step_check: None,
    };
    let mut state = initial;
    for k in 0..=steps {
        if k >= first && (k - first).is_multiple_of(stride as u64) {
            trace.t.push(k as f64 * dt);
            trace.c.push(state.c);
            trace.q.push(state.q);
            trace.p.push(state.p);
        }
        if k == steps {
            break;
        }
        state = dynamics.step(&state, k, dt);
        if !(state.c.re.is_finite() && state.c.im.is_finite() && state.q.is_finite() && state.p.is_finite())
        {
            return Err(TimeDomainError::NonFinite { t: (k + 1) as f64 * dt });
        }
    }
    Ok(trace)
}

fn max_relative_deviation(coarse: &TimeTrace, fine: &TimeTrace) -> f64 {
    fn component(a: impl Iterator<Item = f64> + Clone, diff: impl Iterator<Item = f64>) -> f64 {
        let scale = a.fold(0.0, f64::max);
        let worst = diff.fold(0.0, f64::max);
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }
    let n = coarse.len().min(fine.len());
    let dc = component(
        coarse.c[..n].iter().map(|z| z.norm()),
        coarse.c[..n].iter().zip(&fine.c[..n]).map(|(a, b)| (a - b).norm()),
    );
    let dq = component(
        coarse.q[..n].iter().map(|x| x.abs()),
        coarse.q[..n].iter().zip(&fine.q[..n]).map(|(a, b)| (a - b).abs()),
    );
    let dp = component(
        coarse.p[..n].iter().map(|x| x.abs()),
        coarse.p[..n].iter().zip(&fine.p[..n]).map(|(a, b)| (a - b).abs()),
    );
    dc.max(dq).max(dp)
}
