use num_complex::Complex64;
use optomech::model::*;
use proptest::prelude::*;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn context() -> impl Strategy<Value = ReducedContext> {
    (0.01f64..0.5, 1e-8f64..1e-3, 0.5f64..2.0, 0.0f64..0.05, 0.5f64..1.5)
        .prop_map(|(k, gm, d, g, dp)| ReducedContext::new(k, gm, d, g, dp))
}

fn near_preset() -> impl Strategy<Value = PhysicalParams> {
    let s = || 0.5f64..1.5;
    (s(), s(), s(), s(), s(), s(), s(), 1e-5f64..2e-3).prop_map(|(l, lam, m, w, gm, k, d, g)| {
        let t = PhysicalParams::thompson();
        let mut p = PhysicalParams {
            cavity_length: t.cavity_length * l,
            pump_wavelength: t.pump_wavelength * lam,
            mirror_mass: t.mirror_mass * m,
            mechanical_frequency: t.mechanical_frequency * w,
            mechanical_damping: t.mechanical_damping * gm,
            cavity_decay: t.cavity_decay * k,
            bare_detuning: t.bare_detuning * d,
            ..t
        };
        let setting = pump_power_for_coupling(&p, g * p.mechanical_frequency).unwrap();
        p.pump = Pump::Power(setting.power);
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bare_cavity_is_lorentzian(ctx in context()) {
        let ctx = ctx.with_coupling(0.0);
        let r = sideband_response(&ctx).unwrap();
        let expected = Complex64::new(1.0, 0.0)
            / Complex64::new(ctx.kappa, ctx.detuning - ctx.probe_detuning);
        prop_assert!(rel(r.c_plus, expected) <= 1e-15, "{} vs {}", r.c_plus, expected);
        prop_assert_eq!((r.c_minus.re.to_bits(), r.c_minus.im.to_bits()), (0, 0));
        prop_assert_eq!(ResponseParts::new(&ctx).numerator_minus, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn product_identity(ctx in context()) {
        let p = ResponseParts::new(&ctx);
        let lhs = Complex64::new(ctx.kappa, -ctx.probe_detuning).powi(2)
            + ctx.detuning * ctx.detuning;
        // measured against the size of the summed terms; the sum itself can cancel
        let scale = ctx.kappa.powi(2) + ctx.detuning.powi(2) + ctx.probe_detuning.powi(2);
        prop_assert!((p.a * p.a_prime - lhs).norm() <= 1e-15 * scale);
    }

    #[test]
    fn elimination_matches_closed_form(ctx in context(), phase in -3.2f64..3.2) {
        let closed = sideband_response(&ctx).unwrap();
        let solved = linearized_response(&ctx, phase).unwrap();
        prop_assert!(rel(solved.c_plus, closed.c_plus) <= 1e-12);
        if ctx.coupling > 0.0 {
            prop_assert!((solved.c_minus.norm() / closed.c_minus.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn reduce_round_trip(p in near_preset(), g in 0.0f64..1e5, dp in 1e5f64..2e6) {
        let r = reduce(&p, g, dp).restore();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs().max(f64::MIN_POSITIVE);
        prop_assert!(close(r.kappa, p.cavity_decay));
        prop_assert!(close(r.gamma, p.mechanical_damping));
        prop_assert!(close(r.detuning, p.bare_detuning));
        prop_assert!(close(r.coupling, g) || (r.coupling - g).abs() <= 2.0 * f64::EPSILON * g);
        prop_assert!(close(r.probe_detuning, dp) || (r.probe_detuning - dp).abs() <= 2.0 * f64::EPSILON * dp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn steady_state_residuals(p in near_preset()) {
        let s = solve_steady_state(&p).unwrap();
        let (field, displacement) = s.residuals(&p);
        prop_assert!(field < 1e-12 && displacement < 1e-12, "{field:e} {displacement:e}");
    }

    #[test]
    fn power_scales_with_coupling_squared(g in 1e-5f64..4.9e-4) {
        // Δ_eff moves by g̃² ω_m, kept under 1e-6 ω_m here.
        let p = PhysicalParams::thompson();
        let w = p.mechanical_frequency;
        let one = pump_power_for_coupling(&p, g * w).unwrap();
        let two = pump_power_for_coupling(&p, 2.0 * g * w).unwrap();
        prop_assert!(((two.power / one.power) / 4.0 - 1.0).abs() < 1e-3);
    }
}

#[test]
fn response_is_continuous_in_probe_detuning() {
    let base = ReducedContext::new(0.1, 9.026698264913467e-7, 1.0, 0.0043, 1.0);
    let n = 10_000;
    let samples: Vec<_> = (0..n)
        .map(|i| {
            let dp = 0.99 + 0.02 * i as f64 / (n - 1) as f64;
            sideband_response(&base.with_probe_detuning(dp)).unwrap()
        })
        .collect();
    for pick in [|r: &SidebandResponse| r.c_plus, |r: &SidebandResponse| r.c_minus] {
        let steps: Vec<f64> = samples.windows(2).map(|w| (pick(&w[1]) - pick(&w[0])).norm()).collect();
        for i in 1..steps.len() - 1 {
            let local = steps[i - 1].max(steps[i + 1]);
            assert!(steps[i] <= 10.0 * local + 1e-15, "jump at {i}: {} vs {}", steps[i], local);
        }
    }
}

#[test]
fn reference_point_values() {
    let ctx = ReducedContext::new(0.1, 9.026698264913467e-7, 1.0, 0.0043, 0.999995486667198);
    let r = sideband_response(&ctx).unwrap();
    // N₊ here is a 1e-6 remainder of O(0.1) terms, so ~1e-10 relative is the floor
    assert!((r.stokes_intensity() / 6.7866261535701599e-4 - 1.0).abs() < 1e-8);
    assert!((r.anti_stokes_intensity() / 0.24819053949965489 - 1.0).abs() < 1e-12);
    let out = output_field(&r, Complex64::new(0.0, 0.0), ctx.kappa);
    assert!((out.out_minus.norm_sqr() / (0.04 * r.anti_stokes_intensity()) - 1.0).abs() < 1e-14);
}

#[test]
fn decoupled_steady_state_is_lorentzian() {
    for kappa in [KappaConvention::Single, KappaConvention::Doubled] {
        let p = PhysicalParams::thompson()
            .with_conventions(Conventions { kappa, q0_sign: Q0Sign::Derived })
            .with_pump(Pump::Power(1e-8))
            .decoupled();
        let s = solve_steady_state(&p).unwrap();
        let expected = p.pump_amplitude() / Complex64::new(p.effective_decay(), p.bare_detuning);
        assert!(rel(s.c0, expected) < 1e-15);
        assert_eq!(s.effective_detuning, p.bare_detuning);
    }
}
