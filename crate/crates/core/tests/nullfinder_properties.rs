use optomech::model::{sideband_response, ReducedContext};
use optomech::nullfinder::*;
use proptest::prelude::*;

const GAMMA: f64 = 9.026698264913467e-7;

fn preset() -> ReducedContext {
    ReducedContext::new(0.1, GAMMA, 1.0, 0.0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn methods_agree(kappa in 0.01f64..0.5, log_gamma in -8.0f64..-4.0, detuning in 0.5f64..2.0) {
        let t = ReducedContext::new(kappa, 10f64.powf(log_gamma), detuning, 0.0, 1.0);
        let closed = solve_null(&t, NullMethod::ClosedFormSplit, DEFAULT_TOLERANCE).unwrap();
        let newton = solve_null(&t, NullMethod::Newton2d, DEFAULT_TOLERANCE).unwrap();
        prop_assert!((closed.delta_p_star - newton.delta_p_star).abs() <= METHOD_AGREEMENT);
        prop_assert!((closed.g_star - newton.g_star).abs() <= METHOD_AGREEMENT);

        let point = find_stokes_null(&t, DEFAULT_TOLERANCE).unwrap();
        let r = sideband_response(&point.apply(&t)).unwrap();
        prop_assert!(point.residual < DEFAULT_TOLERANCE);
        prop_assert!(r.stokes_intensity() / r.anti_stokes_intensity() < 1e-10);
        prop_assert!(point.g_star >= 0.0 && point.delta_p_star > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivative_matches_finite_difference(
        kappa in 0.01f64..0.5,
        gamma in 1e-8f64..1e-3,
        detuning in 0.5f64..2.0,
        g in 0.0f64..0.05,
        dp in 0.5f64..1.5,
    ) {
        let ctx = ReducedContext::new(kappa, gamma, detuning, g, dp);
        let h = 1e-7;
        let fd = (stokes_null_residual(&ctx.with_probe_detuning(dp + h))
            - stokes_null_residual(&ctx.with_probe_detuning(dp - h)))
            / (2.0 * h);
        let exact = residual_derivative(&ctx);
        prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm(), "{fd} vs {exact}");
    }
}

#[test]
fn residual_at_reference_point_is_about_one_micro() {
    let r = stokes_null_residual(
        &preset().with_coupling(REFERENCE_COUPLING).with_probe_detuning(REFERENCE_PROBE_DETUNING),
    );
    assert!((r.norm() / 9.6687707442890284e-7 - 1.0).abs() < 1e-8, "{}", r.norm());
}

#[test]
fn anti_stokes_plateau_at_null() {
    let t = preset();
    let p = find_stokes_null(&t, DEFAULT_TOLERANCE).unwrap();
    let level = sideband_response(&p.apply(&t)).unwrap().anti_stokes_intensity();
    assert!((level - 0.25).abs() <= 0.01, "{level}");
    assert!((level - 0.24937880403173896).abs() < 1e-12);
}

#[test]
fn single_null_in_open_interval() {
    // grid census of sign changes of Re N₊ (independent of g) on (0, 2)
    let t = preset();
    let n = 200_000;
    let mut basins = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..n {
        let dp = 2.0 * i as f64 / n as f64;
        let re = stokes_null_residual(&t.with_probe_detuning(dp)).re;
        if let Some((pdp, pre)) = prev {
            if pre.signum() != re.signum() {
                basins.push(0.5 * (pdp + dp));
            }
        }
        prev = Some((dp, re));
    }
    let physical: Vec<f64> = basins
        .into_iter()
        .filter(|&dp| stokes_null_residual(&t.with_probe_detuning(dp)).im > 0.0)
        .collect();
    assert_eq!(physical.len(), 1, "{physical:?}");
    let p = find_stokes_null(&t, DEFAULT_TOLERANCE).unwrap();
    assert!((physical[0] - p.delta_p_star).abs() < 2e-5);
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let axis = SweepAxis::linear(SweepVariable::ProbeDetuning, 0.9995, 1.0005, 20001);
    let t = preset().with_coupling(REFERENCE_COUPLING);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| scan_intensity(&t, axis).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.rows.len(), 20001);
    for (a, b) in one.rows.iter().zip(&four.rows) {
        assert_eq!(a.axis_value.to_bits(), b.axis_value.to_bits());
        assert_eq!(a.c_plus.re.to_bits(), b.c_plus.re.to_bits());
        assert_eq!(a.c_plus.im.to_bits(), b.c_plus.im.to_bits());
        assert_eq!(a.c_minus.re.to_bits(), b.c_minus.re.to_bits());
        assert_eq!(a.c_minus.im.to_bits(), b.c_minus.im.to_bits());
    }
}

#[test]
fn spectrum_peaks_near_one_quarter() {
    let axis = SweepAxis::linear(SweepVariable::ProbeDetuning, 0.9995, 1.0005, 20001);
    let table = scan_intensity(&preset().with_coupling(REFERENCE_COUPLING), axis).unwrap();
    let peak = table.rows.iter().map(|r| r.abs2_minus()).fold(0.0, f64::max);
    assert!((peak - 0.25).abs() < 0.01, "{peak}");
    let zero = scan_intensity(&preset(), axis).unwrap();
    assert!(zero.rows.iter().all(|r| r.abs2_minus() == 0.0));
    assert!(matches!(bandwidth(&zero, 1.0), Err(NullError::FlatSpectrum)));
}

#[test]
fn bandwidth_matches_fine_scan() {
    let w = 2.0 * std::f64::consts::PI * 134e3;
    let axis = SweepAxis::linear(SweepVariable::ProbeDetuning, 0.9995, 1.0005, 20001);
    let at = |g: f64| bandwidth(&scan_intensity(&preset().with_coupling(g), axis).unwrap(), w).unwrap();
    // 1e6-point brute-force reference values
    let reference = at(REFERENCE_COUPLING);
    assert!((reference.fwhm_reduced / 1.8551436e-4 - 1.0).abs() < 1e-4, "{}", reference.fwhm_reduced);
    assert!((reference.fwhm_hz - 24.8589).abs() < 0.01);
    let null = find_stokes_null(&preset(), DEFAULT_TOLERANCE).unwrap();
    let at_null = at(null.g_star);
    assert!((at_null.fwhm_reduced / 3.626253e-4 - 1.0).abs() < 1e-4, "{}", at_null.fwhm_reduced);
}

#[test]
fn coupling_scan_at_reference_detuning() {
    let axis = SweepAxis::linear(SweepVariable::Coupling, 0.0, 0.01, 10001);
    let table =
        scan_intensity(&preset().with_probe_detuning(REFERENCE_PROBE_DETUNING), axis).unwrap();
    let crossings = |f: fn(&SweepRow) -> f64| -> Vec<f64> {
        table
            .rows
            .windows(2)
            .filter(|w| w[0].axis_value >= 1e-3 && f(&w[0]).signum() != f(&w[1]).signum())
            .map(|w| w[1].axis_value)
            .collect()
    };
    let im = crossings(|r| r.c_plus.im);
    assert_eq!(im.len(), 1);
    assert!((im[0] - 0.0043).abs() < 1e-4, "{im:?}");
    assert!(crossings(|r| r.c_plus.re).is_empty());
}

#[test]
fn eit_condition_keeps_imaginary_part() {
    let axis = SweepAxis::linear(SweepVariable::Coupling, 0.002, 0.01, 8001);
    let table = eit_comparison(&preset(), axis).unwrap();
    assert!(table.rows.iter().all(|r| r.c_plus.im.abs() > 0.1));
    let zero = eit_comparison(&preset(), SweepAxis::linear(SweepVariable::Coupling, 0.0, 0.01, 3)).unwrap();
    assert_eq!(zero.rows[0].c_plus, num_complex::Complex64::new(10.0, 0.0));
    assert!(eit_comparison(&preset(), SweepAxis::linear(SweepVariable::ProbeDetuning, 0.9, 1.1, 3)).is_err());
}

#[test]
fn audit_note_names_both_points() {
    let audit = reference_point_audit(&preset()).unwrap();
    assert!(audit.reference_abs2_plus < 1e-2);
    assert!((audit.exact.delta_p_star - 0.9999909733832156326).abs() < 1e-12);
    assert!((audit.exact.g_star - 0.0060163450189302208).abs() < 1e-12);
    assert!(audit.note.contains("0.999995486667198"));
    assert!(audit.note.contains("0.99999097338321"));
}
