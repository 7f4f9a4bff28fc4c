use std::f64::consts::PI;

use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use swgate::budget::*;
use swgate::evolution::PulseEnvelope;
use swgate::hamiltonian::PhysParams;
use swgate::hz;

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn theta_of_square_pulse_matches_closed_form() {
    let d = hz(1.3e6);
    let tf = 15e-6;
    let env = PulseEnvelope::square(tf).unwrap();
    let t = theta(|t| (d * t).cos(), &env).unwrap();
    assert!((t - ((d * tf).sin() / d).abs()).abs() < 1e-9 / d);
    let t = theta(|t| (d * t).sin(), &env).unwrap();
    assert!((t - ((1.0 - (d * tf).cos()) / d).abs()).abs() < 1e-9 / d);
}

#[test]
fn theta_when_a_uniform_grid_hits_every_zero() {
    // δ t_f = 64π puts every point of a 64-step grid on a zero of sin δt
    let tf = 25e-6;
    let d = 64.0 * PI / tf;
    let t = theta(|t| (d * t).sin(), &PulseEnvelope::square(tf).unwrap()).unwrap();
    assert!(t < 1e-12 / d, "{t}");
    let r = shaped_ratio_worst(hz(1.27e6), 0.0, tf).unwrap();
    assert!((r - 4.0).abs() < 1e-9);
}

#[test]
fn theta_of_ramped_constant_is_pulse_area() {
    let env = PulseEnvelope::ramped(4e-6, 20e-6).unwrap();
    assert!((theta(|_| 1.0, &env).unwrap() - 16e-6).abs() < 1e-15);
}

#[test]
fn error_helpers() {
    assert!(eps_single(0.0).abs() < 1e-16);
    assert!((eps_single(PI / 2.0) - 1.0).abs() < 1e-15);
    assert!((eps_single(0.01) - 1e-4).abs() < 1e-8);
    assert!((eps_two(0.01, 0.0) - eps_single(0.01)).abs() < 1e-15);
    assert!((eps_two(0.01, 0.02) - (1e-4 + 4e-4)).abs() < 1e-7);
}

#[test]
fn gaussian_variance_against_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = Normal::new(0.0, 0.3).unwrap();
    let xs: Vec<f64> = n.sample_iter(&mut rng).take(400_000).collect();
    let f = |x: f64| (x / 2.0).sin().powi(2);
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let m = ys.iter().sum::<f64>() / ys.len() as f64;
    let v = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64;
    assert!((gaussian_var(0.3, f) / v - 1.0).abs() < 0.02);
    // exact moments of a Gaussian
    assert!((gaussian_var(0.12, |x| x / 2.0) - 0.0036).abs() < 1e-15);
    assert!((gaussian_var(0.12, |x| (x / 2.0).powi(2)) - 0.12f64.powi(4) / 8.0).abs() < 1e-15);
}

#[test]
fn bounds_are_quadratic_and_sideband_quartic() {
    let (om, eta, delta, dg) = (hz(300e3), 0.051, hz(1.267e6), hz(66.7e3));
    let mags = [1e-3, 2e-3, 4e-3, 8e-3];
    for ch in Channel::ALL {
        let eps: Vec<f64> = mags.iter().map(|&m| channel_bound(ch, m, om, eta, delta, dg)).collect();
        assert!(eps.windows(2).all(|w| w[1] > w[0]), "{ch:?}");
        let want = if ch == Channel::PhaseSideband { 4.0 } else { 2.0 };
        assert!((slope(&mags, &eps) - want).abs() < 0.05, "{ch:?}");
        assert_eq!(channel_bound(ch, 0.0, om, eta, delta, dg), 0.0);
    }
}

#[test]
fn leading_order_forms() {
    let (om, delta) = (hz(300e3), hz(1.267e6));
    let s = 0.12;
    assert!((phase_carrier_error(om, delta, s) / phase_carrier_error_leading(om, delta, s) - 1.0).abs() < 1e-12);
    let full = phase_sideband_error(om, 0.051, hz(66.7e3), s);
    let lead = phase_sideband_error_leading(om, 0.051, hz(66.7e3), s);
    let alt = phase_sideband_error_alt(om, 0.051, hz(66.7e3), s);
    assert!((full / lead - 1.0).abs() < 1e-10);
    assert!((lead / alt - 2.0).abs() < 1e-12);
    // spacing and bichromatic rows differ only in the prefactor 4
    assert!((bichromatic_error(om, delta, 0.05) / spacing_error(om, delta, 0.05) - 4.0).abs() < 1e-12);
}

#[test]
fn ramps_suppress_carrier_errors() {
    let delta = hz(1.2e6) + hz(1.0 / 15e-6);
    // square pulse: δ'²|∫e^{iδ't}|² = 4 sin²(δ't_f/2) peaks at 4 near δ
    let r0 = shaped_ratio_worst(delta, 0.0, 15e-6).unwrap();
    assert!((r0 - 4.0).abs() < 1e-9, "{r0}");
    let mut last = f64::INFINITY;
    for tr in [2e-6, 5e-6, 10e-6] {
        let r = shaped_ratio_worst(delta, tr, 15e-6 + tr).unwrap();
        assert!(r < last, "{tr}: {r}");
        last = r;
    }
    assert!(last <= 1e-3);
    assert!(shaped_ratio_worst(-1.0, 1e-6, 5e-6).is_err());
}

#[test]
fn shaped_ratio_of_slow_profile_is_near_one() {
    // ramps barely change the phase of a profile that hardly oscillates
    let r = shaped_ratio(|t| (hz(1e3) * t).cos(), 0.2e-6, 20e-6).unwrap();
    assert!((r - (19.8f64 / 20.0).powi(2)).abs() < 1e-3, "{r}");
    assert!(shaped_ratio(|_| 0.0, 1e-6, 5e-6).is_err());
}

fn table() -> BudgetTable {
    budget_table(&BudgetInputs {
        reference_square: Some(vec![3.46e-4, 61e-4, 0.03e-4, 2.12e-4, 15.4e-4]),
        ..BudgetInputs::default()
    })
    .unwrap()
}

#[test]
fn budget_table_structure() {
    let t = table();
    assert_eq!(t.rows.len(), 5);
    assert_eq!(t.rows.iter().map(|r| r.source).collect::<Vec<_>>(), Channel::ALL.to_vec());
    // the phase-carrier row is the anchor of the operating point
    assert!((t.rows[1].eps_square - 61e-4).abs() < 1e-12);
    assert!((t.rows[1].implied_ratio.unwrap() - t.ratio).abs() < 1e-12);
    assert!((t.ratio - 0.92).abs() < 0.01, "{}", t.ratio);
    assert!((t.omega - t.ratio * t.delta / 2.0).abs() < 1e-6);
    for row in &t.rows {
        assert!(row.eps_shaped <= row.eps_square);
        if row.source.is_carrier() {
            assert!(row.eps_shaped <= 1e-3 * row.eps_square);
        } else {
            assert_eq!(row.eps_shaped, row.eps_square);
        }
    }
    let sum: f64 = t.rows.iter().map(|r| r.eps_shaped).sum();
    assert!((t.total_shaped - sum).abs() < 1e-18);
    assert!(t.total_shaped <= 2e-5, "{}", t.total_shaped);
    let csv = t.to_csv();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().last().unwrap().starts_with("total"));
    assert!(t.render().contains("Phase sideband"));
}

#[test]
fn budget_table_rejects_bad_inputs() {
    let bad = BudgetInputs {
        t_gate: 0.0,
        ..BudgetInputs::default()
    };
    assert!(budget_table(&bad).is_err());
    let bad = BudgetInputs {
        operating_point: OperatingPoint::Ratio(-0.5),
        ..BudgetInputs::default()
    };
    assert!(budget_table(&bad).is_err());
    let mut bad = BudgetInputs::default();
    bad.fluctuations.sigma_phi = -0.1;
    assert!(budget_table(&bad).is_err());
}

#[test]
fn soundness_of_visibility_channel() {
    let s = SoundnessSettings::default();
    let reference = reference_gate(&PhysParams::default(), &s).unwrap();
    assert!(reference.fidelity > 0.999);
    let zero = budget_vs_simulation(Channel::BichromaticMismatch, 0.0, &reference, &s).unwrap();
    assert!(zero.eps_simulated.abs() < 1e-6);
    assert_eq!(zero.eps_bound, 0.0);
    let p = check_bound(Channel::VisibilityCarrier, 0.05, &reference, &s).unwrap();
    assert!(p.eps_simulated > 0.0 && p.ratio() <= 1.2, "{}", p.ratio());
}

#[test]
fn sideband_noise_follows_geometric_phase_estimate() {
    // the sideband amplitude scales as cos(Δφ/2), so the spin-spin phase π/4
    // is off by (π/4)Δφ²/4 and 1 − F ≈ (π/4)² E[Δφ⁴]/16 = 3π²σ⁴/256
    let s = SoundnessSettings::default();
    let reference = reference_gate(&PhysParams::default(), &s).unwrap();
    let sigma: f64 = 0.12;
    let p = budget_vs_simulation(Channel::PhaseSideband, sigma, &reference, &s).unwrap();
    let estimate = 3.0 * PI * PI * sigma.powi(4) / 256.0;
    assert!((p.eps_simulated / estimate - 1.0).abs() < 0.05, "{} vs {estimate}", p.eps_simulated);
    // the analytic bound undershoots this by about π²/2
    assert!(matches!(
        check_bound(Channel::PhaseSideband, sigma, &reference, &s),
        Err(swgate::Error::BoundViolation { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_grow_with_drive(
        x1 in 0.05f64..1.5, dx in 0.01f64..1.0, mag in 1e-3f64..0.2,
    ) {
        let delta = hz(1.267e6);
        for ch in Channel::ALL {
            let a = channel_bound(ch, mag, x1 * delta / 2.0, 0.051, delta, hz(66.7e3));
            let b = channel_bound(ch, mag, (x1 + dx) * delta / 2.0, 0.051, delta, hz(66.7e3));
            prop_assert!(a >= 0.0 && b > a);
        }
    }
}
