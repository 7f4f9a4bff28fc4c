use std::f64::consts::PI;

use swgate::analysis::calibration::{
    carrier_suppression, spacing_scan, suppression_db, with_projection_noise_seeded, CalSettings, SpacingModel,
};
use swgate::analysis::fringe::{detuning_scan, fringe_exponents, phase_scan, pi_time, Placement, Resonance, ScanSettings};
use swgate::analysis::gate::{
    bell_fidelity, gate_envelope, log_log_slope, optimize_rabi, power_curves, required_sdf, GateModel, GateSettings,
};
use swgate::analysis::sdf::{extract_sdf, SdfModel, SdfSettings};
use swgate::evolution::PulseEnvelope;
use swgate::hamiltonian::PhysParams;
use swgate::hz;
use swgate::special::{bessel_j, integrate};

fn scan_params() -> PhysParams {
    PhysParams {
        omega_rabi: hz(50e3),
        ..PhysParams::default()
    }
}

fn coarse_scan(points: usize) -> ScanSettings {
    ScanSettings {
        points,
        ..ScanSettings::default()
    }
}

#[test]
fn single_ion_fringe_shape() {
    // carrier coupling on |0⟩ goes as |sin(Δφ/2)|; the pulse is a π-pulse at its maximum
    let scan = phase_scan(&scan_params(), 1, &coarse_scan(25)).unwrap();
    let p = scan.get("p_transfer").unwrap();
    for (&x, &v) in scan.axis_values.iter().zip(p) {
        let want = (PI / 2.0 * (x / 2.0).sin().abs()).sin().powi(2);
        assert!((v - want).abs() < 5e-3, "Δφ={x}: {v} vs {want}");
    }
    assert!(p[0] < 1e-3 && p[12] > 0.999);
}

#[test]
fn two_ion_scan_is_a_distribution() {
    let scan = phase_scan(&scan_params(), 2, &coarse_scan(9)).unwrap();
    scan.check_probabilities(&["p11", "p01+p10", "p00"]).unwrap();
    // both bright at the node: both ions are flipped
    assert!(scan.get("p00").unwrap()[4] > 0.999);
    let csv = scan.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "dphi_rad,p11,p01+p10,p00");
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn fringe_exponents_near_node_and_antinode() {
    let scan = phase_scan(&scan_params(), 1, &coarse_scan(121)).unwrap();
    let (quartic, quadratic) = fringe_exponents(&scan, 0.05, 0.3).unwrap();
    assert!((quartic - 4.0).abs() < 0.3, "{quartic}");
    assert!((quadratic - 2.0).abs() < 0.2, "{quadratic}");
    assert!(fringe_exponents(&scan, 5.0, 6.0).is_err());
}

#[test]
fn node_and_antinode_detuning_scans() {
    let p = scan_params();
    let s = coarse_scan(3);
    let span = hz(20e3);
    let on = |pl, res| detuning_scan(&p, pl, res, span, &s).unwrap().get("p_transfer").unwrap()[1];
    assert!(on(Placement::Node, Resonance::Carrier) > 0.999);
    assert!(on(Placement::Antinode, Resonance::Sideband) > 0.99);
    assert!(on(Placement::Antinode, Resonance::Carrier) < 1e-3);
    assert!(on(Placement::Node, Resonance::Sideband) < 1e-2);
    // sideband π-time is longer by about 1/η
    let ratio = pi_time(&p, Resonance::Sideband).unwrap() / pi_time(&p, Resonance::Carrier).unwrap();
    assert!((ratio * p.eta - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn required_force_of_square_pulse() {
    // ∫∫ sin δ(t₁ − t₂) over one loop is 2π/δ², so F = δ_g/2
    for t in [15e-6, 40e-6] {
        let dg = 2.0 * PI / t;
        let f = required_sdf(dg, &PulseEnvelope::square(t).unwrap()).unwrap();
        assert!((f / (dg / 2.0) - 1.0).abs() < 1e-8);
    }
    assert!(required_sdf(-1.0, &PulseEnvelope::square(1e-6).unwrap()).is_err());
}

#[test]
fn required_force_of_ramped_pulse_by_double_integral() {
    let dg = 2.0 * PI / 20e-6;
    let env = gate_envelope(dg, 4e-6).unwrap();
    let inner = |t1: f64| integrate(|t2| env.g(t2) * (dg * (t1 - t2)).sin(), 0.0, t1, 1e-15);
    let phase = integrate(|t1| env.g(t1) * inner(t1), 0.0, env.t_total, 1e-18);
    let f = 2.0 * (PI / 8.0 / phase).sqrt();
    assert!((required_sdf(dg, &env).unwrap() / f - 1.0).abs() < 1e-6);
}

#[test]
fn power_scaling() {
    let ts = [15e-6, 20e-6, 30e-6, 40e-6, 60e-6];
    let c = power_curves(&PhysParams::default(), &ts, 0.0).unwrap();
    // square pulses: F ∝ 1/t, P ∝ F²
    assert!((log_log_slope(&ts, c.get("rel_power_sw").unwrap()) + 2.0).abs() < 1e-6);
    let ratio = c.get("tw_sw_ratio").unwrap();
    assert!(ratio.windows(2).all(|w| w[0] > w[1]));
    assert!(ratio[4] > 2.0);
}

#[test]
fn no_drive_leaves_half_overlap() {
    let p = PhysParams {
        omega_rabi: 0.0,
        ..PhysParams::default()
    };
    let dg = 2.0 * PI / 15e-6;
    let settings = GateSettings {
        fock_cutoff: 4,
        ..GateSettings::default()
    };
    let f = bell_fidelity(GateModel::SwMs, &p, dg, &gate_envelope(dg, 0.0).unwrap(), &settings).unwrap();
    assert!((f - 0.5).abs() < 1e-12);
}

#[test]
fn optimized_sw_gate() {
    let p = PhysParams::default();
    let dg = 2.0 * PI / 15e-6;
    let env = gate_envelope(dg, 0.0).unwrap();
    let settings = GateSettings::default();
    let best = optimize_rabi(GateModel::SwMs, &p, dg, &env, &settings).unwrap();
    assert!(best.fidelity > 0.999, "{}", best.fidelity);
    // Lamb-Dicke estimate: 2ηΩ = δ_g/2
    let estimate = dg / (4.0 * p.eta);
    assert!((best.omega_star / estimate - 1.0).abs() < 0.05, "{}", best.omega_star / estimate);
    // the optimum is a local maximum
    for k in [0.99, 1.01] {
        let q = PhysParams {
            omega_rabi: k * best.omega_star,
            ..p.clone()
        };
        assert!(bell_fidelity(GateModel::SwMs, &q, dg, &env, &settings).unwrap() < best.fidelity + 1e-9);
    }
}

#[test]
fn sdf_growth_is_linear() {
    let p = PhysParams {
        omega_rabi: 0.5 * hz(1.2e6) / 2.0,
        delta: hz(1.2e6),
        ..PhysParams::default()
    };
    let s = SdfSettings {
        durations: 4,
        ..SdfSettings::default()
    };
    let tw = extract_sdf(&p, SdfModel::TwMs, &s).unwrap();
    let want = p.eta * p.omega_rabi * (bessel_j(0, 0.5) + bessel_j(2, 0.5));
    assert!((tw.omega_sdf / want - 1.0).abs() < 0.02, "{}", tw.omega_sdf / want);
    let sw = extract_sdf(&p, SdfModel::SwMs, &s).unwrap();
    assert!((sw.omega_sdf / (2.0 * p.eta * p.omega_rabi) - 1.0).abs() < 0.02);
    assert!(extract_sdf(&p, SdfModel::TwMs, &SdfSettings { durations: 2, ..s }).is_err());
}

#[test]
fn carrier_suppression_closed_form() {
    // E[sin²(Δφ/2)] = (1 − e^{−σ²/2})/2 for Gaussian Δφ
    for (a, s) in [(0.05, 0.12), (0.1, 0.0), (0.0, 0.3)] {
        let want = 1.0 / ((a / 2.0f64).powi(2) + (1.0 - (-s * s / 2.0f64).exp()) / 2.0).sqrt();
        assert!((carrier_suppression(a, s).unwrap() / want - 1.0).abs() < 1e-10);
    }
    assert!(carrier_suppression(0.0, 0.0).unwrap().is_infinite());
    assert!((suppression_db(10.0) - 20.0).abs() < 1e-12);
    assert!(carrier_suppression(-0.1, 0.1).is_err());
}

#[test]
fn spacing_calibration_recovers_mismatch() {
    let settings = CalSettings::default();
    let p = PhysParams {
        omega_rabi: hz(50e3),
        dphi_sp: 0.2,
        ..PhysParams::default()
    };
    let clean = spacing_scan(&p, &settings).unwrap();
    let model = SpacingModel::new(&p, &settings).unwrap();
    let fit = model.fit(&clean).unwrap();
    assert!((fit.value - 0.2).abs() < 1e-4, "{}", fit.value);
    assert!(fit.residual < 1e-3);
    let noisy = with_projection_noise_seeded(&clean, 100, 3).unwrap();
    noisy.check_probabilities(&["p11", "p01+p10", "p00"]).unwrap();
    let fit = model.fit(&noisy).unwrap();
    assert!((fit.value - 0.2).abs() < 0.1, "{}", fit.value);
}
