//! Browser bindings for three parameter explorers: the traveling-wave
//! force law, the single-ion standing-wave phase fringe and the
//! pulse-shaping suppression of carrier errors.
//!
//! Every export returns a flat `Float64Array` of `[x0, y0, x1, y1, ...]`
//! pairs, or an empty array when the parameters are rejected.

use std::f64::consts::PI;

use swgate::analysis::fringe::{phase_scan, ScanSettings};
use swgate::budget::shaped_ratio_worst;
use swgate::evolution::IntegratorConfig;
use swgate::hamiltonian::{sdf_analytic, PhysParams};
use wasm_bindgen::prelude::*;

fn interleave(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.iter().zip(ys).flat_map(|(x, y)| [*x, *y]).collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// TW spin-dependent force over ηδ against 2Ω/δ on `[0, x_max]`.
pub fn sdf_curve(x_max: f64, points: usize) -> Vec<f64> {
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Vec::new();
    }
    let xs = grid(0.0, x_max, points);
    // δ = 1 and η = 1 so the force comes out in units of ηδ
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| sdf_analytic(1.0, x / 2.0, 1.0).map(f64::abs).unwrap_or(f64::NAN))
        .collect();
    interleave(&xs, &ys)
}

/// Population transferred from |↓⟩ by a resonant standing-wave π pulse as
/// the ion is moved through one optical period. Full evolution with a
/// small Fock space.
pub fn phase_fringe(eta: f64, rabi_khz: f64, points: usize) -> Vec<f64> {
    let params = PhysParams {
        n_ions: 1,
        eta,
        omega_rabi: 2.0 * PI * rabi_khz * 1e3,
        ..PhysParams::default()
    };
    let settings = ScanSettings {
        points: points.clamp(8, 241),
        fock_cutoff: 6,
        // plotting accuracy is enough and keeps the sliders responsive
        integrator: IntegratorConfig {
            steps_per_period: 16.0,
            tol: 1e-5,
            ..IntegratorConfig::default()
        },
    };
    match phase_scan(&params, 1, &settings) {
        Ok(scan) => interleave(&scan.axis_values, scan.get("p_transfer").unwrap_or(&[])),
        Err(_) => Vec::new(),
    }
}

/// Worst-case carrier suppression r against ramp duration for a pulse of
/// `t_total_us`, with carrier detuning `delta_mhz` (linear frequency).
/// Values are log10(r).
pub fn shaped_ratio_curve(delta_mhz: f64, t_total_us: f64, points: usize) -> Vec<f64> {
    if !(delta_mhz > 0.0 && t_total_us > 0.0) {
        return Vec::new();
    }
    let delta = 2.0 * PI * delta_mhz * 1e6;
    let t_total = t_total_us * 1e-6;
    let ramps = grid(0.0, 0.5 * t_total_us, points);
    let ys: Vec<f64> = ramps
        .iter()
        .map(|&tr| match shaped_ratio_worst(delta, tr * 1e-6, t_total) {
            Ok(r) if r > 0.0 => r.log10(),
            _ => f64::NAN,
        })
        .collect();
    interleave(&ramps, &ys)
}

#[wasm_bindgen(js_name = sdfCurve)]
pub fn sdf_curve_js(x_max: f64, points: usize) -> Vec<f64> {
    sdf_curve(x_max, points)
}

#[wasm_bindgen(js_name = phaseFringe)]
pub fn phase_fringe_js(eta: f64, rabi_khz: f64, points: usize) -> Vec<f64> {
    phase_fringe(eta, rabi_khz, points)
}

#[wasm_bindgen(js_name = shapedRatioCurve)]
pub fn shaped_ratio_curve_js(delta_mhz: f64, t_total_us: f64, points: usize) -> Vec<f64> {
    shaped_ratio_curve(delta_mhz, t_total_us, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sdf_curve_peaks_near_known_maximum() {
        let v = sdf_curve(3.0, 301);
        let (x, y) = v
            .chunks(2)
            .map(|p| (p[0], p[1]))
            .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        assert!((x - 1.84).abs() < 0.02, "{x}");
        assert!((y - 0.582).abs() < 0.002, "{y}");
    }

    #[test]
    fn fringe_is_dark_at_node() {
        let v = phase_fringe(0.051, 50.0, 21);
        // Δφ = π gives the full carrier, Δφ = 0 and 2π the node
        assert!(v[1] < 0.05);
        assert!(v[21] > 0.95);
        assert!(v[41] < 0.05);
    }

    #[test]
    fn ramps_suppress_carrier() {
        let v = shaped_ratio_curve(1.2, 25.0, 11);
        // a square pulse sits at the worst case 4 sin²(δt/2) = 4
        assert!((v[1] - 4f64.log10()).abs() < 1e-9);
        assert!(v[v.len() - 1] < -2.0);
        assert!(shaped_ratio_curve(-1.0, 25.0, 11).is_empty());
    }
}
