//! Monochromatic standing-wave scans: transfer versus SW phase and versus
//! detuning, for one or two ions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gate::par_map;
use crate::error::{Error, Result};
use crate::evolution::{evolve, IntegratorConfig, PulseEnvelope};
use crate::hamiltonian::{h_sw_exact, PhysParams};
use crate::hilbert::{build_space, StateVector};
use crate::scan::ScanResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub fock_cutoff: usize,
    pub points: usize,
    pub integrator: IntegratorConfig,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            fock_cutoff: 8,
            points: 121,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Field node, Δφ = π: maximal carrier coupling.
    Node,
    /// Field anti-node, Δφ = 0: maximal sideband coupling.
    Antinode,
}

impl Placement {
    pub fn dphi(self) -> f64 {
        match self {
            Placement::Node => PI,
            Placement::Antinode => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resonance {
    Carrier,
    /// Blue motional sideband, δ = +ω_z.
    Sideband,
}

/// |⟨↑, n_to| H(0) |↓, 0⟩| for a single ion of the exact SW model.
fn coupling(params: &PhysParams, n_to: usize) -> Result<f64> {
    let p = PhysParams {
        n_ions: 1,
        dphi_sp: 0.0,
        ..params.clone()
    };
    let h = h_sw_exact(&p, build_space(1, 6)?)?;
    Ok(h.eval(0.0).element((1, n_to), (0, 0)).norm())
}

/// π-time of the resonance at its maximally coupled SW phase.
pub fn pi_time(params: &PhysParams, resonance: Resonance) -> Result<f64> {
    let (dphi, n_to) = match resonance {
        Resonance::Carrier => (PI, 0),
        Resonance::Sideband => (0.0, 1),
    };
    let c = coupling(&params.with_dphi(dphi), n_to)?;
    if c == 0.0 {
        return Err(Error::Undefined("zero coupling: π-time is infinite".into()));
    }
    Ok(PI / (2.0 * c))
}

/// Spin populations after a square SW pulse starting from |↓…↓, 0⟩.
pub(crate) fn pulse_populations(params: &PhysParams, t_pulse: f64, settings: &ScanSettings) -> Result<Vec<f64>> {
    let space = build_space(params.n_ions, settings.fock_cutoff)?;
    let h = h_sw_exact(params, space)?;
    let env = PulseEnvelope::square(t_pulse)?;
    let psi = evolve(&h, &env, &StateVector::basis(space, 0, 0), &settings.integrator)?;
    Ok(psi.spin_populations())
}

pub(crate) fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Sweeps Δφ over [0, 2π] on carrier resonance with the π-time of maximal
/// carrier coupling. One ion yields `p_transfer`; two ions, starting with
/// both bright (|↓↓⟩), yield `p11` (both bright), `p01+p10` and `p00`.
pub fn phase_scan(params: &PhysParams, n_ions: usize, settings: &ScanSettings) -> Result<ScanResult> {
    let base = PhysParams {
        n_ions,
        delta: 0.0,
        ..params.clone()
    };
    base.validate()?;
    let t_pulse = pi_time(&base, Resonance::Carrier)?;
    let grid = uniform_grid(0.0, 2.0 * PI, settings.points.max(2));
    let pops = par_map(&grid, |d| pulse_populations(&base.with_dphi(d), t_pulse, settings))?;
    let scan = ScanResult::new("dphi_rad", grid);
    let scan = if n_ions == 1 {
        scan.with("p_transfer", pops.iter().map(|p| p[1]).collect())?
    } else {
        scan.with("p11", pops.iter().map(|p| p[0]).collect())?
            .with("p01+p10", pops.iter().map(|p| p[1] + p[2]).collect())?
            .with("p00", pops.iter().map(|p| p[3]).collect())?
    };
    Ok(scan)
}

/// Sweeps δ across ±`span` around the chosen resonance with the ion at a
/// node or anti-node, using the π-time of the maximally coupled case.
pub fn detuning_scan(
    params: &PhysParams,
    placement: Placement,
    resonance: Resonance,
    span: f64,
    settings: &ScanSettings,
) -> Result<ScanResult> {
    let base = PhysParams {
        n_ions: 1,
        ..params.clone()
    }
    .with_dphi(placement.dphi());
    base.validate()?;
    if !(span >= 0.0) {
        return Err(Error::invalid("span", "must be non-negative"));
    }
    let t_pulse = pi_time(&base, resonance)?;
    let center = match resonance {
        Resonance::Carrier => 0.0,
        Resonance::Sideband => base.omega_z,
    };
    let grid = uniform_grid(center - span, center + span, settings.points.max(1));
    let pops = par_map(&grid, |d| {
        pulse_populations(&PhysParams { delta: d, ..base.clone() }, t_pulse, settings)
    })?;
    ScanResult::new("delta_rad_s", grid).with("p_transfer", pops.iter().map(|p| p[1]).collect())
}

/// Local power-law exponents of a single-ion fringe: the deficit 1 − p
/// against |Δφ − π| and the transfer p against |Δφ| (wrapped to (−π, π]),
/// each fitted on offsets in [`lo`, `hi`] radians.
pub fn fringe_exponents(scan: &ScanResult, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let p = scan
        .get("p_transfer")
        .ok_or_else(|| Error::invalid("scan", "needs a single-ion `p_transfer` series"))?;
    let fit = |offset: &dyn Fn(f64) -> f64, value: &dyn Fn(f64) -> f64, label: &str| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = scan
            .axis_values
            .iter()
            .zip(p)
            .map(|(&x, &v)| (offset(x), value(v)))
            .filter(|&(e, y)| (lo..=hi).contains(&e) && y > 0.0)
            .unzip();
        if xs.len() < 3 {
            return Err(Error::FitFailed {
                reason: format!("only {} usable points near {label}", xs.len()),
                residual: f64::NAN,
            });
        }
        Ok(super::gate::log_log_slope(&xs, &ys))
    };
    let quartic = fit(&|x| (x - PI).abs(), &|v| 1.0 - v, "π")?;
    let wrap = |x: f64| if x > PI { 2.0 * PI - x } else { x.abs() };
    let quadratic = fit(&wrap, &|v| v, "0")?;
    Ok((quartic, quadratic))
}
