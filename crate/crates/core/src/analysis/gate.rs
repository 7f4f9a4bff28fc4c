//! Two-ion Mølmer–Sørensen gates: Bell-state fidelity, Rabi-frequency
//! optimisation and the laser-power scaling of TW and SW gates.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_detailed, evolve_fixed, EvolutionStats, IntegratorConfig, PulseEnvelope};
use crate::hamiltonian::{h_sw_ms, h_sw_ms_exact, h_tw_ms, h_tw_ms_exact, invert_tw_sdf, PhysParams, TimedOperator};
use crate::hilbert::{build_space, StateVector};
use crate::scan::ScanResult;
use crate::special::{golden_max, integrate};
use crate::C64;

/// Bichromatic drive used for a gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateModel {
    /// Standing wave, exact sine form (two SW tones).
    SwMs,
    /// Standing wave, Lamb-Dicke form.
    SwMsLd,
    /// Traveling wave, Lamb-Dicke form with the non-commuting carrier.
    TwMs,
    /// Traveling wave, two exact TW tones.
    TwMsExact,
}

impl GateModel {
    pub fn is_standing_wave(self) -> bool {
        matches!(self, GateModel::SwMs | GateModel::SwMsLd)
    }

    pub fn hamiltonian(self, params: &PhysParams, fock_cutoff: usize) -> Result<TimedOperator> {
        let space = build_space(params.n_ions, fock_cutoff)?;
        match self {
            GateModel::SwMs => h_sw_ms_exact(params, space),
            GateModel::SwMsLd => h_sw_ms(params, space),
            GateModel::TwMs => h_tw_ms(params, space, 0.0),
            GateModel::TwMsExact => h_tw_ms_exact(params, space, 0.0),
        }
    }
}

/// Numerical settings shared by gate simulations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSettings {
    pub fock_cutoff: usize,
    pub integrator: IntegratorConfig,
    /// Steps per fastest period for the fixed-step search evaluations.
    pub search_steps_per_period: f64,
    pub coarse_points: usize,
    pub rel_width: f64,
}

impl Default for GateSettings {
    fn default() -> Self {
        Self {
            fock_cutoff: 14,
            integrator: IntegratorConfig {
                steps_per_period: 24.0,
                ..Default::default()
            },
            search_steps_per_period: 24.0,
            coarse_points: 48,
            rel_width: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateResult {
    pub t_gate_eff: f64,
    pub delta_g: f64,
    pub omega_star: f64,
    pub fidelity: f64,
    pub rel_power: f64,
    pub stats: EvolutionStats,
}

/// Overlap of a two-spin density matrix with the best even Bell state
/// (|↓↓⟩ + e^{iζ}|↑↑⟩)/√2, maximised over ζ.
pub fn bell_overlap(rho: &DMatrix<C64>) -> f64 {
    0.5 * (rho[(0, 0)].re + rho[(3, 3)].re) + rho[(3, 0)].norm()
}

/// Pulse used for a gate of effective duration 2π/δ_g with ramps `t_ramp`.
pub fn gate_envelope(delta_g: f64, t_ramp: f64) -> Result<PulseEnvelope> {
    if !(delta_g > 0.0) {
        return Err(Error::invalid("delta_g", "must be positive"));
    }
    let t_eff = 2.0 * PI / delta_g;
    if t_ramp > 0.0 {
        PulseEnvelope::ramped(t_ramp, t_eff + t_ramp)
    } else {
        PulseEnvelope::square(t_eff)
    }
}

fn gate_params(params: &PhysParams, delta_g: f64, omega: f64) -> Result<PhysParams> {
    if !(delta_g > 0.0) {
        return Err(Error::invalid("delta_g", "must be positive"));
    }
    let p = PhysParams {
        n_ions: 2,
        delta: params.omega_z + delta_g,
        omega_rabi: omega,
        ..params.clone()
    };
    p.validate()?;
    Ok(p)
}

fn initial_state(fock_cutoff: usize) -> Result<StateVector> {
    Ok(StateVector::basis(build_space(2, fock_cutoff)?, 0, 0))
}

/// Bell-state fidelity after the gate pulse, with full convergence control.
/// `params.omega_rabi` sets the drive strength; δ is set to ω_z + δ_g.
pub fn bell_fidelity(
    model: GateModel,
    params: &PhysParams,
    delta_g: f64,
    env: &PulseEnvelope,
    settings: &GateSettings,
) -> Result<f64> {
    bell_fidelity_detailed(model, params, delta_g, env, settings).map(|(f, _)| f)
}

pub fn bell_fidelity_detailed(
    model: GateModel,
    params: &PhysParams,
    delta_g: f64,
    env: &PulseEnvelope,
    settings: &GateSettings,
) -> Result<(f64, EvolutionStats)> {
    let p = gate_params(params, delta_g, params.omega_rabi)?;
    let h = model.hamiltonian(&p, settings.fock_cutoff)?;
    bell_fidelity_of(&h, env, &settings.integrator)
}

/// Bell fidelity for an arbitrary two-ion Hamiltonian started in |↓↓, 0⟩.
pub fn bell_fidelity_of(h: &TimedOperator, env: &PulseEnvelope, cfg: &IntegratorConfig) -> Result<(f64, EvolutionStats)> {
    if h.space().n_ions() != 2 {
        return Err(Error::invalid("n_ions", "Bell fidelity needs two ions"));
    }
    let out = evolve_detailed(h, env, &StateVector::basis(h.space(), 0, 0), cfg)?;
    Ok((bell_overlap(&out.state.reduced_spin_density()), out.stats))
}

/// Fixed-step fidelity used inside the optimiser.
fn search_fidelity(
    model: GateModel,
    params: &PhysParams,
    delta_g: f64,
    env: &PulseEnvelope,
    settings: &GateSettings,
    omega: f64,
) -> Result<f64> {
    let p = gate_params(params, delta_g, omega)?;
    let h = model.hamiltonian(&p, settings.fock_cutoff)?;
    let dt = 2.0 * PI / h.rate().max(2.0 * PI) / settings.search_steps_per_period;
    let steps = ((env.t_total / dt).ceil() as usize).max(1);
    let psi = evolve_fixed(&h, env, &initial_state(settings.fock_cutoff)?, steps, settings.integrator.scheme)?;
    Ok(bell_overlap(&psi.reduced_spin_density()))
}

pub(crate) fn map_points<T: Send>(xs: &[f64], f: impl Fn(f64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        xs.par_iter().map(|&x| f(x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().map(|&x| f(x)).collect()
    }
}

pub(crate) use map_points as par_map;

/// Maximises the Bell fidelity over Ω: a log-spaced coarse grid over
/// [0.05, 3]·δ/2 followed by golden-section refinement, then a fully
/// converged evaluation at the optimum.
pub fn optimize_rabi(
    model: GateModel,
    params: &PhysParams,
    delta_g: f64,
    env: &PulseEnvelope,
    settings: &GateSettings,
) -> Result<GateResult> {
    let p = gate_params(params, delta_g, 0.0)?;
    let half = p.delta / 2.0;
    let n = settings.coarse_points.max(3);
    let (lo, hi) = (0.05 * half, 3.0 * half);
    let grid: Vec<f64> = (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let values = par_map(&grid, |om| search_fidelity(model, &p, delta_g, env, settings, om))?;
    let (fmin, fmax) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if fmax - fmin < 1e-6 {
        return Err(Error::FlatLandscape { spread: fmax - fmin });
    }
    // smallest Ω whose fidelity is within 1e-4 of the best: the single-loop solution
    let k = values
        .iter()
        .position(|&v| v >= fmax - 1e-4)
        .expect("maximum exists");
    // walk uphill to the local peak of that branch
    let mut k = k;
    while k + 1 < n && values[k + 1] > values[k] {
        k += 1;
    }
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(n - 1)];
    let (omega_star, _) = golden_max(
        |om| search_fidelity(model, &p, delta_g, env, settings, om),
        a,
        b,
        settings.rel_width,
    )?;
    let verified = PhysParams {
        omega_rabi: omega_star,
        ..p.clone()
    };
    let (fidelity, stats) = bell_fidelity_detailed(model, &verified, delta_g, env, settings)?;
    let beams = if model.is_standing_wave() { 2.0 } else { 1.0 };
    Ok(GateResult {
        t_gate_eff: 2.0 * PI / delta_g,
        delta_g,
        omega_star,
        fidelity,
        rel_power: beams * omega_star * omega_star,
        stats,
    })
}

/// Maps [`optimize_rabi`] over effective gate durations (seconds).
pub fn fidelity_vs_duration(
    model: GateModel,
    params: &PhysParams,
    durations: &[f64],
    t_ramp: f64,
    settings: &GateSettings,
) -> Result<ScanResult> {
    let results = durations
        .iter()
        .map(|&t| {
            let dg = 2.0 * PI / t;
            optimize_rabi(model, params, dg, &gate_envelope(dg, t_ramp)?, settings)
        })
        .collect::<Result<Vec<_>>>()?;
    ScanResult::new("t_gate_eff_s", durations.to_vec())
        .with("fidelity", results.iter().map(|r| r.fidelity).collect())?
        .with("omega_star", results.iter().map(|r| r.omega_star).collect())
}

/// Spin-dependent force needed for a maximally entangling single-loop gate
/// with the given envelope, from the rotating-wave geometric phase
/// Φ = (F/2)² ∫∫_{t₂<t₁} g(t₁)g(t₂) sin(δ_g(t₁ − t₂)) dt₂ dt₁ = π/8.
pub fn required_sdf(delta_g: f64, env: &PulseEnvelope) -> Result<f64> {
    if !(delta_g > 0.0) {
        return Err(Error::invalid("delta_g", "must be positive"));
    }
    let tf = env.t_total;
    let phase = integrate(
        |t1| {
            let c = integrate(|t2| env.g(t2) * (delta_g * t2).cos(), 0.0, t1, 1e-13 * tf);
            let s = integrate(|t2| env.g(t2) * (delta_g * t2).sin(), 0.0, t1, 1e-13 * tf);
            env.g(t1) * ((delta_g * t1).sin() * c - (delta_g * t1).cos() * s)
        },
        0.0,
        tf,
        1e-12 * tf * tf,
    );
    if !(phase > 0.0) {
        return Err(Error::Undefined("geometric phase integral is not positive".into()));
    }
    Ok(2.0 * (PI / 8.0 / phase).sqrt())
}

/// Relative laser power of SW and TW gates versus effective duration,
/// each normalised to the SW power at the slowest duration. TW durations
/// beyond the speed limit are reported as NaN in `rel_power_tw` and flagged
/// by `tw_attainable` = 0.
pub fn power_curves(params: &PhysParams, durations: &[f64], t_ramp: f64) -> Result<ScanResult> {
    params.validate()?;
    let mut sw = Vec::with_capacity(durations.len());
    let mut tw = Vec::with_capacity(durations.len());
    for &t in durations {
        let dg = 2.0 * PI / t;
        let env = gate_envelope(dg, t_ramp)?;
        let f = required_sdf(dg, &env)?;
        let delta = params.omega_z + dg;
        // SW: Ω_SDF = 2ηΩ per beam, two beams
        let om_sw = f / (2.0 * params.eta);
        sw.push(2.0 * om_sw * om_sw);
        tw.push(invert_tw_sdf(f, params.eta, delta).map(|om| om * om).unwrap_or(f64::NAN));
    }
    let slowest = durations
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("durations", "must not be empty"))?;
    let norm = sw[slowest];
    let attainable: Vec<f64> = tw.iter().map(|v| if v.is_nan() { 0.0 } else { 1.0 }).collect();
    let ratio: Vec<f64> = tw.iter().zip(&sw).map(|(t, s)| t / s).collect();
    ScanResult::new("t_gate_eff_s", durations.to_vec())
        .with("rel_power_sw", sw.iter().map(|v| v / norm).collect())?
        .with("rel_power_tw", tw.iter().map(|v| v / norm).collect())?
        .with("tw_sw_ratio", ratio)?
        .with("tw_attainable", attainable)
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_of_bell_and_product_states() {
        let mut rho = DMatrix::<C64>::zeros(4, 4);
        rho[(0, 0)] = C64::new(1.0, 0.0);
        assert!((bell_overlap(&rho) - 0.5).abs() < 1e-15);
        let mut bell = DMatrix::<C64>::zeros(4, 4);
        let ph = C64::from_polar(0.5, 0.7);
        bell[(0, 0)] = C64::new(0.5, 0.0);
        bell[(3, 3)] = C64::new(0.5, 0.0);
        bell[(3, 0)] = ph;
        bell[(0, 3)] = ph.conj();
        assert!((bell_overlap(&bell) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_pulse_sdf_requirement() {
        // square pulse: Φ = (F/2)² · 2π/δ_g², so F = δ_g/2
        let dg = 2.0 * PI / 20e-6;
        let env = gate_envelope(dg, 0.0).unwrap();
        let f = required_sdf(dg, &env).unwrap();
        assert!((f / (dg / 2.0) - 1.0).abs() < 1e-8, "{}", f / (dg / 2.0));
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((log_log_slope(&x, &y) + 2.0).abs() < 1e-12);
    }
}
