//! Spin-dependent force extraction from simulated displacement growth.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::gate::par_map;
use crate::error::{Error, Result};
use crate::evolution::{evolve, IntegratorConfig, PulseEnvelope};
use crate::hamiltonian::{h_sw_ms_exact, h_tw_ms, PhysParams, TimedOperator};
use crate::hilbert::{build_space, StateVector};
use crate::scan::ScanResult;
use crate::special::{golden_max, j0_plus_j2};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdfModel {
    TwMs,
    SwMs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdfSettings {
    pub t_ramp: f64,
    /// Number of plateau durations in the linear fit.
    pub durations: usize,
    /// Target displacement |α| at the longest plateau.
    pub alpha_max: f64,
    pub fock_cutoff: usize,
    /// Largest accepted rms fit residual relative to the fitted growth.
    pub max_residual: f64,
    pub integrator: IntegratorConfig,
}

impl Default for SdfSettings {
    fn default() -> Self {
        Self {
            t_ramp: 3.6e-6,
            durations: 5,
            alpha_max: 1.0,
            fock_cutoff: 14,
            max_residual: 0.02,
            integrator: IntegratorConfig {
                steps_per_period: 24.0,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdfFit {
    pub omega_sdf: f64,
    pub residual: f64,
    pub plateaus: Vec<f64>,
    pub alphas: Vec<f64>,
}

/// Spin phase φ of the force operator Ŝ_φ and the Hamiltonian for a model.
fn model_setup(model: SdfModel, p: &PhysParams, cutoff: usize) -> Result<(f64, TimedOperator)> {
    let space = build_space(1, cutoff)?;
    Ok(match model {
        SdfModel::TwMs => (0.0, h_tw_ms(p, space, 0.0)?),
        SdfModel::SwMs => (p.tilde_phi(), h_sw_ms_exact(p, space)?),
    })
}

/// Expected force used only to size the duration grid.
fn expected_sdf(model: SdfModel, p: &PhysParams) -> f64 {
    match model {
        SdfModel::TwMs => p.eta * p.omega_rabi * j0_plus_j2(2.0 * p.omega_rabi / p.delta).abs(),
        SdfModel::SwMs => 2.0 * p.eta * p.omega_rabi * (p.dphi() / 2.0).cos().abs(),
    }
}

/// Displacement of the motion conditioned on the spin state `spin`:
/// α = ⟨P ⊗ â⟩ / ⟨P⟩ with P = |spin⟩⟨spin|.
pub fn conditional_displacement(psi: &StateVector, spin: &[C64; 2]) -> C64 {
    let sp = psi.space();
    let a = psi.as_slice();
    let c: Vec<C64> = (0..sp.mode_dim())
        .map(|n| spin[0].conj() * a[sp.index(0, n)] + spin[1].conj() * a[sp.index(1, n)])
        .collect();
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let lowered: C64 = (1..c.len()).map(|n| c[n - 1].conj() * c[n] * (n as f64).sqrt()).sum();
    lowered / norm
}

/// Extracts Ω_SDF for a single ion on the resonant SDF (δ = ω_z): the spin
/// starts in the +1 eigenstate of the force operator and the motion in |0⟩;
/// |α| is recorded after ramped pulses with increasing plateau, and
/// Ω_SDF = 2 d|α|/dt from a linear fit.
pub fn extract_sdf(params: &PhysParams, model: SdfModel, settings: &SdfSettings) -> Result<SdfFit> {
    let p = PhysParams {
        n_ions: 1,
        delta: params.omega_z,
        ..params.clone()
    };
    p.validate()?;
    if settings.durations < 3 {
        return Err(Error::invalid("durations", "need at least 3 plateau durations"));
    }
    let guess = expected_sdf(model, &p);
    if !(guess > 0.0) {
        return Err(Error::Undefined("expected force vanishes; no growth to fit".into()));
    }
    let (phi, h) = model_setup(model, &p, settings.fock_cutoff)?;
    let spin = [
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::from_polar(FRAC_1_SQRT_2, phi),
    ];
    let psi0 = StateVector::product(h.space(), &spin, 0)?;
    let t_max = 2.0 * settings.alpha_max / guess;
    let n = settings.durations;
    let plateaus: Vec<f64> = (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect();
    let alphas = par_map(&plateaus, |tp| {
        let env = PulseEnvelope::ramped(settings.t_ramp, 2.0 * settings.t_ramp + tp)?;
        let psi = evolve(&h, &env, &psi0, &settings.integrator)?;
        Ok(conditional_displacement(&psi, &spin).norm())
    })?;
    let (slope, intercept) = linear_fit(&plateaus, &alphas);
    let rms = (plateaus
        .iter()
        .zip(&alphas)
        .map(|(t, a)| (a - slope * t - intercept).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let residual = rms / (slope.abs() * t_max).max(f64::MIN_POSITIVE);
    if residual > settings.max_residual {
        return Err(Error::FitFailed {
            reason: "displacement does not grow linearly".into(),
            residual,
        });
    }
    Ok(SdfFit {
        omega_sdf: 2.0 * slope,
        residual,
        plateaus,
        alphas,
    })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// SDF saturation curve over x = 2Ω/δ at δ = ω_z: TW force normalised by
/// ηΩ, SW force normalised by 2ηΩ, and the analytic |J₀ + J₂|.
pub fn sdf_curve(params: &PhysParams, xs: &[f64], settings: &SdfSettings) -> Result<ScanResult> {
    let mut tw = Vec::with_capacity(xs.len());
    let mut sw = Vec::with_capacity(xs.len());
    for &x in xs {
        let om = x * params.omega_z / 2.0;
        let p = PhysParams {
            omega_rabi: om,
            ..params.clone()
        };
        let base = p.eta * om;
        tw.push(extract_sdf(&p, SdfModel::TwMs, settings)?.omega_sdf / base);
        sw.push(extract_sdf(&p, SdfModel::SwMs, settings)?.omega_sdf / (2.0 * base));
    }
    ScanResult::new("x_2omega_over_delta", xs.to_vec())
        .with("sdf_tw_norm", tw)?
        .with("sdf_tw_analytic", xs.iter().map(|&x| j0_plus_j2(x).abs()).collect())?
        .with("sdf_sw_norm", sw)
}

/// Locates the maximum of the simulated TW force over x = 2Ω/δ in [lo, hi].
/// Returns (x*, Ω_SDF(x*)/(ηδ)).
pub fn simulated_sdf_peak(params: &PhysParams, lo: f64, hi: f64, rel_width: f64, settings: &SdfSettings) -> Result<(f64, f64)> {
    let delta = params.omega_z;
    golden_max(
        |x| {
            let p = PhysParams {
                omega_rabi: x * delta / 2.0,
                ..params.clone()
            };
            extract_sdf(&p, SdfModel::TwMs, settings).map(|f| f.omega_sdf / (p.eta * delta))
        },
        lo,
        hi,
        rel_width,
    )
}
