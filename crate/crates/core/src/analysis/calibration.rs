//! Supplementary calibrations: ion spacing against the SW period, the
//! anti-node offsets of the two bichromatic tones, and the carrier
//! suppression expected from residual imperfections.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::fringe::{pi_time, pulse_populations, uniform_grid, Resonance, ScanSettings};
use super::gate::par_map;
use crate::error::{Error, Result};
use crate::hamiltonian::PhysParams;
use crate::scan::ScanResult;
use crate::special::{gaussian_expectation, golden_max, TrigInterpolant};

const TWO_ION_SERIES: [&str; 3] = ["p11", "p01+p10", "p00"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalSettings {
    /// Simulated samples per period used to build the fit model.
    pub reference_points: usize,
    /// Resolution of the initial grid search over the fitted phase.
    pub search_points: usize,
    /// Largest accepted rms residual per population value.
    pub max_residual: f64,
    pub scan: ScanSettings,
}

impl Default for CalSettings {
    fn default() -> Self {
        Self {
            reference_points: 64,
            search_points: 721,
            max_residual: 0.15,
            scan: ScanSettings {
                points: 61,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseFit {
    pub value: f64,
    /// RMS deviation between model and data per population value.
    pub residual: f64,
}

/// Replaces each point of the two-ion series by the frequencies of
/// `shots` multinomial draws from its populations.
pub fn with_projection_noise<R: Rng + ?Sized>(scan: &ScanResult, shots: u32, rng: &mut R) -> Result<ScanResult> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be positive"));
    }
    let cols = two_ion_columns(scan)?;
    let mut noisy = vec![Vec::with_capacity(scan.len()); 3];
    for i in 0..scan.len() {
        let mut left = shots as u64;
        let mut mass = 1.0;
        for (k, col) in cols.iter().enumerate() {
            let p = col[i].clamp(0.0, 1.0);
            let n = if k == 2 || mass <= 0.0 {
                left
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).expect("probability in [0, 1]").sample(rng)
            };
            noisy[k].push(n as f64 / shots as f64);
            left -= n;
            mass -= p;
        }
    }
    let mut out = ScanResult::new(scan.axis_name.clone(), scan.axis_values.clone());
    for (name, v) in TWO_ION_SERIES.iter().zip(noisy) {
        out.push(*name, v)?;
    }
    Ok(out)
}

/// Seeded variant of [`with_projection_noise`].
pub fn with_projection_noise_seeded(scan: &ScanResult, shots: u32, seed: u64) -> Result<ScanResult> {
    with_projection_noise(scan, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn two_ion_columns(scan: &ScanResult) -> Result<Vec<&[f64]>> {
    TWO_ION_SERIES
        .iter()
        .map(|name| {
            scan.get(name)
                .ok_or_else(|| Error::invalid("scan", format!("needs a two-ion `{name}` series")))
        })
        .collect()
}

/// Maximum-likelihood fit of one phase parameter `s` of `model(s, Δφ)` to
/// the three two-ion series, treating each point as multinomial counts:
/// grid search over [−π, π), then golden-section refinement around the
/// best grid point. The reported residual is the rms misfit.
fn fit_phase(data: &ScanResult, model: impl Fn(f64, f64) -> [f64; 3], settings: &CalSettings) -> Result<PhaseFit> {
    let cols = two_ion_columns(data)?;
    if data.len() < 3 {
        return Err(Error::invalid("scan", "needs at least 3 points"));
    }
    // floor keeps the log finite where the model predicts a dark outcome
    let loss = |s: f64| -> f64 {
        data.axis_values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let m = model(s, x);
                (0..3)
                    .map(|k| {
                        let f = cols[k][i];
                        if f > 0.0 {
                            f * (f / m[k].max(1e-12)).ln()
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    let misfit = |s: f64| -> f64 {
        data.axis_values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let m = model(s, x);
                (0..3).map(|k| (m[k] - cols[k][i]).powi(2)).sum::<f64>()
            })
            .sum()
    };
    let n = settings.search_points.max(8);
    let step = 2.0 * PI / n as f64;
    let (best, _) = (0..n)
        .map(|k| -PI + k as f64 * step)
        .map(|s| (s, loss(s)))
        .fold((0.0, f64::INFINITY), |acc, (s, l)| if l < acc.1 { (s, l) } else { acc });
    let (value, neg) = golden_max(|s| Ok::<_, Error>(-loss(s)), best - step, best + step, 1e-12)?;
    let value = if -neg <= loss(best) { value } else { best };
    let residual = (misfit(value) / (3 * data.len()) as f64).sqrt();
    if !(residual <= settings.max_residual) {
        return Err(Error::FitFailed {
            reason: "two-ion fringe model does not match the data".into(),
            residual,
        });
    }
    let wrapped = (value + PI).rem_euclid(2.0 * PI) - PI;
    Ok(PhaseFit { value: wrapped, residual })
}

/// Simulated populations on a uniform Δφ grid over [0, 2π), interpolated.
fn reference_fringes(params: &PhysParams, t_pulse: f64, settings: &CalSettings) -> Result<Vec<TrigInterpolant>> {
    let k = settings.reference_points.max(8);
    let grid: Vec<f64> = (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect();
    let pops = par_map(&grid, |d| pulse_populations(&params.with_dphi(d), t_pulse, &settings.scan))?;
    let n_series = pops[0].len();
    Ok((0..n_series)
        .map(|s| TrigInterpolant::new(&pops.iter().map(|p| p[s]).collect::<Vec<_>>()))
        .collect())
}

/// Two-ion carrier phase scan (both ions start bright) with a spacing
/// mismatch `dphi_sp` between the ions.
pub fn spacing_scan(params: &PhysParams, settings: &CalSettings) -> Result<ScanResult> {
    let base = PhysParams {
        n_ions: 2,
        delta: 0.0,
        ..params.clone()
    };
    super::fringe::phase_scan(&base, 2, &settings.scan)
}

/// Fit model for Δφ_sp. The ions are treated as independent: each flips
/// with the single-ion transfer probability q at its own phase, Δφ and
/// Δφ + Δφ_sp, where q is simulated with the full model and interpolated.
#[derive(Clone, Debug)]
pub struct SpacingModel {
    q: TrigInterpolant,
    settings: CalSettings,
}

impl SpacingModel {
    pub fn new(params: &PhysParams, settings: &CalSettings) -> Result<Self> {
        let single = PhysParams {
            n_ions: 1,
            delta: 0.0,
            dphi_sp: 0.0,
            ..params.clone()
        };
        single.validate()?;
        let t_pulse = pi_time(&single, Resonance::Carrier)?;
        let mut refs = reference_fringes(&single, t_pulse, settings)?;
        Ok(Self {
            q: refs.swap_remove(1),
            settings: settings.clone(),
        })
    }

    pub fn populations(&self, dphi_sp: f64, dphi: f64) -> [f64; 3] {
        let (a, b) = (self.q.eval(dphi), self.q.eval(dphi + dphi_sp));
        [(1.0 - a) * (1.0 - b), a * (1.0 - b) + b * (1.0 - a), a * b]
    }

    pub fn fit(&self, scan: &ScanResult) -> Result<PhaseFit> {
        fit_phase(scan, |s, x| self.populations(s, x), &self.settings)
    }
}

/// Recovers Δφ_sp from a two-ion carrier phase scan.
pub fn spacing_fit(scan: &ScanResult, params: &PhysParams, settings: &CalSettings) -> Result<PhaseFit> {
    SpacingModel::new(params, settings)?.fit(scan)
}

/// Setup of the anti-node calibration of one bichromatic tone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BichromaticCal {
    /// Gate detuning δ_g; the tones are probed at δ = ±(ω_z − δ_g).
    pub delta_g: f64,
    /// Square pulse duration; the effective gate duration when absent.
    pub t_pulse: Option<f64>,
    pub shots: Option<u32>,
    pub seed: u64,
}

impl Default for BichromaticCal {
    fn default() -> Self {
        Self {
            delta_g: 2.0 * PI / 15e-6,
            t_pulse: None,
            shots: Some(100),
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BichromaticFit {
    pub dphi_bd: PhaseFit,
    pub dphi_rd: PhaseFit,
}

/// Two-ion monochromatic SW scan at detuning `delta` with the tone's
/// anti-node shifted by `offset`. Axis: the nominal Δφ.
pub fn offset_scan(params: &PhysParams, delta: f64, offset: f64, t_pulse: f64, settings: &CalSettings) -> Result<ScanResult> {
    let base = PhysParams {
        n_ions: 2,
        delta,
        ..params.clone()
    };
    base.validate()?;
    let grid = uniform_grid(0.0, 2.0 * PI, settings.scan.points.max(3));
    let pops = par_map(&grid, |d| pulse_populations(&base.with_dphi(d + offset), t_pulse, &settings.scan))?;
    ScanResult::new("dphi_rad", grid)
        .with("p11", pops.iter().map(|p| p[0]).collect())?
        .with("p01+p10", pops.iter().map(|p| p[1] + p[2]).collect())?
        .with("p00", pops.iter().map(|p| p[3]).collect())
}

/// Fit model for the anti-node shift of one tone: the data are the
/// zero-offset reference fringes translated by the unknown offset.
#[derive(Clone, Debug)]
pub struct OffsetModel {
    refs: Vec<TrigInterpolant>,
    settings: CalSettings,
}

impl OffsetModel {
    pub fn new(params: &PhysParams, delta: f64, t_pulse: f64, settings: &CalSettings) -> Result<Self> {
        let base = PhysParams {
            n_ions: 2,
            delta,
            ..params.clone()
        };
        base.validate()?;
        Ok(Self {
            refs: reference_fringes(&base, t_pulse, settings)?,
            settings: settings.clone(),
        })
    }

    pub fn populations(&self, offset: f64, dphi: f64) -> [f64; 3] {
        let v: Vec<f64> = self.refs.iter().map(|r| r.eval(dphi + offset)).collect();
        [v[0], v[1] + v[2], v[3]]
    }

    pub fn fit(&self, scan: &ScanResult) -> Result<PhaseFit> {
        fit_phase(scan, |s, x| self.populations(s, x), &self.settings)
    }
}

/// Simulates the calibration of both bichromatic tones with injected
/// offsets (`params.dphi_bd`, `params.dphi_rd`) and returns the fitted
/// offsets. Projection noise is added when `cal.shots` is set.
pub fn bichromatic_offset_cal(params: &PhysParams, cal: &BichromaticCal, settings: &CalSettings) -> Result<BichromaticFit> {
    params.validate()?;
    if !(cal.delta_g > 0.0 && cal.delta_g < params.omega_z) {
        return Err(Error::invalid("delta_g", "must lie in (0, ω_z)"));
    }
    let t_pulse = cal.t_pulse.unwrap_or(2.0 * PI / cal.delta_g);
    if !(t_pulse > 0.0) {
        return Err(Error::invalid("t_pulse", "must be positive"));
    }
    let probe = params.omega_z - cal.delta_g;
    let mut rng = ChaCha8Rng::seed_from_u64(cal.seed);
    let mut one = |delta: f64, offset: f64| -> Result<PhaseFit> {
        let mut scan = offset_scan(params, delta, offset, t_pulse, settings)?;
        if let Some(shots) = cal.shots {
            scan = with_projection_noise(&scan, shots, &mut rng)?;
        }
        OffsetModel::new(params, delta, t_pulse, settings)?.fit(&scan)
    };
    let dphi_bd = one(probe, params.dphi_bd)?;
    let dphi_rd = one(-probe, params.dphi_rd)?;
    Ok(BichromaticFit { dphi_bd, dphi_rd })
}

/// Predicted ratio of maximal to minimal carrier Rabi frequency for a
/// relative beam imbalance ΔΩ/Ω and Gaussian SW phase noise of rms σ:
/// 1/√((ΔΩ/2Ω)² + E[sin²(Δφ/2)]). Infinite for an ideal SW.
pub fn carrier_suppression(rabi_imbalance_rel: f64, sigma_phi: f64) -> Result<f64> {
    if !(rabi_imbalance_rel >= 0.0) || !(sigma_phi >= 0.0) {
        return Err(Error::invalid("carrier_suppression", "inputs must be non-negative"));
    }
    let phase = gaussian_expectation(sigma_phi, 64, |x| (x / 2.0).sin().powi(2));
    let floor = (rabi_imbalance_rel / 2.0).powi(2) + phase;
    Ok(if floor == 0.0 { f64::INFINITY } else { 1.0 / floor.sqrt() })
}

/// Ratio in decibels of amplitude, 20 log₁₀.
pub fn suppression_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}
