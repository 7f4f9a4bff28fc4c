//! Monte Carlo model of the two-loop SW phase stabilisation: a fast
//! photodiode lock before every shot plus an interleaved zero-delay Ramsey
//! measurement on the ion that corrects the slow PD-to-ion offset.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scan::fmt_sci;
use crate::special::golden_max;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockConfig {
    /// Random-walk coefficient of the free path-length phase, rad/√s. The PD
    /// lock removes it at the start of each shot; only the walk during the
    /// shot period remains.
    pub drift_rate: f64,
    /// Random-walk coefficient of the offset between PD lock point and the
    /// ions, rad/√s. Only the ion loop sees it.
    pub pd_offset_drift: f64,
    /// RMS residual of the PD lock per shot, rad.
    pub pd_residual: f64,
    pub m_feedback_shots: u32,
    pub n_main_shots: u32,
    pub shot_period: f64,
    pub duration: f64,
    /// Enables the ion feedback loop; the PD loop is always on.
    pub ion_feedback: bool,
    /// Feedback gain applied to the Ramsey estimate.
    pub gain: f64,
    /// Projection noise of the ion readout; when off, the Ramsey signal is
    /// the exact mean transfer probability.
    pub shot_noise: bool,
    pub rng_seed: u64,
}

impl Default for LockConfig {
    fn default() -> Self {
        Self {
            drift_rate: 0.3,
            pd_offset_drift: 0.1,
            pd_residual: 0.02,
            m_feedback_shots: 100,
            n_main_shots: 100,
            shot_period: 2.5e-3,
            duration: 3600.0,
            ion_feedback: true,
            gain: 1.0,
            shot_noise: true,
            rng_seed: 1,
        }
    }
}

impl LockConfig {
    /// Estimator shot noise only: no drifts and a perfect PD lock.
    pub fn shot_noise_only() -> Self {
        Self {
            drift_rate: 0.0,
            pd_offset_drift: 0.0,
            pd_residual: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drift_rate", self.drift_rate),
            ("pd_offset_drift", self.pd_offset_drift),
            ("pd_residual", self.pd_residual),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be non-negative"));
            }
        }
        if self.m_feedback_shots == 0 || self.n_main_shots == 0 {
            return Err(Error::invalid("shots", "M and N must be at least 1"));
        }
        if !(self.shot_period > 0.0) || !(self.duration > 0.0) {
            return Err(Error::invalid("shot_period", "shot period and duration must be positive"));
        }
        if !(self.gain > 0.0 && self.gain <= 2.0) {
            return Err(Error::invalid("gain", "must lie in (0, 2]"));
        }
        Ok(())
    }

    /// Duration of one feedback cycle of M + N shots.
    pub fn cycle_time(&self) -> f64 {
        (self.m_feedback_shots + self.n_main_shots) as f64 * self.shot_period
    }
}

/// Zero-delay Ramsey estimate of a constant phase from `m_shots`
/// projective measurements with p = (1 + sin φ)/2.
pub fn ramsey_phase_estimate<R: Rng + ?Sized>(true_phi: f64, m_shots: u32, rng: &mut R) -> Result<f64> {
    if m_shots == 0 {
        return Err(Error::invalid("m_shots", "must be positive"));
    }
    let p = ((1.0 + true_phi.sin()) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(m_shots as u64, p).expect("probability in [0, 1]").sample(rng);
    Ok(phase_from_counts(k, m_shots))
}

fn phase_from_counts(k: u64, m: u32) -> f64 {
    phase_from_fraction(k as f64 / m as f64)
}

fn phase_from_fraction(f: f64) -> f64 {
    (2.0 * f - 1.0).clamp(-1.0, 1.0).asin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockTrace {
    pub times: Vec<f64>,
    /// Phase at the ions during main shots, rad.
    pub dphi: Vec<f64>,
    pub rms: f64,
}

impl LockTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,dphi_rad\n");
        for (t, d) in self.times.iter().zip(&self.dphi) {
            out.push_str(&fmt_sci(*t));
            out.push(',');
            out.push_str(&fmt_sci(*d));
            out.push('\n');
        }
        out
    }
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

struct Noise {
    rng: ChaCha8Rng,
    unit: Normal<f64>,
}

impl Noise {
    fn gauss(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            0.0
        } else {
            sigma * self.unit.sample(&mut self.rng)
        }
    }
}

/// Simulates alternating blocks of M ion-feedback shots and N main shots.
/// Before every shot the PD lock leaves a residual phase; the PD-to-ion
/// offset drifts freely and is corrected only by the ion loop, which
/// applies `gain` times the Ramsey estimate to φ₁ after each block.
pub fn simulate_lock(cfg: &LockConfig) -> Result<LockTrace> {
    cfg.validate()?;
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        unit: Normal::new(0.0, 1.0).expect("unit normal"),
    };
    let dt = cfg.shot_period;
    let step_offset = cfg.pd_offset_drift * dt.sqrt();
    let in_shot = cfg.drift_rate * dt.sqrt();
    let cycles = (cfg.duration / cfg.cycle_time()).floor().max(1.0) as usize;
    let mut offset = 0.0;
    let mut correction = 0.0;
    let mut t = 0.0;
    let mut times = Vec::with_capacity(cycles * cfg.n_main_shots as usize);
    let mut dphi = Vec::with_capacity(times.capacity());
    let shot_phase = |offset: f64, correction: f64, noise: &mut Noise| {
        offset - correction + noise.gauss(cfg.pd_residual) + noise.gauss(in_shot)
    };
    for _ in 0..cycles {
        let mut bright = 0.0;
        for _ in 0..cfg.m_feedback_shots {
            offset += noise.gauss(step_offset);
            let phi = shot_phase(offset, correction, &mut noise);
            let p = ((1.0 + phi.sin()) / 2.0).clamp(0.0, 1.0);
            bright += if !cfg.shot_noise {
                p
            } else if noise.rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            };
            t += dt;
        }
        if cfg.ion_feedback {
            correction += cfg.gain * phase_from_fraction(bright / cfg.m_feedback_shots as f64);
        }
        for _ in 0..cfg.n_main_shots {
            offset += noise.gauss(step_offset);
            let phi = shot_phase(offset, correction, &mut noise);
            times.push(t);
            dphi.push(phi);
            t += dt;
        }
    }
    Ok(LockTrace {
        rms: rms(&dphi),
        times,
        dphi,
    })
}

/// Runs [`simulate_lock`] once with and once without the ion loop, both
/// with the same seed.
pub fn compare_loops(cfg: &LockConfig) -> Result<(LockTrace, LockTrace)> {
    let both = simulate_lock(&LockConfig {
        ion_feedback: true,
        ..cfg.clone()
    })?;
    let pd_only = simulate_lock(&LockConfig {
        ion_feedback: false,
        ..cfg.clone()
    })?;
    Ok((both, pd_only))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub fit_mean: f64,
    pub fit_sigma: f64,
    /// Pearson χ² per degree of freedom of the fit over populated bins.
    pub chi2_dof: f64,
}

impl Histogram {
    /// True when the Gaussian describes the binned data (χ²/dof < 3).
    pub fn is_gaussian(&self) -> bool {
        self.chi2_dof < 3.0
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Bins `values` into `bins` equal bins spanning the data and fits a
/// Gaussian by maximising the binned Poisson likelihood.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.len() < 100 {
        return Err(Error::invalid("values", "need at least 100 samples"));
    }
    if bins < 3 {
        return Err(Error::invalid("bins", "need at least 3 bins"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::FitFailed {
            reason: "degenerate data: all samples are equal".into(),
            residual: 0.0,
        });
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = values.len() as f64;
    let expected = |mu: f64, sigma: f64, k: usize| {
        n * (normal_cdf((edges[k + 1] - mu) / sigma) - normal_cdf((edges[k] - mu) / sigma))
    };
    let log_like = |mu: f64, sigma: f64| -> f64 {
        (0..bins)
            .map(|k| {
                let e = expected(mu, sigma, k).max(1e-300);
                counts[k] as f64 * e.ln() - e
            })
            .sum()
    };
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    // profile likelihood: optimal mean for each σ, then σ on a log scale
    let best_mu = |sigma: f64| -> (f64, f64) {
        golden_max(|mu| Ok::<_, Error>(log_like(mu, sigma)), mean - sd, mean + sd, 1e-10)
            .expect("infallible objective")
    };
    let (log_sigma, _) = golden_max(
        |ls: f64| Ok::<_, Error>(best_mu(ls.exp()).1),
        (sd / 4.0).ln(),
        (sd * 4.0).ln(),
        1e-12,
    )?;
    let fit_sigma = log_sigma.exp();
    let (fit_mean, _) = best_mu(fit_sigma);
    let (chi2, used) = (0..bins).fold((0.0, 0usize), |(c, u), k| {
        let e = expected(fit_mean, fit_sigma, k);
        if e > 0.0 {
            (c + (counts[k] as f64 - e).powi(2) / e, u + 1)
        } else {
            (c, u)
        }
    });
    Ok(Histogram {
        edges,
        counts,
        fit_mean,
        fit_sigma,
        chi2_dof: chi2 / (used.saturating_sub(2).max(1)) as f64,
    })
}

/// Phase rms expressed as a fraction of the SW period, σ/2π.
pub fn sw_period_fraction(sigma: f64) -> f64 {
    sigma / (2.0 * PI)
}

/// Phase rms expressed as a fraction of the optical wavelength; the SW
/// period is half a wavelength.
pub fn wavelength_fraction(sigma: f64) -> f64 {
    sigma / (4.0 * PI)
}
