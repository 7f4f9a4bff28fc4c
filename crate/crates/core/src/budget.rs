//! Analytic error budget of the SW-MS gate: θ-integrals, single- and
//! two-ion error bounds, the five SW error channels and the suppression of
//! carrier errors by amplitude ramps.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::gate::{bell_fidelity_of, gate_envelope, optimize_rabi, par_map, GateModel, GateSettings};
use crate::error::{Error, Result};
use crate::evolution::PulseEnvelope;
use crate::hamiltonian::{h_sw_ms_exact_with, LocalPhase, PhysParams};
use crate::hilbert::build_space;
use crate::scan::fmt_sci;
use crate::special::{golden_max, gauss_hermite, gaussian_expectation, integrate};

/// Gauss–Hermite order used for the Gaussian moments of the bounds.
const GH_POINTS: usize = 64;

/// Phase accumulated by an error term with scalar time profile `profile`
/// under the envelope: θ = |∫ g(t) profile(t) dt|.
pub fn theta(profile: impl Fn(f64) -> f64, env: &PulseEnvelope) -> Result<f64> {
    env.validate()?;
    let tf = env.t_total;
    // integrand scale from a golden-ratio sample, which cannot alias onto
    // the zeros of a periodic profile the way a uniform grid can
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let scale = (0..=64)
        .map(|k| profile(tf * (k as f64 * golden).fract()).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // split at the ramp joints where g has kinks in its second derivative
    let mut knots = vec![0.0];
    if env.t_ramp > 0.0 {
        knots.push(env.t_ramp);
        knots.push(tf - env.t_ramp);
    }
    knots.push(tf);
    let tol = 1e-12 * scale * tf;
    let sum: f64 = knots
        .windows(2)
        .map(|w| integrate(|t| env.g(t) * profile(t), w[0], w[1], tol))
        .sum();
    Ok(sum.abs())
}

/// Single-ion error of an unwanted rotation by θ: (1 − cos 2θ)/2.
pub fn eps_single(theta: f64) -> f64 {
    (1.0 - (2.0 * theta).cos()) / 2.0
}

/// Two-ion error neglecting cross terms: 1 − cos²θ₁ cos²θ₂.
pub fn eps_two(theta1: f64, theta2: f64) -> f64 {
    1.0 - (theta1.cos() * theta2.cos()).powi(2)
}

/// Var(f(Δφ)) for Δφ ~ N(0, σ²) by Gauss–Hermite quadrature.
pub fn gaussian_var(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m1 = gaussian_expectation(sigma, GH_POINTS, &f);
    let m2 = gaussian_expectation(sigma, GH_POINTS, |x| f(x).powi(2));
    (m2 - m1 * m1).max(0.0)
}

/// Visibility error: ε ≤ 2(ΔΩ/δ)².
pub fn visibility_error(delta_omega: f64, delta: f64) -> f64 {
    2.0 * (delta_omega / delta).powi(2)
}

/// Phase-stability error through the carrier: ε ≤ 2(2Ω/δ)² Var(Δφ/2).
pub fn phase_carrier_error(omega: f64, delta: f64, sigma: f64) -> f64 {
    2.0 * (2.0 * omega / delta).powi(2) * gaussian_var(sigma, |x| x / 2.0)
}

/// Leading-order form of [`phase_carrier_error`]: (2Ω/δ)² σ²/2.
pub fn phase_carrier_error_leading(omega: f64, delta: f64, sigma: f64) -> f64 {
    2.0 * (2.0 * omega / delta).powi(2) * sigma * sigma / 4.0
}

/// Phase-stability error through the sideband modulation:
/// ε ≤ 3(Ωη/δ_g)² Var((Δφ/2)²).
pub fn phase_sideband_error(omega: f64, eta: f64, delta_g: f64, sigma: f64) -> f64 {
    3.0 * (omega * eta / delta_g).powi(2) * gaussian_var(sigma, |x| (x / 2.0).powi(2))
}

/// Leading-order form of [`phase_sideband_error`], using
/// Var((Δφ/2)²) = σ⁴/8 for a Gaussian.
pub fn phase_sideband_error_leading(omega: f64, eta: f64, delta_g: f64, sigma: f64) -> f64 {
    3.0 * (omega * eta / delta_g).powi(2) * sigma.powi(4) / 8.0
}

/// Alternative reading of the sideband bound with (Var(Δφ/2))² = σ⁴/16.
pub fn phase_sideband_error_alt(omega: f64, eta: f64, delta_g: f64, sigma: f64) -> f64 {
    3.0 * (omega * eta / delta_g).powi(2) * (sigma * sigma / 4.0).powi(2)
}

/// Ion-spacing error: ε ≤ (2Ω/δ)² (Δφ_sp/2)².
pub fn spacing_error(omega: f64, delta: f64, dphi_sp: f64) -> f64 {
    (2.0 * omega / delta).powi(2) * (dphi_sp / 2.0).powi(2)
}

/// Bichromatic phase-misalignment error with Δφ_BD = Δφ_RD = Δφ_bi:
/// ε ≤ 4(2Ω/δ)² (Δφ_bi/2)².
pub fn bichromatic_error(omega: f64, delta: f64, dphi_bi: f64) -> f64 {
    4.0 * (2.0 * omega / delta).powi(2) * (dphi_bi / 2.0).powi(2)
}

fn check_envelope_times(t_ramp: f64, t_total: f64) -> Result<PulseEnvelope> {
    if t_ramp > 0.0 {
        PulseEnvelope::ramped(t_ramp, t_total)
    } else {
        PulseEnvelope::square(t_total)
    }
}

/// r = θ_shaped² / θ_square² with both θ integrated for the same profile
/// and total duration.
pub fn shaped_ratio(profile: impl Fn(f64) -> f64, t_ramp: f64, t_total: f64) -> Result<f64> {
    let shaped = check_envelope_times(t_ramp, t_total)?;
    let square = PulseEnvelope::square(t_total)?;
    let ts = theta(&profile, &square)?;
    if ts == 0.0 {
        return Err(Error::Undefined("square-pulse θ vanishes; ratio undefined".into()));
    }
    Ok((theta(&profile, &shaped)? / ts).powi(2))
}

/// Worst-case r for a carrier-like error term oscillating near δ,
/// relative to the square-pulse bound θ_square ≤ 1/δ.
///
/// The shaped spectrum has exact zeros, and a particular δ can land on one
/// (for instance when δ·t_gate/2 is a multiple of π). The result is
/// therefore the largest (δ'|∫g e^{iδ't}dt|)² over δ' within one zero
/// spacing 2π/(t_total − t_ramp) of δ, which makes it insensitive to the
/// exact trap frequency.
pub fn shaped_ratio_worst(delta: f64, t_ramp: f64, t_total: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let shaped = check_envelope_times(t_ramp, t_total)?;
    let at = |d: f64| -> Result<f64> {
        let c = theta(|t| (d * t).cos(), &shaped)?;
        let s = theta(|t| (d * t).sin(), &shaped)?;
        Ok((c * c + s * s) * d * d)
    };
    let half = (2.0 * PI / (t_total - t_ramp)).min(0.5 * delta);
    let n = 32;
    let step = 2.0 * half / n as f64;
    let mut best = (delta, at(delta)?);
    for k in 0..=n {
        let d = delta - half + step * k as f64;
        let v = at(d)?;
        if v > best.1 {
            best = (d, v);
        }
    }
    let (lo, hi) = ((best.0 - step).max(delta - half), (best.0 + step).min(delta + half));
    let (_, refined) = golden_max(at, lo, hi, 1e-9)?;
    Ok(best.1.max(refined))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    VisibilityCarrier,
    PhaseCarrier,
    PhaseSideband,
    IonSpacingCarrier,
    BichromaticMismatch,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::VisibilityCarrier,
        Channel::PhaseCarrier,
        Channel::PhaseSideband,
        Channel::IonSpacingCarrier,
        Channel::BichromaticMismatch,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Channel::VisibilityCarrier => "Visibility carrier",
            Channel::PhaseCarrier => "Phase carrier",
            Channel::PhaseSideband => "Phase sideband",
            Channel::IonSpacingCarrier => "Ion spacing carrier",
            Channel::BichromaticMismatch => "RD/BD phase mismatch",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Channel::VisibilityCarrier => "visibility_carrier",
            Channel::PhaseCarrier => "phase_carrier",
            Channel::PhaseSideband => "phase_sideband",
            Channel::IonSpacingCarrier => "ion_spacing_carrier",
            Channel::BichromaticMismatch => "bichromatic_mismatch",
        }
    }

    /// Whether the error comes from off-resonant carrier coupling, which
    /// amplitude ramps suppress.
    pub fn is_carrier(self) -> bool {
        self != Channel::PhaseSideband
    }

    pub fn unit(self) -> &'static str {
        match self {
            Channel::VisibilityCarrier => "dOmega/Omega",
            _ => "rad",
        }
    }
}

/// Fluctuation magnitudes of the five channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fluctuations {
    /// Relative beam imbalance ΔΩ/Ω.
    pub rabi_imbalance_rel: f64,
    pub sigma_phi: f64,
    pub dphi_sp: f64,
    pub dphi_bi: f64,
}

impl Default for Fluctuations {
    fn default() -> Self {
        Self {
            rabi_imbalance_rel: 0.05,
            sigma_phi: 0.12,
            dphi_sp: 0.033,
            dphi_bi: 0.042,
        }
    }
}

impl Fluctuations {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rabi_imbalance_rel", self.rabi_imbalance_rel),
            ("sigma_phi", self.sigma_phi),
            ("dphi_sp", self.dphi_sp),
            ("dphi_bi", self.dphi_bi),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn magnitude(&self, channel: Channel) -> f64 {
        match channel {
            Channel::VisibilityCarrier => self.rabi_imbalance_rel,
            Channel::PhaseCarrier | Channel::PhaseSideband => self.sigma_phi,
            Channel::IonSpacingCarrier => self.dphi_sp,
            Channel::BichromaticMismatch => self.dphi_bi,
        }
    }
}

/// Square-pulse bound of one channel at drive Ω, detuning δ and gate
/// detuning δ_g.
pub fn channel_bound(channel: Channel, magnitude: f64, omega: f64, eta: f64, delta: f64, delta_g: f64) -> f64 {
    match channel {
        Channel::VisibilityCarrier => visibility_error(magnitude * omega, delta),
        Channel::PhaseCarrier => phase_carrier_error(omega, delta, magnitude),
        Channel::PhaseSideband => phase_sideband_error(omega, eta, delta_g, magnitude),
        Channel::IonSpacingCarrier => spacing_error(omega, delta, magnitude),
        Channel::BichromaticMismatch => bichromatic_error(omega, delta, magnitude),
    }
}

/// How the drive strength 2Ω/δ of the tabulated gate is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingPoint {
    /// Explicit 2Ω/δ.
    Ratio(f64),
    /// 2Ω/δ at which the square-pulse bound of `channel` equals `eps`.
    InvertRow { channel: Channel, eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetInputs {
    pub eta: f64,
    pub omega_z: f64,
    /// Effective gate duration 2π/δ_g in seconds.
    pub t_gate: f64,
    pub t_ramp: f64,
    pub fluctuations: Fluctuations,
    pub operating_point: OperatingPoint,
    /// Optional square-pulse values per channel, in `Channel::ALL` order,
    /// for which the implied 2Ω/δ is reported row by row.
    pub reference_square: Option<Vec<f64>>,
}

impl Default for BudgetInputs {
    fn default() -> Self {
        Self {
            eta: 0.051,
            omega_z: crate::hz(1.2e6),
            t_gate: 15e-6,
            t_ramp: 10e-6,
            fluctuations: Fluctuations::default(),
            operating_point: OperatingPoint::InvertRow {
                channel: Channel::PhaseCarrier,
                eps: 61.0e-4,
            },
            reference_square: None,
        }
    }
}

/// One line of the error budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudgetRow {
    pub source: Channel,
    pub fluctuation: f64,
    pub unit: String,
    pub eps_square: f64,
    pub eps_shaped: f64,
    /// 2Ω/δ implied by the reference value of this row, if given.
    pub implied_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetTable {
    pub rows: Vec<ErrorBudgetRow>,
    pub total_square: f64,
    pub total_shaped: f64,
    /// Operating point 2Ω/δ used for every row.
    pub ratio: f64,
    pub omega: f64,
    pub delta: f64,
    pub delta_g: f64,
    /// Shaped-to-square suppression of carrier errors.
    pub r: f64,
}

/// Evaluates all five channels for a square pulse and for sin² ramps.
/// Carrier rows are multiplied by the worst-case suppression r; the
/// sideband row is left unchanged by shaping.
pub fn budget_table(inputs: &BudgetInputs) -> Result<BudgetTable> {
    inputs.fluctuations.validate()?;
    if !(inputs.t_gate > 0.0) || !(inputs.t_ramp >= 0.0) || !(inputs.eta > 0.0) || !(inputs.omega_z > 0.0) {
        return Err(Error::invalid("budget", "durations, η and ω_z must be positive"));
    }
    let delta_g = 2.0 * PI / inputs.t_gate;
    let delta = inputs.omega_z + delta_g;
    let fl = &inputs.fluctuations;
    let bound_at = |ch: Channel, ratio: f64| channel_bound(ch, fl.magnitude(ch), ratio * delta / 2.0, inputs.eta, delta, delta_g);
    // every bound is ∝ (2Ω/δ)², so inversion is closed form
    let implied = |ch: Channel, eps: f64| -> Option<f64> {
        let unit = bound_at(ch, 1.0);
        (unit > 0.0 && eps >= 0.0).then(|| (eps / unit).sqrt())
    };
    let ratio = match &inputs.operating_point {
        OperatingPoint::Ratio(x) => *x,
        OperatingPoint::InvertRow { channel, eps } => implied(*channel, *eps)
            .ok_or_else(|| Error::invalid("operating_point", "row cannot be inverted at zero fluctuation"))?,
    };
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::invalid("operating_point", "2Ω/δ must be positive"));
    }
    if let Some(r) = &inputs.reference_square {
        if r.len() != Channel::ALL.len() {
            return Err(Error::invalid("reference_square", "need one value per channel"));
        }
    }
    let r = shaped_ratio_worst(delta, inputs.t_ramp, inputs.t_gate + inputs.t_ramp)?;
    let rows: Vec<ErrorBudgetRow> = Channel::ALL
        .iter()
        .enumerate()
        .map(|(i, &ch)| {
            let sq = bound_at(ch, ratio);
            ErrorBudgetRow {
                source: ch,
                fluctuation: fl.magnitude(ch),
                unit: ch.unit().into(),
                eps_square: sq,
                eps_shaped: if ch.is_carrier() { sq * r } else { sq },
                implied_ratio: inputs.reference_square.as_ref().and_then(|v| implied(ch, v[i])),
            }
        })
        .collect();
    Ok(BudgetTable {
        total_square: rows.iter().map(|r| r.eps_square).sum(),
        total_shaped: rows.iter().map(|r| r.eps_shaped).sum(),
        rows,
        ratio,
        omega: ratio * delta / 2.0,
        delta,
        delta_g,
        r,
    })
}

impl BudgetTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,fluctuation,unit,eps_square,eps_shaped,implied_ratio\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.source.key(),
                fmt_sci(row.fluctuation),
                row.unit,
                fmt_sci(row.eps_square),
                fmt_sci(row.eps_shaped),
                row.implied_ratio.map(fmt_sci).unwrap_or_default()
            );
        }
        let _ = writeln!(out, "total,,,{},{},", fmt_sci(self.total_square), fmt_sci(self.total_shaped));
        out
    }

    /// Aligned text rendering with errors in units of 1e-4.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>12} {:>10} {:>10} {:>10}",
            "Error source", "fluctuation", "square", "shaped", "2Ω/δ row"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<22} {:>12} {:>10.2} {:>10.2} {:>10}",
                row.source.label(),
                format!("{:.3} {}", row.fluctuation, if row.unit == "rad" { "rad" } else { "" }),
                row.eps_square * 1e4,
                row.eps_shaped * 1e4,
                row.implied_ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
            );
        }
        let _ = writeln!(
            out,
            "{:<22} {:>12} {:>10.2} {:>10.2}",
            "Total error",
            "",
            self.total_square * 1e4,
            self.total_shaped * 1e4
        );
        let _ = writeln!(
            out,
            "errors in units of 1e-4; operating point 2Ω/δ = {:.4}, r = {:.3e}",
            self.ratio, self.r
        );
        out
    }
}

/// Simulation settings for [`budget_vs_simulation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoundnessSettings {
    /// ω_z/δ_g; the default makes δ·t_f an odd multiple of π/2 so the
    /// square-pulse bounds are attained rather than loose.
    pub omega_z_over_delta_g: f64,
    /// Gauss–Hermite nodes for averaging over Gaussian phase noise.
    pub noise_nodes: usize,
    /// Accepted ratio of simulated error to bound.
    pub margin: f64,
    pub gate: GateSettings,
}

impl Default for SoundnessSettings {
    fn default() -> Self {
        Self {
            omega_z_over_delta_g: 18.25,
            noise_nodes: 10,
            margin: 1.2,
            gate: GateSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SoundnessPoint {
    pub channel: Channel,
    pub magnitude: f64,
    pub eps_bound: f64,
    pub eps_simulated: f64,
    pub omega: f64,
    pub delta: f64,
}

impl SoundnessPoint {
    pub fn ratio(&self) -> f64 {
        if self.eps_bound > 0.0 {
            self.eps_simulated / self.eps_bound
        } else if self.eps_simulated <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Ideal square-pulse SW-MS gate used as the reference of the soundness
/// checks: gate parameters and the optimised Ω.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceGate {
    pub params: PhysParams,
    pub delta_g: f64,
    pub omega: f64,
    pub fidelity: f64,
}

pub fn reference_gate(params: &PhysParams, settings: &SoundnessSettings) -> Result<ReferenceGate> {
    if !(settings.omega_z_over_delta_g > 1.0) {
        return Err(Error::invalid("omega_z_over_delta_g", "must exceed 1"));
    }
    let delta_g = params.omega_z / settings.omega_z_over_delta_g;
    let ideal = PhysParams {
        n_ions: 2,
        phi1: 0.0,
        phi2: 0.0,
        dphi_bd: 0.0,
        dphi_rd: 0.0,
        dphi_sp: 0.0,
        rabi_imbalance: 0.0,
        ..params.clone()
    };
    let env = gate_envelope(delta_g, 0.0)?;
    let best = optimize_rabi(GateModel::SwMs, &ideal, delta_g, &env, &settings.gate)?;
    Ok(ReferenceGate {
        params: PhysParams {
            omega_rabi: best.omega_star,
            delta: params.omega_z + delta_g,
            ..ideal
        },
        delta_g,
        omega: best.omega_star,
        fidelity: best.fidelity,
    })
}

/// Injects one imperfection into the exact square-pulse SW-MS gate and
/// compares the added infidelity F_ideal − F with the analytic bound. Only
/// the channel's own term is perturbed: phase noise enters either the
/// carrier or the sideband part of the SW, not both.
pub fn budget_vs_simulation(
    channel: Channel,
    magnitude: f64,
    reference: &ReferenceGate,
    settings: &SoundnessSettings,
) -> Result<SoundnessPoint> {
    if !(magnitude >= 0.0) {
        return Err(Error::invalid("magnitude", "must be non-negative"));
    }
    let p = &reference.params;
    let space = build_space(2, settings.gate.fock_cutoff)?;
    let env = gate_envelope(reference.delta_g, 0.0)?;
    let cfg = &settings.gate.integrator;
    let zero = LocalPhase::uniform(0.0);
    let fidelity = |p: &PhysParams, blue: [LocalPhase; 2], red: [LocalPhase; 2]| -> Result<f64> {
        let h = h_sw_ms_exact_with(p, space, &blue, &red)?;
        bell_fidelity_of(&h, &env, cfg).map(|(f, _)| f)
    };
    let carrier = |d: f64| LocalPhase { sideband: 0.0, carrier: d };
    let sideband = |d: f64| LocalPhase { sideband: d, carrier: 0.0 };
    // Gaussian average over a common phase error on both ions and tones
    let noise_average = |phase: &(dyn Fn(f64) -> LocalPhase + Sync)| -> Result<f64> {
        if magnitude == 0.0 {
            return fidelity(p, [phase(0.0); 2], [phase(0.0); 2]);
        }
        let (x, w) = gauss_hermite(settings.noise_nodes.max(2));
        let s = std::f64::consts::SQRT_2 * magnitude;
        let nodes: Vec<f64> = x.iter().map(|xi| s * xi).collect();
        let values = par_map(&nodes, |d| fidelity(p, [phase(d); 2], [phase(d); 2]))?;
        Ok(values.iter().zip(&w).map(|(f, wi)| f * wi).sum::<f64>() / PI.sqrt())
    };
    let f = match channel {
        Channel::VisibilityCarrier => {
            let q = PhysParams {
                rabi_imbalance: magnitude * p.omega_rabi,
                ..p.clone()
            };
            fidelity(&q, [zero; 2], [zero; 2])?
        }
        Channel::PhaseCarrier => noise_average(&carrier)?,
        Channel::PhaseSideband => noise_average(&sideband)?,
        Channel::IonSpacingCarrier => {
            let ph = [zero, carrier(magnitude)];
            fidelity(p, ph, ph)?
        }
        Channel::BichromaticMismatch => fidelity(p, [carrier(magnitude); 2], [carrier(magnitude); 2])?,
    };
    let eps_bound = channel_bound(channel, magnitude, p.omega_rabi, p.eta, p.delta, reference.delta_g);
    Ok(SoundnessPoint {
        channel,
        magnitude,
        eps_bound,
        eps_simulated: (reference.fidelity - f).max(0.0),
        omega: p.omega_rabi,
        delta: p.delta,
    })
}

/// Runs [`budget_vs_simulation`] and turns a bound violation beyond the
/// accepted margin into an error.
pub fn check_bound(channel: Channel, magnitude: f64, reference: &ReferenceGate, settings: &SoundnessSettings) -> Result<SoundnessPoint> {
    let point = budget_vs_simulation(channel, magnitude, reference, settings)?;
    if point.eps_simulated > settings.margin * point.eps_bound {
        return Err(Error::BoundViolation {
            channel: channel.key().into(),
            bound: point.eps_bound,
            simulated: point.eps_simulated,
            margin: settings.margin,
        });
    }
    Ok(point)
}
