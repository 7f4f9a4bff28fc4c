//! Interaction Hamiltonians for traveling-wave (TW) and standing-wave (SW)
//! drives, monochromatic and bichromatic, exact and Lamb-Dicke truncated.
//!
//! Every model is stored as a sum of tones in a frame rotating with the
//! motional mode:
//!
//! H(t) = D(t) [ Σ_ν e^{−iνt} M_ν + h.c. ] D(t)†,   D(t) = 𝟙 ⊗ e^{iω_z t â†â}
//!
//! so that D(t) f(η(â + â†)) D(t)† = f(η(âe^{−iω_z t} + â†e^{iω_z t})) holds
//! exactly for any operator function f.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{collective_spin, embed_single_spin, pauli, OperatorMatrix, Quadrature, SpaceDescriptor};
use crate::special::{bessel_j, golden_max};

/// Physical parameters shared by all interaction models. Frequencies are
/// angular (rad/s), phases in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysParams {
    pub eta: f64,
    pub omega_z: f64,
    pub delta: f64,
    pub omega_rabi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub n_ions: usize,
    pub dphi_bd: f64,
    pub dphi_rd: f64,
    pub rabi_imbalance: f64,
    pub dphi_sp: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            eta: 0.051,
            omega_z: crate::hz(1.2e6),
            delta: 0.0,
            omega_rabi: 0.0,
            phi1: 0.0,
            phi2: 0.0,
            n_ions: 1,
            dphi_bd: 0.0,
            dphi_rd: 0.0,
            rabi_imbalance: 0.0,
            dphi_sp: 0.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("eta", self.eta),
            ("omega_z", self.omega_z),
            ("delta", self.delta),
            ("omega_rabi", self.omega_rabi),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
            ("dphi_bd", self.dphi_bd),
            ("dphi_rd", self.dphi_rd),
            ("rabi_imbalance", self.rabi_imbalance),
            ("dphi_sp", self.dphi_sp),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::invalid(
                "eta",
                format!("{} is outside the Lamb-Dicke range (0, 0.5]", self.eta),
            ));
        }
        if self.omega_z <= 0.0 {
            return Err(Error::invalid("omega_z", "must be positive"));
        }
        if self.omega_rabi < 0.0 {
            return Err(Error::invalid("omega_rabi", "must be non-negative"));
        }
        if !(1..=2).contains(&self.n_ions) {
            return Err(Error::invalid("n_ions", "must be 1 or 2"));
        }
        Ok(())
    }

    /// Δφ = φ₁ − φ₂
    pub fn dphi(&self) -> f64 {
        self.phi1 - self.phi2
    }

    /// φ̃ = (φ₁ + φ₂ + π)/2
    pub fn tilde_phi(&self) -> f64 {
        (self.phi1 + self.phi2 + PI) / 2.0
    }

    /// Sets φ₁, φ₂ so that Δφ takes the given value with φ₁ + φ₂ unchanged.
    pub fn with_dphi(&self, dphi: f64) -> Self {
        let sum = self.phi1 + self.phi2;
        Self {
            phi1: (sum + dphi) / 2.0,
            phi2: (sum - dphi) / 2.0,
            ..self.clone()
        }
    }

    fn check_space(&self, space: SpaceDescriptor) -> Result<()> {
        self.validate()?;
        if space.n_ions() != self.n_ions {
            return Err(Error::SpaceMismatch(format!(
                "parameters describe {} ion(s), space has {}",
                self.n_ions,
                space.n_ions()
            )));
        }
        Ok(())
    }
}

/// One frequency component: contributes e^{−iνt} M + e^{iνt} M† to the
/// rotating-frame operator.
#[derive(Clone, Debug)]
pub struct Tone {
    pub freq: f64,
    pub matrix: DMatrix<C64>,
}

type Rebuild = Arc<dyn Fn(SpaceDescriptor) -> Result<TimedOperator> + Send + Sync>;

/// A Hermitian operator-valued function of time on spin ⊗ motion.
#[derive(Clone)]
pub struct TimedOperator {
    space: SpaceDescriptor,
    omega_z: f64,
    tones: Vec<Tone>,
    adjoints: Vec<DMatrix<C64>>,
    rate: f64,
    rebuild: Option<Rebuild>,
}

impl std::fmt::Debug for TimedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimedOperator")
            .field("space", &self.space)
            .field("omega_z", &self.omega_z)
            .field("tones", &self.tones.iter().map(|t| t.freq).collect::<Vec<_>>())
            .field("rate", &self.rate)
            .finish()
    }
}

impl TimedOperator {
    /// Builds an operator from explicit tones. `rate` is the fastest
    /// dynamical rate (rad/s) used to pick an initial time step.
    pub fn from_tones(space: SpaceDescriptor, omega_z: f64, tones: Vec<Tone>, rate: f64) -> Result<Self> {
        for t in &tones {
            if t.matrix.nrows() != space.dim() || t.matrix.ncols() != space.dim() {
                return Err(Error::SpaceMismatch("tone matrix does not match the space".into()));
            }
        }
        let mut merged: Vec<Tone> = Vec::new();
        for t in tones {
            match merged.iter_mut().find(|m| m.freq == t.freq) {
                Some(m) => m.matrix += t.matrix,
                None => merged.push(t),
            }
        }
        let adjoints = merged.iter().map(|t| t.matrix.adjoint()).collect();
        Ok(Self {
            space,
            omega_z,
            tones: merged,
            adjoints,
            rate,
            rebuild: None,
        })
    }

    /// The zero operator.
    pub fn zero(space: SpaceDescriptor) -> Self {
        let rebuild: Rebuild = Arc::new(|s| Ok(TimedOperator::zero(s)));
        Self {
            space,
            omega_z: 0.0,
            tones: Vec::new(),
            adjoints: Vec::new(),
            rate: 0.0,
            rebuild: Some(rebuild),
        }
    }

    fn with_rebuild(mut self, rebuild: Rebuild) -> Self {
        self.rebuild = Some(rebuild);
        self
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn omega_z(&self) -> f64 {
        self.omega_z
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    /// Fastest rate in the problem, max(ω_z, |ν|, ‖M‖), in rad/s.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Rebuilds the same physical model on a space with a different cutoff.
    pub fn rebuild(&self, fock_cutoff: usize) -> Option<Result<TimedOperator>> {
        let space = match self.space.with_cutoff(fock_cutoff) {
            Ok(s) => s,
            Err(e) => return Some(Err(e)),
        };
        self.rebuild.as_ref().map(|f| f(space))
    }

    /// Sum of two operators on the same space.
    pub fn plus(&self, other: &TimedOperator) -> Result<TimedOperator> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("operands on different spaces".into()));
        }
        if !self.tones.is_empty() && !other.tones.is_empty() && self.omega_z != other.omega_z {
            return Err(Error::invalid("omega_z", "operands use different mode frequencies"));
        }
        let omega_z = if self.tones.is_empty() { other.omega_z } else { self.omega_z };
        let tones = self.tones.iter().chain(other.tones.iter()).cloned().collect();
        let out = TimedOperator::from_tones(self.space, omega_z, tones, self.rate.max(other.rate))?;
        Ok(match (&self.rebuild, &other.rebuild) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                out.with_rebuild(Arc::new(move |s| a(s)?.plus(&b(s)?)))
            }
            _ => out,
        })
    }

    /// H(t) as a dense matrix.
    pub fn eval(&self, t: f64) -> OperatorMatrix {
        let mut out = DMatrix::zeros(self.space.dim(), self.space.dim());
        self.accumulate(t, 1.0, &mut out);
        OperatorMatrix::new(self.space, out).expect("shape is fixed by construction")
    }

    /// out += weight · H(t)
    pub(crate) fn accumulate(&self, t: f64, weight: f64, out: &mut DMatrix<C64>) {
        if self.tones.is_empty() || weight == 0.0 {
            return;
        }
        let dim = self.space.dim();
        let m = self.space.mode_dim();
        let frame: Vec<C64> = (0..m)
            .map(|n| C64::from_polar(1.0, self.omega_z * t * n as f64))
            .collect();
        let coeffs: Vec<C64> = self
            .tones
            .iter()
            .map(|tone| C64::from_polar(weight, -tone.freq * t))
            .collect();
        let out = out.as_mut_slice();
        // column-major traversal
        for c in 0..dim {
            let pc = frame[c % m].conj();
            for r in 0..dim {
                let idx = c * dim + r;
                let mut k = C64::new(0.0, 0.0);
                for (i, coeff) in coeffs.iter().enumerate() {
                    let a = self.tones[i].matrix.as_slice()[idx];
                    let b = self.adjoints[i].as_slice()[idx];
                    if a != C64::new(0.0, 0.0) || b != C64::new(0.0, 0.0) {
                        k += coeff * a + coeff.conj() * b;
                    }
                }
                if k != C64::new(0.0, 0.0) {
                    out[idx] += frame[r % m] * k * pc;
                }
            }
        }
    }
}

/// Phases seen by one ion of a standing-wave tone: `sideband` enters the
/// sin(ηX) term and `carrier` the cos(ηX) term. Physically both equal the
/// local Δφ; separating them isolates a single error channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalPhase {
    pub sideband: f64,
    pub carrier: f64,
}

impl LocalPhase {
    pub fn uniform(dphi: f64) -> Self {
        Self {
            sideband: dphi,
            carrier: dphi,
        }
    }
}

struct ModeFunctions {
    exp_plus: DMatrix<C64>,
    sin: DMatrix<C64>,
    cos: DMatrix<C64>,
    x: DMatrix<C64>,
    id: DMatrix<C64>,
}

impl ModeFunctions {
    fn new(space: SpaceDescriptor, eta: f64) -> Self {
        let m = space.mode_dim();
        let q = Quadrature::new(m);
        let a = crate::hilbert::annihilation(m);
        Self {
            exp_plus: q.function(eta, |v| C64::from_polar(1.0, v)),
            sin: q.function(eta, |v| C64::new(v.sin(), 0.0)),
            cos: q.function(eta, |v| C64::new(v.cos(), 0.0)),
            x: &a + a.adjoint(),
            id: DMatrix::identity(m, m),
        }
    }
}

fn single_plus(space: SpaceDescriptor, ion: usize) -> DMatrix<C64> {
    embed_single_spin(space.n_ions(), ion, &pauli::plus())
}

fn base_rate(p: &PhysParams) -> f64 {
    p.omega_z.max(p.delta.abs()).max(p.omega_rabi)
}

/// Phases for each ion of a monochromatic SW: ion 2 sees the spacing offset.
fn ion_phases(p: &PhysParams, extra: f64) -> Vec<LocalPhase> {
    (0..p.n_ions)
        .map(|i| LocalPhase::uniform(p.dphi() + extra + if i == 1 { p.dphi_sp } else { 0.0 }))
        .collect()
}

/// Rotating-frame matrix of one exact SW tone (coefficient of e^{−iνt}).
fn sw_exact_matrix(
    space: SpaceDescriptor,
    f: &ModeFunctions,
    p: &PhysParams,
    phases: &[LocalPhase],
) -> DMatrix<C64> {
    let tp = p.tilde_phi();
    let main = C64::from_polar(p.omega_rabi, tp);
    let imbalance = C64::from_polar(p.rabi_imbalance / 2.0, tp - FRAC_PI_2);
    let mut out = DMatrix::zeros(space.dim(), space.dim());
    for (ion, ph) in phases.iter().enumerate() {
        let (ss, cs) = (ph.sideband / 2.0).sin_cos();
        let sc = (ph.carrier / 2.0).sin();
        let mut mode = (&f.sin * C64::new(cs, 0.0) + &f.cos * C64::new(sc, 0.0)) * main;
        if p.rabi_imbalance != 0.0 {
            mode += (&f.cos * C64::new(cs, 0.0) - &f.sin * C64::new(ss, 0.0)) * imbalance;
        }
        out += single_plus(space, ion).kronecker(&mode);
    }
    out
}

/// Rotating-frame matrix of one Lamb-Dicke SW tone.
fn sw_ld_matrix(space: SpaceDescriptor, f: &ModeFunctions, p: &PhysParams, phases: &[LocalPhase]) -> DMatrix<C64> {
    let tp = p.tilde_phi();
    let main = C64::from_polar(p.omega_rabi, tp);
    let imbalance = C64::from_polar(p.rabi_imbalance / 2.0, tp - FRAC_PI_2);
    let mut out = DMatrix::zeros(space.dim(), space.dim());
    for (ion, ph) in phases.iter().enumerate() {
        let (ss, cs) = (ph.sideband / 2.0).sin_cos();
        let sc = (ph.carrier / 2.0).sin();
        let mut mode = (&f.x * C64::new(p.eta * cs, 0.0) + &f.id * C64::new(sc, 0.0)) * main;
        if p.rabi_imbalance != 0.0 {
            mode += (&f.id * C64::new(cs, 0.0) - &f.x * C64::new(p.eta * ss, 0.0)) * imbalance;
        }
        out += single_plus(space, ion).kronecker(&mode);
    }
    out
}

/// Monochromatic traveling wave,
/// (Ω/2) e^{i(φ₁ + ηX(t) − δt)} Ŝ₊ + h.c., with the exponential evaluated exactly.
pub fn h_tw(params: &PhysParams, space: SpaceDescriptor) -> Result<TimedOperator> {
    params.check_space(space)?;
    let f = ModeFunctions::new(space, params.eta);
    let spin = collective_spin(space.n_ions(), &pauli::plus());
    let m = spin.kronecker(&f.exp_plus) * C64::from_polar(params.omega_rabi / 2.0, params.phi1);
    let op = TimedOperator::from_tones(
        space,
        params.omega_z,
        vec![Tone {
            freq: params.delta,
            matrix: m,
        }],
        base_rate(params),
    )?;
    let p = params.clone();
    Ok(op.with_rebuild(Arc::new(move |s| h_tw(&p, s))))
}

/// Monochromatic standing wave in the exact sine form. Beam b₁ carries
/// Ω + ΔΩ/2 and b₂ carries Ω − ΔΩ/2; ion 2 sees Δφ + Δφ_sp.
pub fn h_sw_exact(params: &PhysParams, space: SpaceDescriptor) -> Result<TimedOperator> {
    params.check_space(space)?;
    let phases = ion_phases(params, 0.0);
    h_sw_exact_with(params, space, &phases)
}

/// Exact monochromatic SW with explicit per-ion phases.
pub fn h_sw_exact_with(params: &PhysParams, space: SpaceDescriptor, phases: &[LocalPhase]) -> Result<TimedOperator> {
    params.check_space(space)?;
    if phases.len() != space.n_ions() {
        return Err(Error::invalid("phases", "need one entry per ion"));
    }
    let f = ModeFunctions::new(space, params.eta);
    let m = sw_exact_matrix(space, &f, params, phases);
    let op = TimedOperator::from_tones(
        space,
        params.omega_z,
        vec![Tone {
            freq: params.delta,
            matrix: m,
        }],
        base_rate(params),
    )?;
    let (p, ph) = (params.clone(), phases.to_vec());
    Ok(op.with_rebuild(Arc::new(move |s| h_sw_exact_with(&p, s, &ph))))
}

/// Monochromatic SW truncated at first order in η.
pub fn h_sw_ld(params: &PhysParams, space: SpaceDescriptor) -> Result<TimedOperator> {
    params.check_space(space)?;
    let f = ModeFunctions::new(space, params.eta);
    let m = sw_ld_matrix(space, &f, params, &ion_phases(params, 0.0));
    let op = TimedOperator::from_tones(
        space,
        params.omega_z,
        vec![Tone {
            freq: params.delta,
            matrix: m,
        }],
        base_rate(params),
    )?;
    let p = params.clone();
    Ok(op.with_rebuild(Arc::new(move |s| h_sw_ld(&p, s))))
}

/// Bichromatic TW in the Lamb-Dicke form
/// ηΩ Ŝ_φ cos(δt) X(t) + Ω Ŝ_{φ−π/2} cos(δt).
pub fn h_tw_ms(params: &PhysParams, space: SpaceDescriptor, phi: f64) -> Result<TimedOperator> {
    params.check_space(space)?;
    let f = ModeFunctions::new(space, params.eta);
    let n = space.n_ions();
    let sdf = collective_spin(n, &pauli::phi(phi)).kronecker(&f.x) * C64::new(params.eta * params.omega_rabi, 0.0);
    let carrier = collective_spin(n, &pauli::phi(phi - FRAC_PI_2)).kronecker(&f.id) * C64::new(params.omega_rabi, 0.0);
    // cos(δt) K = e^{−iδt} K/2 + h.c. for Hermitian K
    let m = (sdf + carrier) * C64::new(0.5, 0.0);
    let op = TimedOperator::from_tones(
        space,
        params.omega_z,
        vec![Tone {
            freq: params.delta,
            matrix: m,
        }],
        base_rate(params),
    )?;
    let p = params.clone();
    Ok(op.with_rebuild(Arc::new(move |s| h_tw_ms(&p, s, phi))))
}

/// Bichromatic TW built from two exact TW tones at ±δ, each with Rabi
/// frequency Ω and optical phase φ − π/2.
pub fn h_tw_ms_exact(params: &PhysParams, space: SpaceDescriptor, phi: f64) -> Result<TimedOperator> {
    params.check_space(space)?;
    let tone = PhysParams {
        phi1: phi - FRAC_PI_2,
        ..params.clone()
    };
    let blue = h_tw(
        &PhysParams {
            delta: params.delta,
            ..tone.clone()
        },
        space,
    )?;
    let red = h_tw(
        &PhysParams {
            delta: -params.delta,
            ..tone
        },
        space,
    )?;
    let op = blue.plus(&red)?;
    let p = params.clone();
    Ok(op.with_rebuild(Arc::new(move |s| h_tw_ms_exact(&p, s, phi))))
}

/// Bichromatic SW in the Lamb-Dicke form
/// 2ηΩ Ŝ_φ̃ cos(δt) X(t) cos(Δφ/2) + 2Ω Ŝ_φ̃ cos(δt) sin(Δφ/2).
pub fn h_sw_ms(params: &PhysParams, space: SpaceDescriptor) -> Result<TimedOperator> {
    params.check_space(space)?;
    let f = ModeFunctions::new(space, params.eta);
    let n = space.n_ions();
    let s = collective_spin(n, &pauli::phi(params.tilde_phi()));
    let (sn, cs) = (params.dphi() / 2.0).sin_cos();
    let mode = &f.x * C64::new(2.0 * params.eta * params.omega_rabi * cs, 0.0)
        + &f.id * C64::new(2.0 * params.omega_rabi * sn, 0.0);
    let m = s.kronecker(&mode) * C64::new(0.5, 0.0);
    let op = TimedOperator::from_tones(
        space,
        params.omega_z,
        vec![Tone {
            freq: params.delta,
            matrix: m,
        }],
        base_rate(params),
    )?;
    let p = params.clone();
    Ok(op.with_rebuild(Arc::new(move |s| h_sw_ms(&p, s))))
}

/// Bichromatic SW from two exact SW tones: the blue tone at +δ sees
/// Δφ + Δφ_BD, the red tone at −δ sees Δφ + Δφ_RD.
pub fn h_sw_ms_exact(params: &PhysParams, space: SpaceDescriptor) -> Result<TimedOperator> {
    params.check_space(space)?;
    let bd = ion_phases(params, params.dphi_bd);
    let rd = ion_phases(params, params.dphi_rd);
    h_sw_ms_exact_with(params, space, &bd, &rd)
}

/// Exact bichromatic SW with explicit per-ion phases for each tone.
pub fn h_sw_ms_exact_with(
    params: &PhysParams,
    space: SpaceDescriptor,
    blue: &[LocalPhase],
    red: &[LocalPhase],
) -> Result<TimedOperator> {
    params.check_space(space)?;
    if blue.len() != space.n_ions() || red.len() != space.n_ions() {
        return Err(Error::invalid("phases", "need one entry per ion"));
    }
    let f = ModeFunctions::new(space, params.eta);
    let tones = vec![
        Tone {
            freq: params.delta,
            matrix: sw_exact_matrix(space, &f, params, blue),
        },
        Tone {
            freq: -params.delta,
            matrix: sw_exact_matrix(space, &f, params, red),
        },
    ];
    let op = TimedOperator::from_tones(space, params.omega_z, tones, base_rate(params))?;
    let (p, b, r) = (params.clone(), blue.to_vec(), red.to_vec());
    Ok(op.with_rebuild(Arc::new(move |s| h_sw_ms_exact_with(&p, s, &b, &r))))
}

/// Interaction-picture SDF magnitude of a bichromatic TW,
/// Ω_SDF = ηΩ [J₀(2Ω/δ) + J₂(2Ω/δ)].
pub fn sdf_analytic(eta: f64, omega_rabi: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    let x = 2.0 * omega_rabi / delta;
    Ok(eta * omega_rabi * (bessel_j(0, x) + bessel_j(2, x)))
}

/// Location x* = 2Ω/δ of the global SDF maximum, the first maximum of J₁.
pub fn sdf_peak_x() -> f64 {
    golden_max(|x| Ok::<_, ()>(bessel_j(1, x)), 1.0, 2.5, 1e-12)
        .map(|(x, _)| x)
        .unwrap_or(1.841_183_781_340_659)
}

/// Largest SDF a bichromatic TW can produce at detuning δ: ηδ J₁(x*).
pub fn sdf_tw_max(eta: f64, delta: f64) -> f64 {
    eta * delta * bessel_j(1, sdf_peak_x())
}

/// Smallest Ω giving a TW SDF of `target`, or `None` above the speed limit.
pub fn invert_tw_sdf(target: f64, eta: f64, delta: f64) -> Option<f64> {
    if target <= 0.0 {
        return Some(0.0);
    }
    let xs = sdf_peak_x();
    if target > sdf_tw_max(eta, delta) {
        return None;
    }
    // Ω_SDF = ηδ J₁(x) rises monotonically on [0, x*]
    let x = crate::special::bisect(|x| eta * delta * bessel_j(1, x) - target, 0.0, xs, 1e-14)?;
    Some(x * delta / 2.0)
}
