//! Time-dependent Schrödinger integration with amplitude pulse shaping,
//! step-halving convergence control and automatic Fock-cutoff growth.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::TimedOperator;
use crate::hilbert::{OperatorMatrix, SpaceDescriptor, StateVector};

/// Population allowed in the two highest retained Fock levels.
pub const TRUNCATION_LIMIT: f64 = 1e-8;
/// Fock levels added each time the truncation limit is exceeded.
pub const CUTOFF_GROWTH: usize = 10;
const MAX_GROWTHS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeShape {
    Sin2Ramp,
    Square,
}

/// Amplitude envelope g(t): sin² ramps of length `t_ramp` at both ends of a
/// pulse of total length `t_total`, or a square pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEnvelope {
    pub t_ramp: f64,
    pub t_total: f64,
    pub shape: EnvelopeShape,
}

impl PulseEnvelope {
    pub fn new(t_ramp: f64, t_total: f64, shape: EnvelopeShape) -> Result<Self> {
        let env = Self { t_ramp, t_total, shape };
        env.validate()?;
        Ok(env)
    }

    pub fn square(t_total: f64) -> Result<Self> {
        Self::new(0.0, t_total, EnvelopeShape::Square)
    }

    pub fn ramped(t_ramp: f64, t_total: f64) -> Result<Self> {
        Self::new(t_ramp, t_total, EnvelopeShape::Sin2Ramp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_total.is_finite() && self.t_total > 0.0) {
            return Err(Error::invalid("t_total", "must be positive"));
        }
        if !(self.t_ramp >= 0.0 && 2.0 * self.t_ramp <= self.t_total * (1.0 + 1e-12)) {
            return Err(Error::invalid("t_ramp", "need 0 <= 2 t_ramp <= t_total"));
        }
        Ok(())
    }

    /// g(t) without range checking; zero outside [0, t_total].
    pub fn g(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.t_total {
            return 0.0;
        }
        match self.shape {
            EnvelopeShape::Square => 1.0,
            EnvelopeShape::Sin2Ramp => {
                let tr = self.t_ramp;
                if tr == 0.0 {
                    1.0
                } else if t < tr {
                    (PI * t / (2.0 * tr)).sin().powi(2)
                } else if t > self.t_total - tr {
                    (PI * (self.t_total - t) / (2.0 * tr)).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }
}

/// Envelope value at `t`, rejecting times outside the pulse.
pub fn envelope(t: f64, env: &PulseEnvelope) -> Result<f64> {
    if !(0.0..=env.t_total).contains(&t) {
        return Err(Error::invalid("t", format!("{t} lies outside [0, {}]", env.t_total)));
    }
    Ok(env.g(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exponential midpoint rule (second-order Magnus).
    Midpoint,
    /// Fourth-order commutator-free Magnus integrator with two exponentials.
    Magnus4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Initial step in seconds; derived from `steps_per_period` when absent.
    pub dt_init: Option<f64>,
    /// Steps per period of the fastest rate when `dt_init` is absent.
    pub steps_per_period: f64,
    pub tol: f64,
    pub max_refinements: usize,
    pub scheme: Scheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_init: None,
            steps_per_period: 200.0,
            tol: 1e-8,
            max_refinements: 6,
            scheme: Scheme::Magnus4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt_init {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt_init", "must be positive"));
            }
        }
        if !(self.steps_per_period >= 1.0) {
            return Err(Error::invalid("steps_per_period", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        Ok(())
    }

    /// Initial step for `h`: (2π / max(rate, 2π·1 Hz)) / steps_per_period.
    pub fn initial_step(&self, h: &TimedOperator) -> f64 {
        self.dt_init
            .unwrap_or_else(|| 2.0 * PI / h.rate().max(2.0 * PI) / self.steps_per_period)
    }
}

/// Diagnostics of an accepted integration.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvolutionStats {
    pub steps: usize,
    pub dt: f64,
    pub refinements: usize,
    /// Step-halving change of the accepted result.
    pub last_change: f64,
    /// Largest |‖ψ‖ − 1| over all accepted steps.
    pub norm_drift: f64,
    pub top_population: f64,
    pub fock_cutoff: usize,
}

#[derive(Clone, Debug)]
pub struct Evolved {
    pub state: StateVector,
    pub stats: EvolutionStats,
}

const C_ZERO: C64 = C64::new(0.0, 0.0);

/// y = A x for column-major square A.
fn matvec(a: &[C64], x: &[C64], y: &mut [C64]) {
    let n = x.len();
    y.iter_mut().for_each(|v| *v = C_ZERO);
    for (c, &xc) in x.iter().enumerate() {
        if xc == C_ZERO {
            continue;
        }
        let col = &a[c * n..(c + 1) * n];
        for (yr, &ar) in y.iter_mut().zip(col) {
            *yr += ar * xc;
        }
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scratch buffers reused across steps.
struct Workspace {
    gen: DMatrix<C64>,
    ha: DMatrix<C64>,
    hb: DMatrix<C64>,
    term: Vec<C64>,
    next: Vec<C64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            gen: DMatrix::zeros(dim, dim),
            ha: DMatrix::zeros(dim, dim),
            hb: DMatrix::zeros(dim, dim),
            term: vec![C_ZERO; dim],
            next: vec![C_ZERO; dim],
        }
    }
}

/// ψ ← exp(−i h A) ψ by a truncated Taylor series, sub-stepping so each
/// piece has ‖hA‖₁ ≤ 1.
fn expm_apply(a: &DMatrix<C64>, h: f64, psi: &mut [C64], term: &mut Vec<C64>, next: &mut Vec<C64>) {
    let norm = one_norm(a) * h.abs();
    if norm == 0.0 {
        return;
    }
    let pieces = norm.ceil().max(1.0) as usize;
    let hs = h / pieces as f64;
    let a = a.as_slice();
    for _ in 0..pieces {
        term.copy_from_slice(psi);
        for k in 1..40 {
            matvec(a, term, next);
            let f = C64::new(0.0, -hs / k as f64);
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(next.iter()) {
                *t = n * f;
                size += t.norm_sqr();
            }
            for (p, t) in psi.iter_mut().zip(term.iter()) {
                *p += t;
            }
            if size < 1e-34 {
                break;
            }
        }
    }
}

const C1: f64 = 0.5 - 0.288_675_134_594_812_9; // 1/2 − √3/6
const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
const A1: f64 = 0.25 + 0.288_675_134_594_812_9; // 1/4 + √3/6
const A2: f64 = 0.25 - 0.288_675_134_594_812_9;

/// Advances each column in `states` from t0 to t0 + n·dt.
fn run_fixed(
    h: &TimedOperator,
    env: &PulseEnvelope,
    scheme: Scheme,
    t0: f64,
    dt: f64,
    n: usize,
    states: &mut [Vec<C64>],
) -> f64 {
    let dim = h.space().dim();
    let mut ws = Workspace::new(dim);
    let mut drift: f64 = 0.0;
    let norms0: Vec<f64> = states
        .iter()
        .map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    for step in 0..n {
        let t = t0 + step as f64 * dt;
        match scheme {
            Scheme::Midpoint => {
                let tm = t + 0.5 * dt;
                ws.gen.fill(C_ZERO);
                h.accumulate(tm, env.g(tm), &mut ws.gen);
                for s in states.iter_mut() {
                    expm_apply(&ws.gen, dt, s, &mut ws.term, &mut ws.next);
                }
            }
            Scheme::Magnus4 => {
                let (ta, tb) = (t + C1 * dt, t + C2 * dt);
                ws.ha.fill(C_ZERO);
                ws.hb.fill(C_ZERO);
                h.accumulate(ta, env.g(ta), &mut ws.ha);
                h.accumulate(tb, env.g(tb), &mut ws.hb);
                ws.gen.zip_zip_apply(&ws.ha, &ws.hb, |g, a, b| *g = a * A1 + b * A2);
                for s in states.iter_mut() {
                    expm_apply(&ws.gen, dt, s, &mut ws.term, &mut ws.next);
                }
                ws.gen.zip_zip_apply(&ws.ha, &ws.hb, |g, a, b| *g = a * A2 + b * A1);
                for s in states.iter_mut() {
                    expm_apply(&ws.gen, dt, s, &mut ws.term, &mut ws.next);
                }
            }
        }
        for (s, n0) in states.iter().zip(&norms0) {
            let norm = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            drift = drift.max((norm - n0).abs());
        }
    }
    drift
}

fn steps_for(t_total: f64, dt: f64) -> usize {
    ((t_total / dt).ceil() as usize).max(1)
}

/// Integrates once with a fixed number of uniform steps, without
/// convergence control or truncation checks.
pub fn evolve_fixed(
    h: &TimedOperator,
    env: &PulseEnvelope,
    psi0: &StateVector,
    steps: usize,
    scheme: Scheme,
) -> Result<StateVector> {
    check_inputs(h, env, psi0.space())?;
    let mut s = vec![psi0.as_slice().to_vec()];
    let dt = env.t_total / steps.max(1) as f64;
    run_fixed(h, env, scheme, 0.0, dt, steps.max(1), &mut s);
    Ok(StateVector::from_vec(psi0.space(), s.pop().expect("one column")))
}

fn check_inputs(h: &TimedOperator, env: &PulseEnvelope, space: SpaceDescriptor) -> Result<()> {
    env.validate()?;
    if h.space() != space {
        return Err(Error::SpaceMismatch("Hamiltonian and state live on different spaces".into()));
    }
    Ok(())
}

fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    // 2-norm of the difference for each column, max over columns
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Step-halving loop shared by `evolve` and `propagator`.
fn converge(
    h: &TimedOperator,
    env: &PulseEnvelope,
    cfg: &IntegratorConfig,
    init: &[Vec<C64>],
) -> Result<(Vec<Vec<C64>>, EvolutionStats)> {
    cfg.validate()?;
    let mut steps = steps_for(env.t_total, cfg.initial_step(h));
    let run = |steps: usize| {
        let mut s = init.to_vec();
        let dt = env.t_total / steps as f64;
        let drift = run_fixed(h, env, cfg.scheme, 0.0, dt, steps, &mut s);
        (s, drift)
    };
    let (mut coarse, _) = run(steps);
    for refinement in 1..=cfg.max_refinements {
        steps *= 2;
        let (fine, drift) = run(steps);
        let change = max_diff(&coarse, &fine);
        if change < cfg.tol {
            let stats = EvolutionStats {
                steps,
                dt: env.t_total / steps as f64,
                refinements: refinement,
                last_change: change,
                norm_drift: drift,
                top_population: 0.0,
                fock_cutoff: h.space().fock_cutoff(),
            };
            return Ok((fine, stats));
        }
        if refinement == cfg.max_refinements {
            let first = |v: Vec<Vec<C64>>| v.into_iter().next().unwrap_or_default();
            return Err(Error::NonConvergence {
                refinements: refinement,
                last_change: change,
                tol: cfg.tol,
                iterates: Box::new((first(coarse), first(fine))),
            });
        }
        coarse = fine;
    }
    Err(Error::invalid("max_refinements", "must be at least 1"))
}

/// Integrates i dψ/dt = g(t) H(t) ψ over the pulse and returns ψ(t_f).
pub fn evolve(h: &TimedOperator, env: &PulseEnvelope, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<StateVector> {
    evolve_detailed(h, env, psi0, cfg).map(|e| e.state)
}

/// As [`evolve`], also returning integration diagnostics. If the final
/// state leaks into the top two Fock levels the model is rebuilt with a
/// larger cutoff and integrated again.
pub fn evolve_detailed(
    h: &TimedOperator,
    env: &PulseEnvelope,
    psi0: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<Evolved> {
    check_inputs(h, env, psi0.space())?;
    let mut h = h.clone();
    let mut psi0 = psi0.clone();
    for _ in 0..=MAX_GROWTHS {
        let (mut cols, mut stats) = converge(&h, env, cfg, &[psi0.as_slice().to_vec()])?;
        let state = StateVector::from_vec(psi0.space(), cols.pop().expect("one column"));
        stats.top_population = state.top_population();
        if stats.top_population <= TRUNCATION_LIMIT {
            return Ok(Evolved { state, stats });
        }
        let bigger = h.space().fock_cutoff() + CUTOFF_GROWTH;
        match h.rebuild(bigger) {
            Some(next) => {
                h = next?;
                psi0 = psi0.embed(h.space())?;
            }
            None => {
                return Err(Error::Truncation {
                    cutoff: h.space().fock_cutoff(),
                    population: stats.top_population,
                })
            }
        }
    }
    Err(Error::Truncation {
        cutoff: h.space().fock_cutoff(),
        population: f64::NAN,
    })
}

/// Full unitary of the pulse. No cutoff growth: the truncated propagator
/// is returned on the operator's own space.
pub fn propagator(h: &TimedOperator, env: &PulseEnvelope, cfg: &IntegratorConfig) -> Result<OperatorMatrix> {
    env.validate()?;
    let dim = h.space().dim();
    let init: Vec<Vec<C64>> = (0..dim)
        .map(|k| {
            let mut v = vec![C_ZERO; dim];
            v[k] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    let (cols, _) = converge(h, env, cfg, &init)?;
    let u = DMatrix::from_fn(dim, dim, |r, c| cols[c][r]);
    OperatorMatrix::new(h.space(), u)
}

/// Propagator over [t0, t1] for a square envelope, used to check the
/// group property.
pub fn propagator_interval(h: &TimedOperator, t0: f64, t1: f64, steps: usize, scheme: Scheme) -> Result<OperatorMatrix> {
    if !(t1 > t0) {
        return Err(Error::invalid("t1", "must exceed t0"));
    }
    let env = PulseEnvelope::square(t1)?;
    let dim = h.space().dim();
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|k| {
            let mut v = vec![C_ZERO; dim];
            v[k] = C64::new(1.0, 0.0);
            v
        })
        .collect();
    run_fixed(h, &env, scheme, t0, (t1 - t0) / steps as f64, steps, &mut cols);
    OperatorMatrix::new(h.space(), DMatrix::from_fn(dim, dim, |r, c| cols[c][r]))
}

/// Ratio of successive step-halving changes, e(dt)/e(dt/2), measured with
/// `steps`, 2·`steps` and 4·`steps` uniform steps. Approaches 2^p for a
/// scheme of order p.
pub fn convergence_ratio(
    h: &TimedOperator,
    env: &PulseEnvelope,
    psi0: &StateVector,
    steps: usize,
    scheme: Scheme,
) -> Result<f64> {
    let a = evolve_fixed(h, env, psi0, steps, scheme)?;
    let b = evolve_fixed(h, env, psi0, 2 * steps, scheme)?;
    let c = evolve_fixed(h, env, psi0, 4 * steps, scheme)?;
    let e1 = a.distance(&b);
    let e2 = b.distance(&c);
    if e2 == 0.0 {
        return Err(Error::Undefined("finest step-halving change is zero".into()));
    }
    Ok(e1 / e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{h_sw_exact, h_tw, PhysParams};
    use crate::hilbert::build_space;

    #[test]
    fn envelope_points() {
        let env = PulseEnvelope::ramped(2e-6, 10e-6).unwrap();
        assert_eq!(envelope(0.0, &env).unwrap(), 0.0);
        assert!((envelope(1e-6, &env).unwrap() - 0.5).abs() < 1e-15);
        assert!((envelope(2e-6, &env).unwrap() - 1.0).abs() < 1e-15);
        assert!(envelope(10e-6, &env).unwrap().abs() < 1e-15);
        assert!(envelope(11e-6, &env).is_err());
        assert!(envelope(-1e-9, &env).is_err());
        assert!(PulseEnvelope::ramped(6e-6, 10e-6).is_err());
        let sq = PulseEnvelope::square(1e-6).unwrap();
        assert_eq!(sq.g(0.0), 1.0);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let sp = build_space(2, 3).unwrap();
        let h = TimedOperator::zero(sp);
        let env = PulseEnvelope::square(1e-5).unwrap();
        let psi = StateVector::basis(sp, 2, 1);
        let out = evolve(&h, &env, &psi, &IntegratorConfig::default()).unwrap();
        assert!(out.distance(&psi) < 1e-15);
        let u = propagator(&h, &env, &IntegratorConfig::default()).unwrap();
        assert!(u.max_abs_diff(&OperatorMatrix::identity(sp)) < 1e-15);
    }

    #[test]
    fn carrier_pi_pulse() {
        let sp = build_space(1, 4).unwrap();
        let omega = crate::hz(100e3);
        let p = PhysParams {
            omega_rabi: omega,
            ..Default::default()
        }
        .with_dphi(PI);
        let h = h_sw_exact(&p, sp).unwrap();
        // carrier Rabi frequency is 2Ω⟨0|cos ηX|0⟩ = 2Ω e^{−η²/2}
        let rabi = 2.0 * omega * (-p.eta * p.eta / 2.0).exp();
        let env = PulseEnvelope::square(PI / rabi).unwrap();
        let out = evolve(&h, &env, &StateVector::basis(sp, 0, 0), &IntegratorConfig::default()).unwrap();
        let p_up: f64 = out.spin_populations()[1];
        assert!(p_up > 0.9999, "{p_up}");
    }

    #[test]
    fn tw_carrier_limit() {
        // small η, δ = 0: Rabi flopping at Ω
        let sp = build_space(1, 3).unwrap();
        let p = PhysParams {
            eta: 1e-6,
            omega_rabi: crate::hz(50e3),
            ..Default::default()
        };
        let h = h_tw(&p, sp).unwrap();
        let env = PulseEnvelope::square(PI / p.omega_rabi).unwrap();
        let out = evolve(&h, &env, &StateVector::basis(sp, 0, 0), &IntegratorConfig::default()).unwrap();
        assert!(out.spin_populations()[1] > 1.0 - 1e-9);
    }

    #[test]
    fn unitarity_and_group_property() {
        let sp = build_space(1, 6).unwrap();
        let p = PhysParams {
            omega_rabi: crate::hz(200e3),
            delta: crate::hz(1.1e6),
            ..Default::default()
        };
        let h = h_tw(&p, sp).unwrap();
        let tf = 3e-6;
        let env = PulseEnvelope::square(tf).unwrap();
        let u = propagator(&h, &env, &IntegratorConfig::default()).unwrap();
        let udu = &u.adjoint() * &u;
        assert!(udu.max_abs_diff(&OperatorMatrix::identity(sp)) < 1e-9);
        let det = u.entries().clone().determinant();
        assert!((det.norm() - 1.0).abs() < 1e-9);
        let steps = 4000;
        let first = propagator_interval(&h, 0.0, tf / 2.0, steps, Scheme::Magnus4).unwrap();
        let second = propagator_interval(&h, tf / 2.0, tf, steps, Scheme::Magnus4).unwrap();
        let composed = &second * &first;
        assert!(composed.max_abs_diff(&u) < 1e-8);
    }

    #[test]
    fn scheme_orders() {
        let sp = build_space(1, 8).unwrap();
        let p = PhysParams {
            omega_rabi: crate::hz(300e3),
            delta: crate::hz(1.0e6),
            ..Default::default()
        };
        let h = h_tw(&p, sp).unwrap();
        let env = PulseEnvelope::ramped(1e-6, 4e-6).unwrap();
        let psi = StateVector::basis(sp, 0, 0);
        let r2 = convergence_ratio(&h, &env, &psi, 200, Scheme::Midpoint).unwrap();
        assert!((3.0..=5.0).contains(&r2), "midpoint ratio {r2}");
        let r4 = convergence_ratio(&h, &env, &psi, 50, Scheme::Magnus4).unwrap();
        assert!((12.0..=20.0).contains(&r4), "magnus ratio {r4}");
    }

    #[test]
    fn cutoff_grows_when_truncation_is_violated() {
        // resonant blue sideband for long enough to climb the ladder
        let sp = build_space(1, 2).unwrap();
        let p = PhysParams {
            omega_rabi: crate::hz(200e3),
            delta: crate::hz(1.2e6),
            ..Default::default()
        }
        .with_dphi(0.0);
        let h = h_sw_exact(&p, sp).unwrap();
        let env = PulseEnvelope::square(20e-6).unwrap();
        let out = evolve_detailed(&h, &env, &StateVector::basis(sp, 0, 0), &IntegratorConfig::default()).unwrap();
        assert!(out.stats.fock_cutoff > 2);
        assert!(out.stats.top_population < TRUNCATION_LIMIT);
        assert!((out.state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_reports_iterates() {
        let sp = build_space(1, 3).unwrap();
        let p = PhysParams {
            omega_rabi: crate::hz(100e3),
            delta: crate::hz(1.2e6),
            ..Default::default()
        };
        let h = h_tw(&p, sp).unwrap();
        let env = PulseEnvelope::square(5e-6).unwrap();
        let cfg = IntegratorConfig {
            dt_init: Some(1e-6),
            max_refinements: 1,
            tol: 1e-14,
            ..Default::default()
        };
        match evolve(&h, &env, &StateVector::basis(sp, 0, 0), &cfg) {
            Err(Error::NonConvergence { iterates, .. }) => {
                assert_eq!(iterates.0.len(), sp.dim());
                assert_eq!(iterates.1.len(), sp.dim());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
