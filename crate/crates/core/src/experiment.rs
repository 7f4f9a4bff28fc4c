//! Run configurations, named presets and the experiment driver behind the
//! command-line tool. Every run writes `<experiment>.csv` and
//! `<experiment>.summary.json` into the output directory.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::calibration::{
    bichromatic_offset_cal, carrier_suppression, offset_scan, spacing_scan, with_projection_noise_seeded, BichromaticCal,
    CalSettings, OffsetModel, SpacingModel,
};
use crate::analysis::fringe::{detuning_scan, fringe_exponents, phase_scan, Placement, Resonance, ScanSettings};
use crate::analysis::gate::{fidelity_vs_duration, log_log_slope, power_curves, GateModel, GateSettings};
use crate::analysis::sdf::{sdf_curve, simulated_sdf_peak, SdfSettings};
use crate::budget::{budget_table, BudgetInputs, BudgetTable, Channel, OperatingPoint};
use crate::error::{Error, Result};
use crate::evolution::IntegratorConfig;
use crate::hamiltonian::{sdf_peak_x, sdf_tw_max, PhysParams};
use crate::lock::{compare_loops, histogram, sw_period_fraction, wavelength_fraction, LockConfig};
use crate::scan::ScanResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PhaseScan,
    DetuningScan,
    SdfCurve,
    GateFidelity,
    PowerCurve,
    ErrorBudget,
    LockSim,
    CalibrateSpacing,
    CalibrateBichromatic,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::PhaseScan,
        Experiment::DetuningScan,
        Experiment::SdfCurve,
        Experiment::GateFidelity,
        Experiment::PowerCurve,
        Experiment::ErrorBudget,
        Experiment::LockSim,
        Experiment::CalibrateSpacing,
        Experiment::CalibrateBichromatic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseScan => "phase-scan",
            Experiment::DetuningScan => "detuning-scan",
            Experiment::SdfCurve => "sdf-curve",
            Experiment::GateFidelity => "gate-fidelity",
            Experiment::PowerCurve => "power-curve",
            Experiment::ErrorBudget => "error-budget",
            Experiment::LockSim => "lock-sim",
            Experiment::CalibrateSpacing => "calibrate-spacing",
            Experiment::CalibrateBichromatic => "calibrate-bichromatic",
        }
    }
}

/// Amplitude shaping shared by the experiments; the total duration is
/// fixed by each experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// sin² ramp duration in seconds; 0 gives a square pulse.
    pub t_ramp: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { t_ramp: 10e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub points: usize,
    pub fock_cutoff: usize,
    /// Half-width of detuning scans, rad/s.
    pub span: f64,
    /// Offsets from the fringe extrema, rad, used for the exponent fits.
    pub fit_window: [f64; 2],
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            points: 121,
            fock_cutoff: 8,
            span: crate::hz(200e3),
            fit_window: [0.05, 0.3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdfOptions {
    /// Values of 2Ω/δ.
    pub xs: Vec<f64>,
    pub durations: usize,
    pub fock_cutoff: usize,
    /// Also locate the maximum of the simulated TW force.
    pub locate_peak: bool,
}

impl Default for SdfOptions {
    fn default() -> Self {
        Self {
            xs: vec![0.2, 0.6, 1.0, 1.5, 2.0, 2.5, 3.0],
            durations: 5,
            fock_cutoff: 14,
            locate_peak: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateOptions {
    /// Effective gate durations 2π/δ_g in seconds.
    pub durations: Vec<f64>,
    pub models: Vec<GateModel>,
    pub fock_cutoff: usize,
    pub coarse_points: usize,
}

impl Default for GateOptions {
    fn default() -> Self {
        Self {
            durations: vec![15e-6, 20e-6, 30e-6, 40e-6, 60e-6],
            models: vec![GateModel::SwMs, GateModel::TwMs],
            fock_cutoff: GateSettings::default().fock_cutoff,
            coarse_points: GateSettings::default().coarse_points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Projection-noise shots per point; 0 disables noise.
    pub shots: u32,
    /// Independent noisy repetitions of the fit.
    pub trials: usize,
    pub points: usize,
    pub reference_points: usize,
    /// Gate detuning for the bichromatic calibration, rad/s.
    pub delta_g: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            shots: 100,
            trials: 1,
            points: 61,
            reference_points: 64,
            delta_g: 2.0 * PI / 15e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: PhysParams,
    pub envelope: EnvelopeConfig,
    /// Overrides the experiment's own integrator settings when present.
    pub integrator: Option<IntegratorConfig>,
    pub output_dir: PathBuf,
    /// Master seed; stochastic experiments derive per-point seeds from it.
    pub seed: u64,
    pub scan: ScanOptions,
    pub sdf: SdfOptions,
    pub gate: GateOptions,
    pub budget: BudgetInputs,
    pub lock: LockConfig,
    pub calibration: CalibrationOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::PhaseScan,
            params: PhysParams::default(),
            envelope: EnvelopeConfig::default(),
            integrator: None,
            output_dir: PathBuf::from("out"),
            seed: 1,
            scan: ScanOptions::default(),
            sdf: SdfOptions::default(),
            gate: GateOptions::default(),
            budget: BudgetInputs::default(),
            lock: LockConfig::default(),
            calibration: CalibrationOptions::default(),
        }
    }
}

/// Preset names with the experiment each one runs.
pub const PRESETS: [(&str, Experiment); 9] = [
    ("fig2a", Experiment::PhaseScan),
    ("fig2b", Experiment::DetuningScan),
    ("fig3", Experiment::SdfCurve),
    ("fig4a", Experiment::GateFidelity),
    ("fig4b", Experiment::PowerCurve),
    ("tableB1", Experiment::ErrorBudget),
    ("figB1", Experiment::LockSim),
    ("figB3", Experiment::CalibrateSpacing),
    ("bichromatic", Experiment::CalibrateBichromatic),
];

/// Configuration of a named preset.
pub fn preset(name: &str) -> Result<RunConfig> {
    let experiment = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, e)| *e)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    let base = RunConfig {
        experiment,
        ..RunConfig::default()
    };
    // carrier scans at a modest drive; gates and SDF set their own Ω
    let scan_params = PhysParams {
        omega_rabi: crate::hz(50e3),
        ..PhysParams::default()
    };
    Ok(match experiment {
        Experiment::PhaseScan | Experiment::DetuningScan => RunConfig {
            params: scan_params,
            envelope: EnvelopeConfig { t_ramp: 0.0 },
            ..base
        },
        Experiment::CalibrateSpacing => RunConfig {
            params: PhysParams {
                n_ions: 2,
                dphi_sp: 0.2,
                ..scan_params
            },
            envelope: EnvelopeConfig { t_ramp: 0.0 },
            ..base
        },
        Experiment::CalibrateBichromatic => RunConfig {
            params: PhysParams {
                n_ions: 2,
                omega_rabi: crate::hz(340e3),
                dphi_bd: 0.1,
                dphi_rd: -0.05,
                ..PhysParams::default()
            },
            envelope: EnvelopeConfig { t_ramp: 0.0 },
            ..base
        },
        Experiment::SdfCurve => RunConfig {
            envelope: EnvelopeConfig { t_ramp: 3.6e-6 },
            sdf: SdfOptions {
                xs: (1..=15).map(|k| 0.2 * k as f64).collect(),
                ..SdfOptions::default()
            },
            ..base
        },
        Experiment::GateFidelity | Experiment::PowerCurve => RunConfig {
            params: PhysParams {
                n_ions: 2,
                ..PhysParams::default()
            },
            envelope: EnvelopeConfig { t_ramp: 10e-6 },
            ..base
        },
        Experiment::ErrorBudget => RunConfig {
            envelope: EnvelopeConfig { t_ramp: 10e-6 },
            budget: BudgetInputs {
                reference_square: Some(vec![3.46e-4, 61.0e-4, 0.03e-4, 2.12e-4, 15.4e-4]),
                ..BudgetInputs::default()
            },
            ..base
        },
        Experiment::LockSim => base,
    })
}

/// Sets `path` (dot-separated keys) inside a JSON object to `raw`, parsed
/// as JSON when possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed key `{path}`")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        if !node.is_object() {
            *node = Value::Object(Default::default());
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(key.to_string())
            .or_insert(Value::Null);
    }
    if !node.is_object() {
        *node = Value::Object(Default::default());
    }
    node.as_object_mut()
        .expect("object")
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Builds a run configuration from an optional base (preset or file
/// contents) and `key=value` overrides. Unknown keys are rejected.
pub fn resolve_config(base: Value, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut value = base;
    for (k, v) in overrides {
        apply_override(&mut value, k, v)?;
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.envelope.t_ramp >= 0.0 && self.envelope.t_ramp.is_finite()) {
            return Err(Error::invalid("envelope.t_ramp", "must be non-negative"));
        }
        if let Some(i) = &self.integrator {
            i.validate()?;
        }
        self.budget.fluctuations.validate()?;
        self.lock.validate()?;
        if self.gate.durations.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid("gate.durations", "must be positive"));
        }
        if self.sdf.xs.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::invalid("sdf.xs", "2Ω/δ values must be positive"));
        }
        Ok(())
    }

    fn integrator_or(&self, default: IntegratorConfig) -> IntegratorConfig {
        self.integrator.clone().unwrap_or(default)
    }

    fn scan_settings(&self) -> ScanSettings {
        let d = ScanSettings::default();
        ScanSettings {
            fock_cutoff: self.scan.fock_cutoff,
            points: self.scan.points,
            integrator: self.integrator_or(d.integrator),
        }
    }

    fn gate_settings(&self) -> GateSettings {
        let d = GateSettings::default();
        GateSettings {
            fock_cutoff: self.gate.fock_cutoff,
            coarse_points: self.gate.coarse_points,
            integrator: self.integrator_or(d.integrator.clone()),
            ..d
        }
    }

    fn cal_settings(&self) -> CalSettings {
        CalSettings {
            reference_points: self.calibration.reference_points,
            scan: ScanSettings {
                points: self.calibration.points,
                ..self.scan_settings()
            },
            ..CalSettings::default()
        }
    }
}

/// Output of one run: the CSV table and experiment-specific results for
/// the summary.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv: String,
    pub results: Value,
    /// Human-readable text printed by the CLI, if any.
    pub report: Option<String>,
}

/// Version string of the form `<crate version>[-<git describe>]`.
pub const VERSION: &str = env!("SWGATE_VERSION");

pub fn version_string() -> String {
    VERSION.to_string()
}

/// Executes the configured experiment without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::PhaseScan => run_phase_scan(cfg),
        Experiment::DetuningScan => run_detuning_scan(cfg),
        Experiment::SdfCurve => run_sdf_curve(cfg),
        Experiment::GateFidelity => run_gate_fidelity(cfg),
        Experiment::PowerCurve => run_power_curve(cfg),
        Experiment::ErrorBudget => run_error_budget(cfg),
        Experiment::LockSim => run_lock_sim(cfg),
        Experiment::CalibrateSpacing => run_calibrate_spacing(cfg),
        Experiment::CalibrateBichromatic => run_calibrate_bichromatic(cfg),
    }
}

/// Executes the experiment and writes `<experiment>.csv` and
/// `<experiment>.summary.json` into `cfg.output_dir`. Returns the paths
/// written and the run output.
pub fn run(cfg: &RunConfig) -> Result<(Vec<PathBuf>, RunOutput)> {
    let start = Instant::now();
    let out = execute(cfg)?;
    let wall = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let name = cfg.experiment.name();
    let csv_path = cfg.output_dir.join(format!("{name}.csv"));
    let json_path = cfg.output_dir.join(format!("{name}.summary.json"));
    std::fs::write(&csv_path, &out.csv)?;
    let summary = json!({
        "experiment": name,
        "version": version_string(),
        "wall_time_s": wall,
        "config": cfg,
        "results": out.results,
    });
    std::fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok((vec![csv_path, json_path], out))
}

/// Reads a JSON file into a value, for use as the base of
/// [`resolve_config`].
pub fn read_config_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run_phase_scan(cfg: &RunConfig) -> Result<RunOutput> {
    let n_ions = cfg.params.n_ions;
    let scan = phase_scan(&cfg.params, n_ions, &cfg.scan_settings())?;
    let names: Vec<&str> = scan.series.iter().map(|(n, _)| n.as_str()).collect();
    scan.check_probabilities(&names)?;
    let mut results = json!({ "n_ions": n_ions, "points": scan.len() });
    if n_ions == 1 {
        let [lo, hi] = cfg.scan.fit_window;
        let (quartic, quadratic) = fringe_exponents(&scan, lo, hi)?;
        results["exponent_near_pi"] = json!(quartic);
        results["exponent_near_zero"] = json!(quadratic);
    }
    Ok(RunOutput {
        csv: scan.to_csv(),
        results,
        report: None,
    })
}

fn run_detuning_scan(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = cfg.scan_settings();
    let mut out: Option<ScanResult> = None;
    let mut results = serde_json::Map::new();
    for placement in [Placement::Node, Placement::Antinode] {
        for resonance in [Resonance::Carrier, Resonance::Sideband] {
            let scan = detuning_scan(&cfg.params, placement, resonance, cfg.scan.span, &settings)?;
            let center = match resonance {
                Resonance::Carrier => 0.0,
                Resonance::Sideband => cfg.params.omega_z,
            };
            let label = format!("{}_{}", snake(&placement), snake(&resonance));
            let p = scan.get("p_transfer").expect("series present").to_vec();
            let mid = p[p.len() / 2];
            results.insert(format!("{label}_on_resonance"), json!(mid));
            let acc = out.get_or_insert_with(|| {
                ScanResult::new("detuning_offset_rad_s", scan.axis_values.iter().map(|d| d - center).collect())
            });
            acc.push(label, p)?;
        }
    }
    let scan = out.expect("four scans");
    Ok(RunOutput {
        csv: scan.to_csv(),
        results: Value::Object(results),
        report: None,
    })
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn run_sdf_curve(cfg: &RunConfig) -> Result<RunOutput> {
    let d = SdfSettings::default();
    let settings = SdfSettings {
        t_ramp: cfg.envelope.t_ramp,
        durations: cfg.sdf.durations,
        fock_cutoff: cfg.sdf.fock_cutoff,
        integrator: cfg.integrator_or(d.integrator.clone()),
        ..d
    };
    let curve = sdf_curve(&cfg.params, &cfg.sdf.xs, &settings)?;
    let tw = curve.get("sdf_tw_norm").expect("series");
    let an = curve.get("sdf_tw_analytic").expect("series");
    let sw = curve.get("sdf_sw_norm").expect("series");
    let tw_dev = tw.iter().zip(an).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    let (swmin, swmax) = sw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut results = json!({
        "tw_max_rel_deviation": tw_dev,
        "sw_min": swmin,
        "sw_max": swmax,
        "analytic_peak_x": sdf_peak_x(),
        "analytic_peak_over_eta_delta": sdf_tw_max(1.0, 1.0),
    });
    if cfg.sdf.locate_peak {
        let (x, v) = simulated_sdf_peak(&cfg.params, 1.5, 2.2, 1e-3, &settings)?;
        results["simulated_peak_x"] = json!(x);
        results["simulated_peak_over_eta_delta"] = json!(v);
    }
    // column order of the output table
    let mut ordered = ScanResult::new(curve.axis_name.clone(), curve.axis_values.clone());
    for name in ["sdf_tw_norm", "sdf_sw_norm", "sdf_tw_analytic"] {
        ordered.push(name, curve.get(name).expect("series").to_vec())?;
    }
    Ok(RunOutput {
        csv: ordered.to_csv(),
        results,
        report: None,
    })
}

fn run_gate_fidelity(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = cfg.gate_settings();
    let mut table = ScanResult::new("t_gate_eff_s", cfg.gate.durations.clone());
    let mut results = serde_json::Map::new();
    for &model in &cfg.gate.models {
        let scan = fidelity_vs_duration(model, &cfg.params, &cfg.gate.durations, cfg.envelope.t_ramp, &settings)?;
        let key = snake(&model);
        let f = scan.get("fidelity").expect("series").to_vec();
        results.insert(format!("min_fidelity_{key}"), json!(f.iter().cloned().fold(f64::INFINITY, f64::min)));
        table.push(format!("fidelity_{key}"), f)?;
        table.push(format!("omega_star_{key}"), scan.get("omega_star").expect("series").to_vec())?;
    }
    Ok(RunOutput {
        csv: table.to_csv(),
        results: Value::Object(results),
        report: None,
    })
}

fn run_power_curve(cfg: &RunConfig) -> Result<RunOutput> {
    let curves = power_curves(&cfg.params, &cfg.gate.durations, cfg.envelope.t_ramp)?;
    let sw = curves.get("rel_power_sw").expect("series");
    let slope = log_log_slope(&curves.axis_values, sw);
    Ok(RunOutput {
        csv: curves.to_csv(),
        results: json!({ "sw_power_exponent": slope }),
        report: None,
    })
}

fn run_error_budget(cfg: &RunConfig) -> Result<RunOutput> {
    let inputs = BudgetInputs {
        eta: cfg.params.eta,
        omega_z: cfg.params.omega_z,
        t_ramp: cfg.envelope.t_ramp,
        ..cfg.budget.clone()
    };
    let table: BudgetTable = budget_table(&inputs)?;
    let suppression = carrier_suppression(inputs.fluctuations.rabi_imbalance_rel, inputs.fluctuations.sigma_phi)?;
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| json!({ "source": r.source, "eps_square": r.eps_square, "eps_shaped": r.eps_shaped, "implied_ratio": r.implied_ratio }))
        .collect();
    let carrier_ratios: Vec<Value> = table
        .rows
        .iter()
        .filter(|r| r.source.is_carrier() && r.eps_square > 0.0)
        .map(|r| json!({ "source": r.source, "shaped_over_square": r.eps_shaped / r.eps_square }))
        .collect();
    let mut report = table.render();
    match &inputs.operating_point {
        OperatingPoint::InvertRow { channel, eps } => report.push_str(&format!(
            "2Ω/δ not given for the gate; inferred by inverting the {} row at {:.2e}\n",
            channel.label(),
            eps
        )),
        OperatingPoint::Ratio(x) => report.push_str(&format!("2Ω/δ set explicitly to {x:.4}\n")),
    }
    report.push_str(&format!(
        "predicted carrier suppression {:.2} ({:.1} dB)\n",
        suppression,
        crate::analysis::calibration::suppression_db(suppression)
    ));
    Ok(RunOutput {
        csv: table.to_csv(),
        results: json!({
            "rows": rows,
            "total_square": table.total_square,
            "total_shaped": table.total_shaped,
            "operating_ratio_2omega_over_delta": table.ratio,
            "r": table.r,
            "carrier_ratios": carrier_ratios,
            "carrier_suppression": suppression,
            "channels": Channel::ALL.iter().map(|c| c.key()).collect::<Vec<_>>(),
        }),
        report: Some(report),
    })
}

fn run_lock_sim(cfg: &RunConfig) -> Result<RunOutput> {
    let lock = LockConfig {
        rng_seed: cfg.seed,
        ..cfg.lock.clone()
    };
    let (both, pd_only) = compare_loops(&lock)?;
    let hist = histogram(&both.dphi, 41)?;
    Ok(RunOutput {
        csv: both.to_csv(),
        results: json!({
            "rms_rad": both.rms,
            "pd_only_rms_rad": pd_only.rms,
            "fit_sigma_rad": hist.fit_sigma,
            "fit_mean_rad": hist.fit_mean,
            "fit_chi2_dof": hist.chi2_dof,
            "lambda_fraction": wavelength_fraction(both.rms),
            "sw_period_fraction": sw_period_fraction(both.rms),
            "samples": both.dphi.len(),
        }),
        report: None,
    })
}

/// Per-trial seed derived from the master seed.
fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial as u64)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (m, s)
}

fn run_calibrate_spacing(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = cfg.cal_settings();
    let injected = cfg.params.dphi_sp;
    let clean = spacing_scan(&cfg.params, &settings)?;
    let model = SpacingModel::new(&cfg.params, &settings)?;
    let mut fits = Vec::new();
    let mut shown = clean.clone();
    for trial in 0..cfg.calibration.trials.max(1) {
        let data = if cfg.calibration.shots > 0 {
            with_projection_noise_seeded(&clean, cfg.calibration.shots, trial_seed(cfg.seed, trial))?
        } else {
            clean.clone()
        };
        fits.push(model.fit(&data)?);
        if trial == 0 {
            shown = data;
        }
    }
    let values: Vec<f64> = fits.iter().map(|f| f.value).collect();
    let (mean, std) = mean_std(&values);
    let fitted = values[0];
    let mut table = shown.clone();
    for (k, name) in ["fit_p11", "fit_p01+p10", "fit_p00"].iter().enumerate() {
        table.push(*name, table.axis_values.iter().map(|&x| model.populations(fitted, x)[k]).collect())?;
    }
    Ok(RunOutput {
        csv: table.to_csv(),
        results: json!({
            "injected_dphi_sp": injected,
            "fitted_dphi_sp": fitted,
            "residual": fits[0].residual,
            "trials": values.len(),
            "mean_fitted": mean,
            "std_fitted": std,
            "rms_error": (values.iter().map(|v| (v - injected).powi(2)).sum::<f64>() / values.len() as f64).sqrt(),
        }),
        report: None,
    })
}

fn run_calibrate_bichromatic(cfg: &RunConfig) -> Result<RunOutput> {
    let settings = cfg.cal_settings();
    let p = &cfg.params;
    let dg = cfg.calibration.delta_g;
    let cal = BichromaticCal {
        delta_g: dg,
        t_pulse: None,
        shots: (cfg.calibration.shots > 0).then_some(cfg.calibration.shots),
        seed: cfg.seed,
    };
    let fit = bichromatic_offset_cal(p, &cal, &settings)?;
    // tabulate the clean scans and fitted models for both tones
    let t_pulse = 2.0 * PI / dg;
    let probe = p.omega_z - dg;
    let mut table: Option<ScanResult> = None;
    for (tag, delta, offset, fitted) in [
        ("bd", probe, p.dphi_bd, fit.dphi_bd.value),
        ("rd", -probe, p.dphi_rd, fit.dphi_rd.value),
    ] {
        let scan = offset_scan(p, delta, offset, t_pulse, &settings)?;
        let model = OffsetModel::new(p, delta, t_pulse, &settings)?;
        let acc = table.get_or_insert_with(|| ScanResult::new("dphi_rad", scan.axis_values.clone()));
        for (k, name) in ["p11", "p01+p10", "p00"].iter().enumerate() {
            acc.push(format!("{tag}_{name}"), scan.get(name).expect("series").to_vec())?;
            acc.push(
                format!("{tag}_fit_{name}"),
                scan.axis_values.iter().map(|&x| model.populations(fitted, x)[k]).collect(),
            )?;
        }
    }
    Ok(RunOutput {
        csv: table.expect("two tones").to_csv(),
        results: json!({
            "injected_dphi_bd": p.dphi_bd,
            "injected_dphi_rd": p.dphi_rd,
            "fitted_dphi_bd": fit.dphi_bd.value,
            "fitted_dphi_rd": fit.dphi_rd.value,
            "residual_bd": fit.dphi_bd.residual,
            "residual_rd": fit.dphi_rd.residual,
        }),
        report: None,
    })
}
