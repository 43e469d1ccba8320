//! Scenario configs, figure presets and the `pqm` command line.

mod args;
mod presets;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{self, AreaPrediction, Circulation, CircuitSeries, HysteresisLoop, SpiralReport};
use crate::dynamics::{self, InitialStateSpec, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::model::{self, DriveProfile, DrivenJcParams, JchParams, KerrParams, ModelInstance, ModelKind};
use crate::ops::HilbertLayout;

pub use args::{main_with_args, Cli, Command};
pub use presets::{preset, reference_tau, DRIVEN_JC_CUTOFF, PRESET_NAMES};

/// Version of the summary JSON layout.
pub const SCHEMA_VERSION: u32 = 1;
/// A response ending this far below its starting value marks a broken loop.
pub const LOOP_BREAK_DROP: f64 = 0.05;
/// Relative area spread above which a model counts as plastic.
pub const PLASTICITY_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JchScenario {
    pub params: JchParams,
    #[serde(default = "default_jch_cutoff")]
    pub n_max: usize,
    pub drive: DriveProfile,
}

fn default_jch_cutoff() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Jch(JchScenario),
    DrivenJc(DrivenJcParams),
    Kerr(KerrParams),
}

impl ModelConfig {
    pub fn drive(&self) -> &DriveProfile {
        match self {
            ModelConfig::Jch(s) => &s.drive,
            ModelConfig::DrivenJc(p) => &p.drive,
            ModelConfig::Kerr(p) => &p.drive,
        }
    }

    pub fn drive_mut(&mut self) -> &mut DriveProfile {
        match self {
            ModelConfig::Jch(s) => &mut s.drive,
            ModelConfig::DrivenJc(p) => &mut p.drive,
            ModelConfig::Kerr(p) => &mut p.drive,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Jch(_) => ModelKind::Jch,
            ModelConfig::DrivenJc(_) => ModelKind::DrivenJc,
            ModelConfig::Kerr(_) => ModelKind::Kerr,
        }
    }

    pub fn build(&self) -> Result<ModelInstance> {
        match self {
            ModelConfig::Jch(s) => {
                let layout = HilbertLayout::two_cavity(s.n_max)?;
                model::build_jch(&s.params, &layout, s.drive.clone())
            }
            ModelConfig::DrivenJc(p) => model::build_driven_jc(p),
            ModelConfig::Kerr(p) => model::build_kerr(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Site whose response forms the loop.
    pub site: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { site: 0 }
    }
}

/// One simulation: model, drive, initial state, integration and analysis
/// settings. Units: `g = 1` (JCH, driven JC) or `γ = 1` (Kerr).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelConfig,
    pub initial_state: InitialStateSpec,
    /// Initial states contrasted by `compare-models`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare_initial_states: Vec<InitialStateSpec>,
    /// Defaults to the drive's natural duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn duration(&self) -> Result<f64> {
        match (self.duration, self.model.drive().natural_duration()) {
            (Some(d), _) => Ok(d),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::Validation("constant drives need an explicit duration".into())),
        }
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self) -> Result<ModelInstance> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Validation(format!("scenario name '{}' is not a plain file stem", self.name)));
        }
        self.integrator.validate()?;
        let model = self.model.build()?;
        let duration = self.duration()?;
        if !(duration > 0.0) {
            return Err(Error::Validation(format!("duration must be positive, got {duration}")));
        }
        if let Some(end) = self.model.drive().natural_duration() {
            if duration > end * (1.0 + 1e-9) {
                return Err(Error::Validation(format!("duration {duration} exceeds the drive domain [0, {end}]")));
            }
        }
        if self.analysis.site >= model.layout.num_sites() {
            return Err(Error::Validation(format!("analysis site {} does not exist", self.analysis.site)));
        }
        self.initial_state.build(&model)?;
        for s in &self.compare_initial_states {
            s.build(&model)?;
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSummary {
    pub v_r_initial: f64,
    pub pinch_distance: f64,
    pub ehrenfest_residual: f64,
    pub max_abs_v_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub name: String,
    pub model: ModelKind,
    pub duration: f64,
    pub samples: usize,
    pub signed_area_numeric: f64,
    pub signed_area_analytic: Option<f64>,
    pub eta: Option<f64>,
    pub tau_formula: Option<f64>,
    pub tau_empirical: Option<f64>,
    pub circulation: Circulation,
    pub epsilon_area: f64,
    pub endpoint_gap: f64,
    pub closure_defect: f64,
    pub max_tail_population: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spiral: Option<SpiralReport>,
    pub notes: Vec<String>,
}

/// Everything produced by one scenario.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    pub hysteresis: HysteresisLoop,
    pub circuit: Option<CircuitSeries>,
    pub summary: RunSummary,
}

/// Integrates a scenario and derives its loop, circuit and spiral data.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let model = cfg.validate()?;
    let duration = cfg.duration()?;
    let traj = dynamics::evolve(&cfg.initial_state, &model, duration, &cfg.integrator)?;
    let site = cfg.analysis.site;
    let hysteresis = HysteresisLoop::from_trajectory(&traj, site)?;
    let mut notes = Vec::new();

    let (mut eta, mut analytic, mut tau_formula, mut tau_empirical) = (None, None, None, None);
    if let ModelConfig::Jch(s) = &cfg.model {
        eta = Some(analysis::eta_from_state(&cfg.initial_state, &model, site)?);
        if s.params.j > 0.0 {
            tau_formula = Some(analysis::estimate_tau(&s.params)?);
        }
        if let (DriveProfile::Gaussian(p), Some(tau), Some(eta)) = (&s.drive, tau_formula, eta) {
            let pred = AreaPrediction { xi_i: p.xi_i, xi_f: p.xi_f, sigma_w: p.sigma_w, t_peak: p.t_peak, tau, eta };
            analytic = Some(analysis::loop_area_analytic(&pred)?);
            if !s.params.is_closed() {
                notes.push("analytic-area-assumes-closed-dynamics".into());
            }
        }
        match analysis::estimate_tau_empirical(&traj) {
            Ok(t) => tau_empirical = Some(t),
            Err(Error::NoCrossing) => notes.push("no-critical-time".into()),
            Err(e) => return Err(e),
        }
    }

    let gap = hysteresis.endpoint_gap();
    if gap < -LOOP_BREAK_DROP {
        notes.push("loop-broken".into());
    }

    let circuit = if cfg.integrator.record.circuit {
        let c = analysis::circuit_series(&traj, site)?;
        Some(c)
    } else {
        None
    };
    let circuit_summary = circuit.as_ref().map(|c| CircuitSummary {
        v_r_initial: c.v_r[0],
        pinch_distance: c.pinch_distance(),
        ehrenfest_residual: c.ehrenfest_residual(),
        max_abs_v_r: c.max_abs_v(),
    });
    let spiral = match cfg.model.drive() {
        d @ DriveProfile::PulseTrain { .. } => Some(analysis::spiral_report(&traj, d, site)?),
        _ => None,
    };

    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        model: cfg.model.kind(),
        duration,
        samples: traj.len(),
        signed_area_numeric: hysteresis.signed_area,
        signed_area_analytic: analytic,
        eta,
        tau_formula,
        tau_empirical,
        circulation: hysteresis.circulation,
        epsilon_area: hysteresis.epsilon,
        endpoint_gap: gap,
        closure_defect: hysteresis.closure_defect(),
        max_tail_population: dynamics::cutoff_sentinel(&traj),
        accepted_steps: traj.stats.accepted,
        rejected_steps: traj.stats.rejected,
        rhs_evaluations: traj.stats.evaluations,
        circuit: circuit_summary,
        spiral,
        notes,
    };
    Ok(RunOutcome { config: cfg.clone(), trajectory: traj, hysteresis, circuit, summary })
}

/// Tracks files written by one command so a failure can remove them.
struct OutputSet {
    written: Vec<PathBuf>,
}

impl OutputSet {
    fn new() -> Self {
        Self { written: Vec::new() }
    }

    fn create(&mut self, path: PathBuf) -> Result<BufWriter<fs::File>> {
        let f = fs::File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn write_loop_csv<W: Write>(outcome: &RunOutcome, mut w: W) -> std::io::Result<()> {
    let l = &outcome.hysteresis;
    let t = &outcome.trajectory.times;
    match &outcome.circuit {
        None => {
            writeln!(w, "t,x,y")?;
            for k in 0..t.len() {
                writeln!(w, "{:.14e},{:.14e},{:.14e}", t[k], l.x[k], l.y[k])?;
            }
        }
        Some(c) => {
            writeln!(w, "t,x,y,xi_dot,a,b,v_r,r")?;
            for k in 0..t.len() {
                let r = c.r[k].map(|r| format!("{r:.14e}")).unwrap_or_default();
                writeln!(
                    w,
                    "{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{}",
                    t[k], l.x[k], l.y[k], c.xi_dot[k], c.a[k], c.b[k], c.v_r[k], r
                )?;
            }
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(value: &T, w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(w, value).map_err(|e| Error::Io(e.into()))
}

fn emit_outputs(outcome: &RunOutcome, dir: &Path, files: &mut OutputSet) -> Result<()> {
    let stem = &outcome.config.name;
    let mut w = files.create(dir.join(format!("{stem}_trajectory.csv")))?;
    outcome.trajectory.write_csv(&mut w)?;
    w.flush()?;
    let mut w = files.create(dir.join(format!("{stem}_loop.csv")))?;
    write_loop_csv(outcome, &mut w)?;
    w.flush()?;
    let mut w = files.create(dir.join(format!("{stem}_summary.json")))?;
    write_json(&outcome.summary, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs a scenario and writes `<name>_trajectory.csv`, `<name>_loop.csv`
/// and `<name>_summary.json` into `out_dir`. Nothing is left behind on
/// failure.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let mut files = OutputSet::new();
    let result = simulate(cfg).and_then(|outcome| {
        emit_outputs(&outcome, out_dir, &mut files)?;
        Ok(outcome.summary)
    });
    if result.is_err() {
        files.discard();
    }
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub signed_area_numeric: f64,
    pub signed_area_analytic: Option<f64>,
    pub circulation: Circulation,
    pub tau_empirical: Option<f64>,
}

/// Applies `parameter = value` to a copy of `base`.
///
/// Parameters: `t_peak` and `t_over_tau` (Gaussian peak time, keeping the
/// width-to-peak ratio), `xi_f`, `j`, `loss` (uniform JCH decay rate),
/// `initial_state` (`mott` or `superfluid`), `samples`.
pub fn apply_parameter(base: &ScenarioConfig, parameter: &str, value: &str) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    let number = || -> Result<f64> {
        value.trim().parse::<f64>().map_err(|_| Error::Validation(format!("'{value}' is not a number")))
    };
    let gaussian = |cfg: &mut ScenarioConfig| -> Result<()> {
        if !matches!(cfg.model.drive(), DriveProfile::Gaussian(_) | DriveProfile::PulseTrain { .. }) {
            return Err(Error::Validation(format!("parameter '{parameter}' needs a Gaussian drive")));
        }
        Ok(())
    };
    let retime = |drive: &mut DriveProfile, t_new: f64| match drive {
        DriveProfile::Gaussian(p) => {
            p.sigma_w *= t_new / p.t_peak;
            p.t_peak = t_new;
        }
        DriveProfile::PulseTrain { pulse, period, .. } => {
            *period *= t_new / pulse.t_peak;
            pulse.sigma_w *= t_new / pulse.t_peak;
            pulse.t_peak = t_new;
        }
        _ => {}
    };
    match parameter {
        "t_peak" => {
            gaussian(&mut cfg)?;
            retime(cfg.model.drive_mut(), number()?);
            cfg.duration = None;
        }
        "t_over_tau" => {
            gaussian(&mut cfg)?;
            let tau = match &cfg.model {
                ModelConfig::Jch(s) => analysis::estimate_tau(&s.params)?,
                _ => return Err(Error::Validation("t_over_tau needs a JCH model".into())),
            };
            retime(cfg.model.drive_mut(), number()? * tau);
            cfg.duration = None;
        }
        "xi_f" => match cfg.model.drive_mut() {
            DriveProfile::Gaussian(p) | DriveProfile::PulseTrain { pulse: p, .. } => p.xi_f = number()?,
            DriveProfile::Constant { xi } => *xi = number()?,
            _ => return Err(Error::Validation("xi_f needs a detuning drive".into())),
        },
        "j" => match &mut cfg.model {
            ModelConfig::Jch(s) => s.params.j = number()?,
            _ => return Err(Error::Validation("j needs a JCH model".into())),
        },
        "loss" => match &mut cfg.model {
            ModelConfig::Jch(s) => s.params = s.params.clone().with_uniform_loss(number()?),
            _ => return Err(Error::Validation("loss needs a JCH model".into())),
        },
        "initial_state" => {
            cfg.initial_state = match value.trim() {
                "mott" => InitialStateSpec::mott(),
                "superfluid" => InitialStateSpec::superfluid(),
                other => return Err(Error::Validation(format!("unknown initial state '{other}'"))),
            }
        }
        "samples" => {
            let n = number()?;
            if n.fract() != 0.0 || n < 2.0 {
                return Err(Error::Validation(format!("samples must be an integer >= 2, got {value}")));
            }
            cfg.integrator.output_samples = n as usize;
        }
        other => return Err(Error::Validation(format!("unknown sweep parameter '{other}'"))),
    }
    cfg.name = format!("{}_{}_{}", base.name, parameter, value.trim().replace(['/', '\\', ' '], "_"));
    Ok(cfg)
}

/// Runs `base` once per value. A hard failure aborts with the value named.
pub fn sweep(base: &ScenarioConfig, parameter: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    let configs = values.iter().map(|v| apply_parameter(base, parameter, v)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (value, cfg) in values.iter().zip(&configs) {
        let outcome = simulate(cfg).map_err(|e| Error::Member { what: format!("{parameter} = {value}"), source: Box::new(e) })?;
        rows.push(SweepRow {
            value: value.clone(),
            signed_area_numeric: outcome.summary.signed_area_numeric,
            signed_area_analytic: outcome.summary.signed_area_analytic,
            circulation: outcome.summary.circulation,
            tau_empirical: outcome.summary.tau_empirical,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plasticity {
    Plastic,
    NonPlastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPlasticity {
    pub name: String,
    pub model: ModelKind,
    pub areas: Vec<f64>,
    pub max_relative_difference: f64,
    pub classification: Plasticity,
}

/// Largest `|A_i − A_j| / max(|A_i|, |A_j|)` over pairs.
pub fn max_relative_difference(areas: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in areas.iter().enumerate() {
        for b in &areas[i + 1..] {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    worst
}

/// Runs every config once per initial state in its
/// `compare_initial_states` and classifies the spread of loop areas.
pub fn compare_models(configs: &[ScenarioConfig]) -> Result<Vec<ModelPlasticity>> {
    let mut report = Vec::with_capacity(configs.len());
    for cfg in configs {
        if cfg.compare_initial_states.len() < 2 {
            return Err(Error::Validation(format!("'{}' lists fewer than 2 initial states to compare", cfg.name)));
        }
        let mut areas = Vec::with_capacity(cfg.compare_initial_states.len());
        for (k, init) in cfg.compare_initial_states.iter().enumerate() {
            let member = ScenarioConfig {
                name: format!("{}_init{k}", cfg.name),
                initial_state: init.clone(),
                ..cfg.clone()
            };
            let outcome = simulate(&member).map_err(|e| Error::Member { what: member.name.clone(), source: Box::new(e) })?;
            areas.push(outcome.summary.signed_area_numeric);
        }
        let spread = max_relative_difference(&areas);
        report.push(ModelPlasticity {
            name: cfg.name.clone(),
            model: cfg.model.kind(),
            areas,
            max_relative_difference: spread,
            classification: if spread > PLASTICITY_THRESHOLD { Plasticity::Plastic } else { Plasticity::NonPlastic },
        });
    }
    Ok(report)
}

fn write_sweep_outputs(rows: &[SweepRow], name: &str, dir: &Path, files: &mut OutputSet) -> Result<()> {
    let mut w = files.create(dir.join(format!("{name}_sweep.csv")))?;
    writeln!(w, "value,signed_area_numeric,signed_area_analytic,circulation,tau_empirical")?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.14e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.14e},{},{},{}",
            r.value,
            r.signed_area_numeric,
            opt(r.signed_area_analytic),
            r.circulation.as_str(),
            opt(r.tau_empirical)
        )?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct SweepSummary<'a> {
        schema_version: u32,
        name: &'a str,
        rows: &'a [SweepRow],
    }
    let mut w = files.create(dir.join(format!("{name}_sweep.json")))?;
    write_json(&SweepSummary { schema_version: SCHEMA_VERSION, name, rows }, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Runs a sweep and writes `<name>_sweep.csv` and `<name>_sweep.json`.
pub fn run_sweep(base: &ScenarioConfig, parameter: &str, values: &[String], out_dir: &Path) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out_dir)?;
    let mut files = OutputSet::new();
    let result = sweep(base, parameter, values).and_then(|rows| {
        write_sweep_outputs(&rows, &base.name, out_dir, &mut files)?;
        Ok(rows)
    });
    if result.is_err() {
        files.discard();
    }
    result
}

/// Runs `compare_models` and writes `plasticity.json`.
pub fn run_compare(configs: &[ScenarioConfig], out_dir: &Path) -> Result<Vec<ModelPlasticity>> {
    fs::create_dir_all(out_dir)?;
    let mut files = OutputSet::new();
    let result = compare_models(configs).and_then(|report| {
        #[derive(Serialize)]
        struct Report<'a> {
            schema_version: u32,
            models: &'a [ModelPlasticity],
        }
        let mut w = files.create(out_dir.join("plasticity.json"))?;
        write_json(&Report { schema_version: SCHEMA_VERSION, models: &report }, &mut w)?;
        w.flush()?;
        Ok(report)
    });
    if result.is_err() {
        files.discard();
    }
    result
}
