//! Lindblad integration `ρ̇ = −i[H(t), ρ] + Dρ`, observable recording on a
//! uniform output grid, and an exact-exponential reference propagator.

mod dopri;
mod generator;
mod oracle;
mod record;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::model::ModelInstance;
use crate::ops::{self, OperatorMatrix, PolaritonLabel};

pub use dopri::IntegratorStats;
pub use oracle::{liouvillian, oracle_evolve, oracle_step, ORACLE_MAX_DIM};
pub use record::{PopulationRecord, SiteRecord, Trajectory, TRAJECTORY_COLUMNS};

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(invalid("density matrix must be square"));
        }
        Ok(Self { entries })
    }

    /// `|ψ⟩⟨ψ|` for a normalised `ψ`.
    pub fn from_pure(psi: &Array1<C64>) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("state vector has norm² {norm}, expected 1")));
        }
        Ok(Self { entries: linalg::outer(psi) })
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.entries)
    }

    /// Tr ρ², assuming Hermiticity.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        linalg::trace_product(&op.entries, &self.entries)
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.entries)[0]
    }

    /// Checks trace, Hermiticity, positivity and purity bounds.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let dim = self.dim() as f64;
        let tr = self.trace();
        if (tr - ONE).norm() >= 1e-8 {
            return Err(format!("trace {tr} deviates from 1"));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(format!("hermiticity error {herm:.3e}"));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(format!("negative eigenvalue {min_eig:.3e}"));
        }
        let p = self.purity();
        if p < 1.0 / dim - 1e-8 || p > 1.0 + 1e-8 {
            return Err(format!("purity {p} out of bounds"));
        }
        Ok(())
    }
}

/// Per-site Fock occupation of a product initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSite {
    pub photons: usize,
    #[serde(default)]
    pub excited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionTerm {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub labels: Vec<PolaritonLabel>,
}

/// Initial-state description. Polariton labels are resolved at the drive's
/// value at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    PolaritonProduct { labels: Vec<PolaritonLabel> },
    Superposition { terms: Vec<SuperpositionTerm> },
    Fock { sites: Vec<FockSite> },
    DensityInput { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl InitialStateSpec {
    /// Mott-insulator-like `|1−, 1−⟩`.
    pub fn mott() -> Self {
        InitialStateSpec::PolaritonProduct { labels: vec![PolaritonLabel::minus(1), PolaritonLabel::minus(1)] }
    }

    /// Superfluid-like `(|2−, 0g⟩ + |0g, 2−⟩)/√2`.
    pub fn superfluid() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        InitialStateSpec::Superposition {
            terms: vec![
                SuperpositionTerm { re: c, im: 0.0, labels: vec![PolaritonLabel::minus(2), PolaritonLabel::ground()] },
                SuperpositionTerm { re: c, im: 0.0, labels: vec![PolaritonLabel::ground(), PolaritonLabel::minus(2)] },
            ],
        }
    }

    pub fn polariton(label: PolaritonLabel) -> Self {
        InitialStateSpec::PolaritonProduct { labels: vec![label] }
    }

    pub fn fock(photons: &[usize]) -> Self {
        InitialStateSpec::Fock { sites: photons.iter().map(|&n| FockSite { photons: n, excited: false }).collect() }
    }

    /// Builds the initial density matrix for `model`.
    pub fn build(&self, model: &ModelInstance) -> Result<DensityMatrix> {
        let layout = &model.layout;
        let xi0 = model.drive.initial_value();
        let polariton_vec = |labels: &[PolaritonLabel]| -> Result<Array1<C64>> {
            let detuning = model
                .polariton_detuning(xi0)
                .ok_or_else(|| invalid("polariton initial states need a model with atoms"))?;
            ops::polariton_product(labels, detuning, model.g, layout)
        };
        let psi = match self {
            InitialStateSpec::PolaritonProduct { labels } => polariton_vec(labels)?,
            InitialStateSpec::Superposition { terms } => {
                if terms.is_empty() {
                    return Err(invalid("superposition needs at least one term"));
                }
                let mut acc = Array1::from_elem(layout.dim(), ZERO);
                for term in terms {
                    let v = polariton_vec(&term.labels)?;
                    acc.scaled_add(C64::new(term.re, term.im), &v);
                }
                acc
            }
            InitialStateSpec::Fock { sites } => {
                let occ: Vec<(usize, bool)> = sites.iter().map(|s| (s.photons, s.excited)).collect();
                let idx = layout.index_of(&occ)?;
                let mut v = Array1::from_elem(layout.dim(), ZERO);
                v[idx] = ONE;
                v
            }
            InitialStateSpec::DensityInput { re, im } => {
                let n = layout.dim();
                if re.len() != n || im.len() != n || re.iter().chain(im).any(|row| row.len() != n) {
                    return Err(invalid(format!("density input must be {n}×{n}")));
                }
                let m = Array2::from_shape_fn((n, n), |(i, j)| C64::new(re[i][j], im[i][j]));
                let rho = DensityMatrix::new(m)?;
                rho.check_invariants().map_err(|e| invalid(format!("density input: {e}")))?;
                return Ok(rho);
            }
        };
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-12) {
            return Err(invalid("initial state has zero norm"));
        }
        DensityMatrix::from_pure(&psi.mapv(|z| z / norm))
    }
}

/// What to record besides the always-on observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Recording {
    /// Two-body (or one-body) polariton projectors; `None` selects the
    /// model's default list.
    pub populations: Option<Vec<Vec<PolaritonLabel>>>,
    /// Circuit-analogy inputs `a(t)`, `b(t)`.
    pub circuit: bool,
    /// Keep density-matrix snapshots at every sample.
    pub states: bool,
}

impl Default for Recording {
    fn default() -> Self {
        Self { populations: None, circuit: false, states: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub output_samples: usize,
    pub cutoff_tail_threshold: f64,
    pub record: Recording,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            max_steps: 50_000_000,
            output_samples: 2000,
            cutoff_tail_threshold: 1e-6,
            record: Recording::default(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::Validation("integrator tolerances must be positive".into()));
        }
        if self.output_samples < 2 {
            return Err(Error::Validation("output_samples must be >= 2".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::Validation("max_step must be positive".into()));
            }
        }
        if !(self.cutoff_tail_threshold > 0.0) {
            return Err(Error::Validation("cutoff_tail_threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Dissipator `Σ γ (LρL† − ½{L†L, ρ})`.
pub fn dissipator(rho: &Array2<C64>, model: &ModelInstance) -> Array2<C64> {
    let mut out = Array2::zeros(rho.raw_dim());
    for (gamma, l) in &model.collapse_ops {
        let ld = linalg::dagger(&l.entries);
        let ldl = ld.dot(&l.entries);
        let g = C64::new(*gamma, 0.0);
        out = out + (l.entries.dot(rho).dot(&ld) - (ldl.dot(rho) + rho.dot(&ldl)) * 0.5) * g;
    }
    out
}

/// Dense right-hand side of the master equation at time `t`.
pub fn lindblad_rhs(rho: &DensityMatrix, model: &ModelInstance, t: f64) -> Result<Array2<C64>> {
    if rho.dim() != model.dim() {
        return Err(invalid(format!("state dimension {} does not match model dimension {}", rho.dim(), model.dim())));
    }
    let h = model.hamiltonian(t)?;
    let unitary = linalg::commutator(&h.entries, rho.entries()) * C64::new(0.0, -1.0);
    Ok(unitary + dissipator(rho.entries(), model))
}

/// Integrates the master equation over `[0, duration]`.
pub fn evolve(init: &InitialStateSpec, model: &ModelInstance, duration: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let rho0 = init.build(model)?;
    evolve_from(rho0, model, duration, cfg)
}

/// As [`evolve`], from an explicit initial density matrix.
pub fn evolve_from(rho0: DensityMatrix, model: &ModelInstance, duration: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !(duration > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    if let Some(end) = model.drive.natural_duration() {
        if duration > end * (1.0 + 1e-9) {
            return Err(Error::Validation(format!("duration {duration} exceeds the drive domain [0, {end}]")));
        }
    }
    if rho0.dim() != model.dim() {
        return Err(invalid("initial state dimension does not match the model"));
    }
    let samples = cfg.output_samples;
    let times: Vec<f64> = (0..samples)
        .map(|k| if k + 1 == samples { duration } else { duration * k as f64 / (samples - 1) as f64 })
        .collect();
    let generator = generator::LindbladGenerator::new(model);
    let mut recorder = record::Recorder::new(model, cfg, times.clone())?;
    let ctl = dopri::StepControl {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: cfg.max_step.unwrap_or(f64::INFINITY),
        max_steps: cfg.max_steps,
    };
    // exact conjugate symmetry; see `LindbladGenerator::apply`
    let r = rho0.entries();
    let y0: Vec<C64> = r.indexed_iter().map(|((i, j), z)| 0.5 * (z + r[[j, i]].conj())).collect();
    debug_assert_eq!(y0.len(), generator.dim() * generator.dim());
    let drive = &model.drive;
    let stats = dopri::integrate(
        |t, y, dy| generator.apply(t, drive.eval_unchecked(t).value, y, dy),
        0.0,
        &y0,
        &times,
        &ctl,
        |k, y| recorder.record(k, y),
    )
    .map_err(|f| match f {
        dopri::Failure::Callback(e) => e,
        dopri::Failure::StepUnderflow { t, h } => {
            Error::IntegratorFailure { time: t, reason: format!("step size underflow (h = {h:e})") }
        }
        dopri::Failure::TooManySteps { t } => {
            Error::IntegratorFailure { time: t, reason: format!("exceeded {} steps", cfg.max_steps) }
        }
        dopri::Failure::NonFinite { t } => Error::IntegratorFailure { time: t, reason: "non-finite state".into() },
    })?;
    Ok(recorder.finish(stats))
}

/// Largest recorded tail population.
pub fn cutoff_sentinel(traj: &Trajectory) -> f64 {
    traj.tail_population.iter().copied().fold(0.0, f64::max)
}
