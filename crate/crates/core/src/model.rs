//! Physical models: the two-cavity Jaynes–Cummings–Hubbard memristor, the
//! driven single-cavity Jaynes–Cummings system and the driven Kerr
//! resonator, together with their drive profiles.
//!
//! Every model has the shape `H(t) = H_static + f(t)·H_coupling` (plus, for
//! the off-resonant driven JC model, a phase-rotating coupling term) with a
//! list of Lindblad collapse operators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{C64, I, ONE, ZERO};
use crate::ops::{self, HilbertLayout, OperatorMatrix};

/// Scalar drive and its analytic time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSample {
    pub value: f64,
    pub derivative: f64,
}

/// Gaussian detuning pulse `ξ(t) = ξ_i + (ξ_f − ξ_i) exp(−(t − T)²/2σ_w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub xi_i: f64,
    pub xi_f: f64,
    /// Peak time `T`.
    pub t_peak: f64,
    pub sigma_w: f64,
}

impl GaussianPulse {
    /// Pulse with the usual width `σ_w = T/4`.
    pub fn quarter_width(xi_i: f64, xi_f: f64, t_peak: f64) -> Self {
        Self { xi_i, xi_f, t_peak, sigma_w: t_peak / 4.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi_i > 0.0 && self.xi_f > self.xi_i) {
            return Err(Error::Validation(format!(
                "Gaussian drive needs xi_f > xi_i > 0 (got xi_i = {}, xi_f = {})",
                self.xi_i, self.xi_f
            )));
        }
        check_flat_ends(self.t_peak, self.sigma_w)
    }

    fn envelope(&self, centre: f64, t: f64) -> (f64, f64) {
        let s = t - centre;
        let e = (-s * s / (2.0 * self.sigma_w * self.sigma_w)).exp();
        (e, -s / (self.sigma_w * self.sigma_w) * e)
    }
}

fn check_flat_ends(t_peak: f64, sigma_w: f64) -> Result<()> {
    if !(sigma_w > 0.0) || !(t_peak > 0.0) {
        return Err(Error::Validation("Gaussian peak time and width must be positive".into()));
    }
    if t_peak * t_peak / (2.0 * sigma_w * sigma_w) <= 1.0 {
        return Err(Error::Validation(format!(
            "Gaussian drive needs T^2/(2 sigma_w^2) > 1 (T = {t_peak}, sigma_w = {sigma_w})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveProfile {
    Gaussian(GaussianPulse),
    /// Identical Gaussians centred at `T + k·period`, `k = 0..count`.
    PulseTrain { pulse: GaussianPulse, period: f64, count: usize },
    Constant { xi: f64 },
    /// Triangular sweep `F_0 → F_0 + ΔF → F_0` over `[0, 2 t_s]`.
    TriangularRamp { f0: f64, df: f64, t_s: f64 },
    /// Laser amplitude `I(t) = I_0 exp(−(t − T)²/2σ_w²)`.
    GaussianAmplitude { i0: f64, t_peak: f64, sigma_w: f64 },
}

impl DriveProfile {
    /// Pulse train with the default period `2T`.
    pub fn pulse_train(pulse: GaussianPulse, count: usize) -> Self {
        DriveProfile::PulseTrain { period: 2.0 * pulse.t_peak, pulse, count }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriveProfile::Gaussian(p) => p.validate(),
            DriveProfile::PulseTrain { pulse, period, count } => {
                pulse.validate()?;
                if *count < 1 {
                    return Err(Error::Validation("pulse train needs at least one pulse".into()));
                }
                if !(*period > 0.0) {
                    return Err(Error::Validation("pulse train period must be positive".into()));
                }
                Ok(())
            }
            DriveProfile::Constant { xi } => {
                if !xi.is_finite() || *xi < 0.0 {
                    return Err(Error::Validation(format!("constant detuning must be finite and >= 0, got {xi}")));
                }
                Ok(())
            }
            DriveProfile::TriangularRamp { f0, df, t_s } => {
                if !(*t_s > 0.0) {
                    return Err(Error::Validation("triangular ramp needs t_s > 0".into()));
                }
                if !f0.is_finite() || !df.is_finite() {
                    return Err(Error::Validation("ramp amplitudes must be finite".into()));
                }
                Ok(())
            }
            DriveProfile::GaussianAmplitude { i0, t_peak, sigma_w } => {
                if !i0.is_finite() {
                    return Err(Error::Validation("laser amplitude must be finite".into()));
                }
                check_flat_ends(*t_peak, *sigma_w)
            }
        }
    }

    /// End of the evaluation domain `[0, end]`; `None` for unbounded drives.
    pub fn natural_duration(&self) -> Option<f64> {
        match self {
            DriveProfile::Gaussian(p) => Some(2.0 * p.t_peak),
            DriveProfile::PulseTrain { period, count, .. } => Some(*count as f64 * period),
            DriveProfile::Constant { .. } => None,
            DriveProfile::TriangularRamp { t_s, .. } => Some(2.0 * t_s),
            DriveProfile::GaussianAmplitude { t_peak, .. } => Some(2.0 * t_peak),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, DriveProfile::Constant { .. })
    }

    /// Value at t = 0.
    pub fn initial_value(&self) -> f64 {
        self.eval(0.0).map(|s| s.value).unwrap_or(0.0)
    }

    pub fn eval(&self, t: f64) -> Result<DriveSample> {
        let end = self.natural_duration().unwrap_or(f64::INFINITY);
        let slack = 1e-9 * end.max(1.0);
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::Domain { t, end });
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> DriveSample {
        match self {
            DriveProfile::Gaussian(p) => {
                let (e, de) = p.envelope(p.t_peak, t);
                let amp = p.xi_f - p.xi_i;
                DriveSample { value: p.xi_i + amp * e, derivative: amp * de }
            }
            DriveProfile::PulseTrain { pulse, period, count } => {
                let amp = pulse.xi_f - pulse.xi_i;
                let (mut v, mut d) = (0.0, 0.0);
                for k in 0..*count {
                    let (e, de) = pulse.envelope(pulse.t_peak + k as f64 * period, t);
                    v += e;
                    d += de;
                }
                DriveSample { value: pulse.xi_i + amp * v, derivative: amp * d }
            }
            DriveProfile::Constant { xi } => DriveSample { value: *xi, derivative: 0.0 },
            DriveProfile::TriangularRamp { f0, df, t_s } => {
                // rising branch owns the switch point
                if t <= *t_s {
                    DriveSample { value: f0 + t / t_s * df, derivative: df / t_s }
                } else {
                    DriveSample { value: f0 - (t - 2.0 * t_s) / t_s * df, derivative: -df / t_s }
                }
            }
            DriveProfile::GaussianAmplitude { i0, t_peak, sigma_w } => {
                let s = t - t_peak;
                let e = (-s * s / (2.0 * sigma_w * sigma_w)).exp();
                DriveSample { value: i0 * e, derivative: -i0 * s / (sigma_w * sigma_w) * e }
            }
        }
    }
}

/// Convenience wrapper matching the free-function form.
pub fn drive_eval(profile: &DriveProfile, t: f64) -> Result<DriveSample> {
    profile.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    /// Rotating at `ω_c` times the total excitation number.
    #[default]
    NumberRotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveCoupling {
    /// `f(t)` is a detuning multiplying a Hermitian number-like operator.
    AsDetuning,
    /// `f(t)` is a field amplitude multiplying a quadrature pair.
    AsAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Jch,
    DrivenJc,
    Kerr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JchParams {
    pub omega_c: f64,
    pub omega_a: f64,
    pub g: f64,
    pub j: f64,
    pub gamma_c: [f64; 2],
    pub gamma_a: [f64; 2],
    #[serde(default)]
    pub frame: Frame,
}

impl JchParams {
    /// Closed memristor with `g = 1`, `J = 10⁻² g`, `ω_c = ω_a = 10⁴ g`.
    pub fn closed_reference() -> Self {
        Self {
            omega_c: 1e4,
            omega_a: 1e4,
            g: 1.0,
            j: 1e-2,
            gamma_c: [0.0; 2],
            gamma_a: [0.0; 2],
            frame: Frame::NumberRotating,
        }
    }

    pub fn with_uniform_loss(mut self, gamma: f64) -> Self {
        self.gamma_c = [gamma; 2];
        self.gamma_a = [gamma; 2];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Validation(format!("g must be positive, got {}", self.g)));
        }
        if !(self.j >= 0.0) {
            return Err(Error::Validation(format!("J must be >= 0, got {}", self.j)));
        }
        if self.gamma_c.iter().chain(&self.gamma_a).any(|r| !(*r >= 0.0)) {
            return Err(Error::Validation("decay rates must be >= 0".into()));
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.gamma_c.iter().chain(&self.gamma_a).all(|r| *r == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivenJcParams {
    pub delta_a: f64,
    pub delta_c: f64,
    pub delta_1: f64,
    pub omega: f64,
    pub g: f64,
    pub gamma_c: f64,
    pub gamma_a: f64,
    pub drive: DriveProfile,
    pub n_max: usize,
    /// Integrate the field around its classical amplitude.
    #[serde(default)]
    pub displaced_frame: bool,
}

impl DrivenJcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Validation("g must be positive".into()));
        }
        if !(self.gamma_c >= 0.0 && self.gamma_a >= 0.0) {
            return Err(Error::Validation("decay rates must be >= 0".into()));
        }
        if !matches!(self.drive, DriveProfile::GaussianAmplitude { .. } | DriveProfile::Constant { .. }) {
            return Err(Error::Validation("driven JC expects a Gaussian amplitude drive".into()));
        }
        self.drive.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrParams {
    pub delta: f64,
    pub u: f64,
    pub gamma: f64,
    pub drive: DriveProfile,
    pub n_max: usize,
}

impl KerrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Validation("Kerr model needs gamma > 0".into()));
        }
        if !matches!(self.drive, DriveProfile::TriangularRamp { .. } | DriveProfile::Constant { .. }) {
            return Err(Error::Validation("Kerr model expects a triangular ramp drive".into()));
        }
        self.drive.validate()
    }
}

/// `X e^{iΔt} + X† e^{−iΔt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedTerm {
    pub op: OperatorMatrix,
    pub rate: f64,
}

/// Classical cavity amplitude `α(t)` solving `α̇ = I(t) − κα`, `α(0) = 0`,
/// with `κ = γ_c/2 + iΔ_c`. Writing `a = α + b` removes the cavity drive and
/// leaves the atom driven by `g(βσ† + β*σ)` with `β = α e^{−iΔ₁t}`, so only
/// the small field `b` needs a Fock cutoff.
#[derive(Debug, Clone)]
pub struct CoherentDisplacement {
    kappa: C64,
    phase_rate: f64,
    drive: DriveProfile,
    step: f64,
    samples: Vec<C64>,
    /// `g(σ + σ†)`, multiplied by Re β.
    pub quadrature_re: OperatorMatrix,
    /// `ig(σ† − σ)`, multiplied by Im β.
    pub quadrature_im: OperatorMatrix,
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl CoherentDisplacement {
    const GRID_STEP: f64 = 0.02;

    fn new(kappa: C64, phase_rate: f64, drive: DriveProfile, quadrature_re: OperatorMatrix, quadrature_im: OperatorMatrix) -> Self {
        let mut samples = vec![ZERO];
        if let (Some(end), false) = (drive.natural_duration(), drive.is_constant()) {
            let n = (end / Self::GRID_STEP).ceil() as usize;
            let h = end / n as f64;
            let decay = (-kappa * h).exp();
            let mut alpha = ZERO;
            for k in 0..n {
                let t0 = k as f64 * h;
                let t1 = t0 + h;
                // exact decay plus Gauss–Legendre forcing integral
                let mut forcing = ZERO;
                for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    let s = t0 + 0.5 * h * (1.0 + x);
                    forcing += (-kappa * (t1 - s)).exp() * (w * 0.5 * h * drive.eval_unchecked(s).value);
                }
                alpha = decay * alpha + forcing;
                samples.push(alpha);
            }
            return Self { kappa, phase_rate, drive, step: h, samples, quadrature_re, quadrature_im };
        }
        Self { kappa, phase_rate, drive, step: 0.0, samples, quadrature_re, quadrature_im }
    }

    /// Cavity amplitude `α(t)`.
    pub fn alpha(&self, t: f64) -> C64 {
        if self.step == 0.0 {
            // constant drive
            let i0 = self.drive.eval_unchecked(0.0).value;
            return if self.kappa == ZERO {
                C64::new(i0 * t, 0.0)
            } else {
                (ONE - (-self.kappa * t).exp()) * i0 / self.kappa
            };
        }
        let last = self.samples.len() - 1;
        let pos = (t / self.step).clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last.saturating_sub(1));
        let u = pos - k as f64;
        let (t0, t1) = (k as f64 * self.step, (k + 1) as f64 * self.step);
        let (y0, y1) = (self.samples[k], self.samples[k + 1]);
        let rate = |t: f64, y: C64| self.drive.eval_unchecked(t).value - self.kappa * y;
        let (d0, d1) = (rate(t0, y0) * self.step, rate(t1, y1) * self.step);
        // cubic Hermite
        let u2 = u * u;
        let u3 = u2 * u;
        y0 * (2.0 * u3 - 3.0 * u2 + 1.0) + d0 * (u3 - 2.0 * u2 + u) + y1 * (-2.0 * u3 + 3.0 * u2) + d1 * (u3 - u2)
    }

    /// Amplitude seen by the atom, `β(t) = α(t) e^{−iΔ₁t}`.
    pub fn atom_drive(&self, t: f64) -> C64 {
        self.alpha(t) * C64::from_polar(1.0, -self.phase_rate * t)
    }
}

#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub kind: ModelKind,
    pub layout: HilbertLayout,
    pub h_static: OperatorMatrix,
    pub h_coupling: OperatorMatrix,
    pub h_phased: Option<PhasedTerm>,
    pub drive: DriveProfile,
    /// `(rate, L)` pairs entering `rate·(LρL† − ½{L†L, ρ})`.
    pub collapse_ops: Vec<(f64, OperatorMatrix)>,
    pub frame: Frame,
    pub drive_enters: DriveCoupling,
    /// Atom–cavity coupling used for the instantaneous polariton basis.
    pub g: f64,
    /// Static atom–cavity detuning added to the drive (JCH) or used alone
    /// (driven JC) when building polariton projectors.
    pub polariton_offset: f64,
    /// Whether `H(t)` conserves the total excitation number and every
    /// collapse operator lowers it.
    pub excitation_conserving: bool,
    /// Present when the cavity field is integrated around a classical
    /// amplitude; observables are mapped back to the undisplaced frame.
    pub displacement: Option<CoherentDisplacement>,
}

impl ModelInstance {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Full Hamiltonian at time `t`.
    pub fn hamiltonian(&self, t: f64) -> Result<OperatorMatrix> {
        let f = self.drive.eval(t)?.value;
        Ok(self.hamiltonian_with_drive(t, f))
    }

    pub(crate) fn hamiltonian_with_drive(&self, t: f64, f: f64) -> OperatorMatrix {
        let mut h = self.h_static.entries.clone();
        h.scaled_add(C64::new(f, 0.0), &self.h_coupling.entries);
        if let Some(ph) = &self.h_phased {
            let phase = C64::from_polar(1.0, ph.rate * t);
            h.scaled_add(phase, &ph.op.entries);
            h.scaled_add(phase.conj(), &crate::linalg::dagger(&ph.op.entries));
        }
        if let Some(d) = &self.displacement {
            let beta = d.atom_drive(t);
            h.scaled_add(C64::new(beta.re, 0.0), &d.quadrature_re.entries);
            h.scaled_add(C64::new(beta.im, 0.0), &d.quadrature_im.entries);
        }
        OperatorMatrix { entries: h, label: "H(t)".into() }
    }

    /// Detuning at which the instantaneous polariton basis is evaluated.
    pub fn polariton_detuning(&self, drive_value: f64) -> Option<f64> {
        match self.kind {
            ModelKind::Jch => Some(self.polariton_offset + drive_value),
            ModelKind::DrivenJc => Some(self.polariton_offset),
            ModelKind::Kerr => None,
        }
    }

    /// Response operator per site: `N_i` on atom sites, `a_i†a_i` otherwise.
    pub fn site_number(&self, site: usize) -> Result<OperatorMatrix> {
        if self.layout.site(site)?.has_atom {
            ops::number_operator(site, &self.layout)
        } else {
            ops::photon_number(site, &self.layout)
        }
    }

    /// `a_i†a_i` expressed in the integration frame at time `t`.
    pub fn photon_number_at(&self, site: usize, t: f64) -> Result<OperatorMatrix> {
        let n = ops::photon_number(site, &self.layout)?;
        Ok(match &self.displacement {
            Some(d) => n.add(&self.displacement_shift(site, d.alpha(t))?),
            None => n,
        })
    }

    /// [`Self::site_number`] expressed in the integration frame at time `t`.
    pub fn site_number_at(&self, site: usize, t: f64) -> Result<OperatorMatrix> {
        let n = self.site_number(site)?;
        Ok(match &self.displacement {
            Some(d) => n.add(&self.displacement_shift(site, d.alpha(t))?),
            None => n,
        })
    }

    /// `α*b + αb† + |α|²`, the change of `a†a` under `a = α + b`.
    fn displacement_shift(&self, site: usize, alpha: C64) -> Result<OperatorMatrix> {
        let b = ops::photon_annihilation(site, &self.layout)?;
        Ok(b.scale(alpha.conj())
            .add(&b.dagger().scale(alpha))
            .add(&OperatorMatrix::identity(self.dim()).scale(C64::new(alpha.norm_sqr(), 0.0))))
    }
}

/// Two-cavity JCH memristor on a two-site layout.
pub fn build_jch(params: &JchParams, layout: &HilbertLayout, drive: DriveProfile) -> Result<ModelInstance> {
    params.validate()?;
    drive.validate()?;
    let sites = layout.sites();
    if sites.len() != 2 || !sites.iter().all(|s| s.has_atom) || sites[0].n_max != sites[1].n_max {
        return Err(invalid("JCH model needs two sites with atoms and equal photon cutoffs"));
    }
    let (omega_c, omega_a) = match params.frame {
        Frame::Lab => (params.omega_c, params.omega_a),
        Frame::NumberRotating => (0.0, params.omega_a - params.omega_c),
    };
    let dim = layout.dim();
    let mut h = OperatorMatrix::zeros(dim, "H_0");
    let mut h_coupling = OperatorMatrix::zeros(dim, "H_i");
    let mut collapse = Vec::new();
    let mut a_ops = Vec::new();
    for i in 0..2 {
        let a = ops::photon_annihilation(i, layout)?;
        let s = ops::atom_lowering_at(i, layout)?;
        let na = a.dagger().dot(&a);
        let ns = s.dagger().dot(&s);
        let jc = a.dot(&s.dagger()).add(&a.dagger().dot(&s));
        h = h
            .add(&na.scale(C64::new(omega_c, 0.0)))
            .add(&ns.scale(C64::new(omega_a, 0.0)))
            .add(&jc.scale(C64::new(params.g, 0.0)));
        h_coupling = h_coupling.add(&ns);
        collapse.push((params.gamma_c[i], a.clone()));
        collapse.push((params.gamma_a[i], s));
        a_ops.push(a);
    }
    let hop = a_ops[0].dot(&a_ops[1].dagger()).add(&a_ops[0].dagger().dot(&a_ops[1]));
    h = h.add(&hop.scale(C64::new(-params.j, 0.0)));
    collapse.retain(|(rate, _)| *rate > 0.0);
    Ok(ModelInstance {
        kind: ModelKind::Jch,
        layout: layout.clone(),
        h_static: h.with_label("H_0"),
        h_coupling: h_coupling.with_label("H_i"),
        h_phased: None,
        drive,
        collapse_ops: collapse,
        frame: params.frame,
        drive_enters: DriveCoupling::AsDetuning,
        g: params.g,
        polariton_offset: params.omega_a - params.omega_c,
        excitation_conserving: true,
        displacement: None,
    })
}

/// Single cavity with one atom, coherently driven on both the atom (Ω) and
/// the cavity (`I(t)`), in the frame rotating with the drive frequencies.
pub fn build_driven_jc(params: &DrivenJcParams) -> Result<ModelInstance> {
    params.validate()?;
    let layout = HilbertLayout::single(params.n_max, true)?;
    let a = ops::photon_annihilation(0, &layout)?;
    let s = ops::atom_lowering_at(0, &layout)?;
    let na = a.dagger().dot(&a);
    let ns = s.dagger().dot(&s);
    let mut h = na
        .scale(C64::new(params.delta_c, 0.0))
        .add(&ns.scale(C64::new(params.delta_a, 0.0)));
    // iΩ(σ† − σ)
    h = h.add(&s.dagger().add(&s.scale(-ONE)).scale(C64::new(0.0, params.omega)));
    // g a†σ e^{iΔ₁t} + h.c.
    let exchange = a.dagger().dot(&s).scale(C64::new(params.g, 0.0));
    let h_phased = if params.delta_1 == 0.0 {
        h = h.add(&exchange).add(&exchange.dagger());
        None
    } else {
        Some(PhasedTerm { op: exchange, rate: params.delta_1 })
    };
    let collapse: Vec<(f64, OperatorMatrix)> = [(params.gamma_c, a.clone()), (params.gamma_a, s.clone())]
        .into_iter()
        .filter(|(r, _)| *r > 0.0)
        .collect();
    let dim = layout.dim();
    let (h_drive, displacement) = if params.displaced_frame {
        let kappa = C64::new(0.5 * params.gamma_c, params.delta_c);
        let quad_re = s.add(&s.dagger()).scale(C64::new(params.g, 0.0)).with_label("g(σ + σ†)");
        let quad_im = s.dagger().add(&s.scale(-ONE)).scale(C64::new(0.0, params.g)).with_label("ig(σ† − σ)");
        let d = CoherentDisplacement::new(kappa, params.delta_1, params.drive.clone(), quad_re, quad_im);
        (OperatorMatrix::zeros(dim, "0"), Some(d))
    } else {
        // i(a† − a)
        (a.dagger().add(&a.scale(-ONE)).scale(I).with_label("i(a† − a)"), None)
    };
    Ok(ModelInstance {
        kind: ModelKind::DrivenJc,
        layout,
        h_static: h.with_label("H_1"),
        h_coupling: h_drive,
        h_phased,
        drive: params.drive.clone(),
        collapse_ops: collapse,
        frame: Frame::NumberRotating,
        drive_enters: DriveCoupling::AsAmplitude,
        g: params.g,
        polariton_offset: params.delta_a - params.delta_c,
        excitation_conserving: false,
        displacement,
    })
}

/// Driven Kerr resonator `−Δ a†a + (U/2) a†²a² + F(t)(a† + a)`.
pub fn build_kerr(params: &KerrParams) -> Result<ModelInstance> {
    params.validate()?;
    let layout = HilbertLayout::single(params.n_max, false)?;
    let a = ops::photon_annihilation(0, &layout)?;
    let ad = a.dagger();
    let n = ad.dot(&a);
    let pair = ad.dot(&ad).dot(&a).dot(&a);
    let h = n
        .scale(C64::new(-params.delta, 0.0))
        .add(&pair.scale(C64::new(0.5 * params.u, 0.0)));
    let h_drive = ad.add(&a).with_label("a† + a");
    Ok(ModelInstance {
        kind: ModelKind::Kerr,
        layout,
        h_static: h.with_label("H_KM"),
        h_coupling: h_drive,
        h_phased: None,
        drive: params.drive.clone(),
        collapse_ops: vec![(params.gamma, a)],
        frame: Frame::NumberRotating,
        drive_enters: DriveCoupling::AsAmplitude,
        g: 0.0,
        polariton_offset: 0.0,
        excitation_conserving: false,
        displacement: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn fig2_pulse(t_peak: f64) -> DriveProfile {
        DriveProfile::Gaussian(GaussianPulse::quarter_width(10.0, 1e3, t_peak))
    }

    #[test]
    fn gaussian_peak_and_flat_ends() {
        let d = fig2_pulse(80.0);
        let s = d.eval(80.0).unwrap();
        assert_eq!(s.value, 1e3);
        assert_eq!(s.derivative, 0.0);
        let s0 = d.eval(0.0).unwrap();
        assert!((s0.value - (10.0 + 990.0 * (-8f64).exp())).abs() < 1e-12);
        assert!((s0.value - d.eval(160.0).unwrap().value).abs() < 1e-12);
        assert!(matches!(d.eval(161.0), Err(Error::Domain { .. })));
        assert!(matches!(d.eval(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn gaussian_validation() {
        let bad = DriveProfile::Gaussian(GaussianPulse::quarter_width(10.0, 5.0, 80.0));
        assert!(bad.validate().is_err());
        let wide = DriveProfile::Gaussian(GaussianPulse { xi_i: 1.0, xi_f: 2.0, t_peak: 1.0, sigma_w: 1.0 });
        assert!(wide.validate().is_err());
        assert!(fig2_pulse(80.0).validate().is_ok());
    }

    #[test]
    fn ramp_is_continuous_at_switch() {
        let d = DriveProfile::TriangularRamp { f0: 1.0, df: 3.0, t_s: 30.0 };
        let left = d.eval(30.0 - 1e-12).unwrap().value;
        let right = d.eval(30.0 + 1e-12).unwrap().value;
        assert!((left - 4.0).abs() < 1e-9);
        assert!((right - 4.0).abs() < 1e-9);
        assert_eq!(d.eval(30.0).unwrap().value, 4.0);
        assert!((d.eval(60.0).unwrap().value - 1.0).abs() < 1e-12);
        assert_eq!(d.eval(0.0).unwrap().value, 1.0);
    }

    #[test]
    fn pulse_train_is_sum_of_gaussians() {
        let p = GaussianPulse::quarter_width(10.0, 1e3, 50.0);
        let train = DriveProfile::pulse_train(p, 3);
        assert_eq!(train.natural_duration(), Some(300.0));
        for k in 0..3 {
            let v = train.eval(50.0 + 100.0 * k as f64).unwrap().value;
            assert!((v - 1e3).abs() < 1e-6);
        }
        let single = DriveProfile::pulse_train(p, 1);
        let plain = DriveProfile::Gaussian(p);
        for t in [0.0, 13.0, 50.0, 77.7, 100.0] {
            assert_eq!(single.eval(t).unwrap(), plain.eval(t).unwrap());
        }
    }

    #[test]
    fn drive_derivatives_match_central_differences() {
        let drives = [
            fig2_pulse(78.5),
            DriveProfile::pulse_train(GaussianPulse::quarter_width(10.0, 1e3, 40.0), 3),
            DriveProfile::GaussianAmplitude { i0: 1.0, t_peak: 1e3, sigma_w: 250.0 },
            DriveProfile::TriangularRamp { f0: 1.0, df: 3.0, t_s: 30.0 },
        ];
        for d in &drives {
            let end = d.natural_duration().unwrap();
            for k in 1..40 {
                let t = end * k as f64 / 40.0 + 0.123;
                if t >= end - 1e-3 {
                    continue;
                }
                let h = 1e-4 * end.max(1.0) / 100.0;
                let fd = (d.eval(t + h).unwrap().value - d.eval(t - h).unwrap().value) / (2.0 * h);
                let an = d.eval(t).unwrap().derivative;
                let scale = an.abs().max(1e-3 * d.eval(t).unwrap().value.abs()).max(1e-8);
                assert!((fd - an).abs() / scale < 1e-6, "{d:?} t={t} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn jch_hermitian_and_conserves_excitations() {
        let layout = HilbertLayout::two_cavity(2).unwrap();
        for frame in [Frame::Lab, Frame::NumberRotating] {
            let params = JchParams { frame, ..JchParams::closed_reference() };
            let m = build_jch(&params, &layout, fig2_pulse(78.5)).unwrap();
            assert!(m.h_static.is_hermitian());
            assert!(m.h_coupling.is_hermitian());
            let n_tot = ops::number_operator(0, &layout).unwrap().add(&ops::number_operator(1, &layout).unwrap());
            for t in [0.0, 20.0, 78.5, 150.0] {
                let h = m.hamiltonian(t).unwrap();
                assert!(h.is_hermitian());
                assert!(h.commutator(&n_tot).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jch_decoupled_lab_frame_is_diagonal() {
        let layout = HilbertLayout::two_cavity(2).unwrap();
        let params = JchParams { g: 1e-300, j: 0.0, omega_c: 3.0, omega_a: 5.0, frame: Frame::Lab, ..JchParams::closed_reference() };
        let m = build_jch(&params, &layout, DriveProfile::Constant { xi: 0.0 }).unwrap();
        for i in 0..36 {
            let occ = layout.occupations(i);
            let expected: f64 = occ.iter().map(|&(n, e)| 3.0 * n as f64 + if e { 5.0 } else { 0.0 }).sum();
            assert!((m.h_static.entries[[i, i]].re - expected).abs() < 1e-12);
            for j in 0..36 {
                if i != j {
                    assert!(m.h_static.entries[[i, j]].norm() < 1e-290);
                }
            }
        }
    }

    #[test]
    fn rotating_frame_drops_optical_frequency() {
        let layout = HilbertLayout::two_cavity(2).unwrap();
        let a = build_jch(&JchParams::closed_reference(), &layout, fig2_pulse(78.5)).unwrap();
        let b = build_jch(&JchParams { omega_c: 7.0, omega_a: 7.0, ..JchParams::closed_reference() }, &layout, fig2_pulse(78.5)).unwrap();
        assert_eq!(a.h_static.entries, b.h_static.entries);
    }

    #[test]
    fn jch_collapse_ops_follow_rates() {
        let layout = HilbertLayout::two_cavity(2).unwrap();
        let closed = build_jch(&JchParams::closed_reference(), &layout, fig2_pulse(78.5)).unwrap();
        assert!(closed.collapse_ops.is_empty());
        let open = build_jch(&JchParams::closed_reference().with_uniform_loss(1e-2), &layout, fig2_pulse(78.5)).unwrap();
        assert_eq!(open.collapse_ops.len(), 4);
        let single = HilbertLayout::single(2, true).unwrap();
        assert!(build_jch(&JchParams::closed_reference(), &single, fig2_pulse(78.5)).is_err());
    }

    #[test]
    fn driven_jc_hermitian_at_random_times() {
        let p = DrivenJcParams {
            delta_a: 0.0,
            delta_c: 0.0,
            delta_1: 0.3,
            omega: 1e-6,
            g: 1.0,
            gamma_c: 0.1,
            gamma_a: 0.1,
            drive: DriveProfile::GaussianAmplitude { i0: 1.0, t_peak: 1e3, sigma_w: 250.0 },
            n_max: 6,
            displaced_frame: true,
        };
        let m = build_driven_jc(&p).unwrap();
        for t in [0.0, 17.3, 999.0, 1500.5] {
            assert!(m.hamiltonian(t).unwrap().hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn resonant_undriven_jc_keeps_vacuum() {
        let p = DrivenJcParams {
            delta_a: 0.0,
            delta_c: 0.0,
            delta_1: 0.0,
            omega: 0.0,
            g: 1.0,
            gamma_c: 0.1,
            gamma_a: 0.1,
            drive: DriveProfile::Constant { xi: 0.0 },
            n_max: 3,
            displaced_frame: true,
        };
        let m = build_driven_jc(&p).unwrap();
        let h = m.hamiltonian(5.0).unwrap();
        // H|0g⟩ = 0
        for i in 0..m.dim() {
            assert_eq!(h.entries[[i, 0]], linalg::ZERO);
        }
    }

    #[test]
    fn displacement_amplitude_solves_cavity_equation() {
        let drive = DriveProfile::GaussianAmplitude { i0: 1.0, t_peak: 60.0, sigma_w: 15.0 };
        let kappa = C64::new(0.05, 0.2);
        let zero = OperatorMatrix::zeros(2, "0");
        let d = CoherentDisplacement::new(kappa, 0.0, drive.clone(), zero.clone(), zero.clone());
        assert_eq!(d.alpha(0.0), ZERO);
        let h = 1e-3;
        for t in [0.5, 13.37, 59.99, 60.0, 101.234] {
            let fd = (d.alpha(t + h) - d.alpha(t - h)) / (2.0 * h);
            let exact = drive.eval(t).unwrap().value - kappa * d.alpha(t);
            assert!((fd - exact).norm() < 1e-6, "t={t}: {fd} vs {exact}");
        }
        let constant = CoherentDisplacement::new(kappa, 0.0, DriveProfile::Constant { xi: 2.0 }, zero.clone(), zero);
        assert!((constant.alpha(1e4) - 2.0 / kappa).norm() < 1e-12);
    }

    #[test]
    fn kerr_pair_term_on_fock_two() {
        let p = KerrParams {
            delta: 0.0,
            u: 0.1,
            gamma: 1.0,
            drive: DriveProfile::TriangularRamp { f0: 1.0, df: 3.0, t_s: 30.0 },
            n_max: 5,
        };
        let m = build_kerr(&p).unwrap();
        assert!((m.h_static.entries[[2, 2]].re - 0.1).abs() < 1e-14);
        assert!((m.h_static.entries[[3, 3]].re - 0.3).abs() < 1e-14);
        assert!(m.h_coupling.is_hermitian());
        assert_eq!(m.collapse_ops.len(), 1);
    }
}
