//! Hysteresis loops, loop-area law, critical time and the circuit analogy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DensityMatrix, InitialStateSpec, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::model::{DriveProfile, JchParams, ModelInstance};
use crate::ops::PolaritonLabel;

/// Relative size of the degeneracy band: `ε_A = 1e-3·|x-range|·|y-range|`.
pub const DEGENERACY_FRACTION: f64 = 1e-3;
/// `R` is reported only where `|ξ̇| > 1e-3·max|ξ̇|`.
pub const RESISTANCE_CUTOFF: f64 = 1e-3;

/// Oriented area `−∮ y dx` of the polyline closed from the last sample back
/// to the first.
pub fn loop_area_numeric(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(invalid(format!("series lengths differ ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(invalid("a loop needs at least 3 samples"));
    }
    let n = x.len();
    let mut area = 0.0;
    for k in 0..n {
        let next = (k + 1) % n;
        area -= 0.5 * (y[k] + y[next]) * (x[next] - x[k]);
    }
    Ok(area)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Circulation {
    Anticlockwise,
    Clockwise,
    Degenerate,
}

impl Circulation {
    pub fn classify(area: f64, epsilon: f64) -> Self {
        if area > epsilon {
            Circulation::Anticlockwise
        } else if area < -epsilon {
            Circulation::Clockwise
        } else {
            Circulation::Degenerate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Circulation::Anticlockwise => "anticlockwise",
            Circulation::Clockwise => "clockwise",
            Circulation::Degenerate => "degenerate",
        }
    }
}

fn range(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Default degeneracy band of a parametric curve.
pub fn default_epsilon(x: &[f64], y: &[f64]) -> f64 {
    DEGENERACY_FRACTION * range(x) * range(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisLoop {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub signed_area: f64,
    pub circulation: Circulation,
    pub epsilon: f64,
}

impl HysteresisLoop {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let eps = default_epsilon(&x, &y);
        Self::with_epsilon(x, y, eps)
    }

    pub fn with_epsilon(x: Vec<f64>, y: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(invalid("degeneracy threshold must be >= 0"));
        }
        let signed_area = loop_area_numeric(&x, &y)?;
        Ok(Self { circulation: Circulation::classify(signed_area, epsilon), x, y, signed_area, epsilon })
    }

    /// Control vs. response of `site` (variance, or photon number for
    /// models without an atom).
    pub fn from_trajectory(traj: &Trajectory, site: usize) -> Result<Self> {
        let rec = traj.sites.get(site).ok_or_else(|| invalid(format!("no site {site} in trajectory")))?;
        let y = if traj.kind == crate::model::ModelKind::Jch { rec.variance.clone() } else { rec.photons.clone() };
        Self::new(traj.drive.clone(), y)
    }

    /// `y_end − y_start`.
    pub fn endpoint_gap(&self) -> f64 {
        self.y[self.y.len() - 1] - self.y[0]
    }

    /// Magnitude of the area contributed by the chord closing the curve.
    pub fn closure_defect(&self) -> f64 {
        let n = self.x.len();
        (0.5 * (self.y[n - 1] + self.y[0]) * (self.x[0] - self.x[n - 1])).abs()
    }

    pub fn is_closed(&self) -> bool {
        self.closure_defect() <= self.epsilon
    }
}

/// Inputs of the closed-system loop-area law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaPrediction {
    pub xi_i: f64,
    pub xi_f: f64,
    pub sigma_w: f64,
    pub t_peak: f64,
    pub tau: f64,
    /// `1 − 2·var[N_i(0)]`
    pub eta: f64,
}

impl AreaPrediction {
    pub fn predicted_area(&self) -> Result<f64> {
        loop_area_analytic(self)
    }
}

/// `A ≈ (η/√2)(ξ_f − ξ_i) π^{3/2} (σ_w/τ) sin(πT/τ) exp(−(πσ_w/(√2τ))²)`.
pub fn loop_area_analytic(pred: &AreaPrediction) -> Result<f64> {
    if !(pred.tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {}", pred.tau)));
    }
    let ratio = pred.sigma_w / pred.tau;
    let phase = PI * pred.t_peak / pred.tau;
    // exact zero at T = τ
    let sine = if (pred.t_peak - pred.tau).abs() <= 1e-15 * pred.tau { 0.0 } else { phase.sin() };
    let damping = (-(PI * ratio / std::f64::consts::SQRT_2).powi(2)).exp();
    Ok(pred.eta / std::f64::consts::SQRT_2 * (pred.xi_f - pred.xi_i) * PI.powf(1.5) * ratio * sine * damping)
}

/// `τ = π/(4J)`.
pub fn estimate_tau(params: &JchParams) -> Result<f64> {
    if !(params.j > 0.0) {
        return Err(invalid("tau needs a positive hopping J"));
    }
    Ok(PI / (4.0 * params.j))
}

/// First time `p_{1−,1−}` reaches its minimum, refined by a parabola through
/// the neighbouring samples.
pub fn estimate_tau_empirical(traj: &Trajectory) -> Result<f64> {
    let mott = [PolaritonLabel::minus(1), PolaritonLabel::minus(1)];
    let p = traj.population(&mott).ok_or_else(|| invalid("trajectory does not record p[1-,1-]"))?;
    let (k, &min) = p
        .iter()
        .enumerate()
        .fold((0, &f64::INFINITY), |best, (k, v)| if *v < *best.1 { (k, v) } else { best });
    if !(min < 0.5) {
        return Err(Error::NoCrossing);
    }
    let t = &traj.times;
    if k == 0 || k + 1 == p.len() {
        return Ok(t[k]);
    }
    let (y0, y1, y2) = (p[k - 1], p[k], p[k + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature <= 0.0 {
        return Ok(t[k]);
    }
    let shift = (0.5 * (y0 - y2) / curvature).clamp(-1.0, 1.0);
    let h = if shift >= 0.0 { t[k + 1] - t[k] } else { t[k] - t[k - 1] };
    Ok(t[k] + shift * h)
}

/// Derivative on a uniform grid: central differences inside, second-order
/// one-sided stencils at both ends.
pub fn uniform_derivative(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![(y[1] - y[0]) / h; 2],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
                } else if k + 1 == n {
                    (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h)
                } else {
                    (y[k + 1] - y[k - 1]) / (2.0 * h)
                }
            })
            .collect(),
    }
}

/// Circuit picture `ẏ = a − bξ`, `V_R = ẏ = R ξ̇`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSeries {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_dot: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub v_r: Vec<f64>,
    /// `dy/dξ`, absent where the drive is nearly stationary.
    pub r: Vec<Option<f64>>,
}

impl CircuitSeries {
    /// Largest `|ẏ − (a − bξ)|` over interior samples.
    pub fn ehrenfest_residual(&self) -> f64 {
        let n = self.t.len();
        (1..n.saturating_sub(1))
            .map(|k| (self.v_r[k] - (self.a[k] - self.b[k] * self.xi[k])).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_v(&self) -> f64 {
        self.v_r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest distance of the `(ξ̇, V_R)` curve from the origin, with each
    /// axis scaled by its largest magnitude.
    pub fn pinch_distance(&self) -> f64 {
        let sx = self.xi_dot.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let sv = self.max_abs_v().max(f64::MIN_POSITIVE);
        self.xi_dot
            .iter()
            .zip(&self.v_r)
            .map(|(x, v)| ((x / sx).powi(2) + (v / sv).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn circuit_series(traj: &Trajectory, site: usize) -> Result<CircuitSeries> {
    let rec = traj.sites.get(site).ok_or_else(|| invalid(format!("no site {site} in trajectory")))?;
    let (a, b) = match (&rec.circuit_a, &rec.circuit_b) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(invalid("trajectory was recorded without circuit inputs")),
    };
    if traj.len() < 3 {
        return Err(invalid("circuit series needs at least 3 samples"));
    }
    let h = traj.times[1] - traj.times[0];
    let y = rec.variance.clone();
    let v_r = uniform_derivative(&y, h);
    let xi_dot = traj.drive_rate.clone();
    let cutoff = RESISTANCE_CUTOFF * xi_dot.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let r = v_r
        .iter()
        .zip(&xi_dot)
        .map(|(v, d)| if d.abs() > cutoff { Some(v / d) } else { None })
        .collect();
    Ok(CircuitSeries { t: traj.times.clone(), y, xi: traj.drive.clone(), xi_dot, a, b, v_r, r })
}

/// `η = 1 − 2·var[N_site]` of a density matrix.
pub fn eta_from_density(rho: &DensityMatrix, model: &ModelInstance, site: usize) -> Result<f64> {
    let n = model.site_number(site)?;
    let mean = rho.expectation(&n).re;
    let second = rho.expectation(&n.dot(&n)).re;
    Ok(1.0 - 2.0 * (second - mean * mean))
}

/// `η` of an initial-state description on `model`.
pub fn eta_from_state(init: &InitialStateSpec, model: &ModelInstance, site: usize) -> Result<f64> {
    eta_from_density(&init.build(model)?, model, site)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralSegment {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub signed_area: f64,
    pub circulation: Circulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralReport {
    pub segments: Vec<SpiralSegment>,
    /// Area band used for per-pulse circulation.
    pub epsilon_area: f64,
    /// Response band used for endpoint comparisons, `1e-3·|y-range|`.
    pub epsilon_response: f64,
    /// `y_end` of each pulse minus `y_end` of the previous one.
    pub endpoint_steps: Vec<f64>,
}

impl SpiralReport {
    /// True when every pair of consecutive pulse endpoints differs by more
    /// than the response band.
    pub fn is_spiral(&self) -> bool {
        !self.endpoint_steps.is_empty() && self.endpoint_steps.iter().all(|d| d.abs() > self.epsilon_response)
    }
}

/// Splits a pulse-train trajectory at period boundaries and reports each
/// pulse's loop.
pub fn spiral_report(traj: &Trajectory, drive: &DriveProfile, site: usize) -> Result<SpiralReport> {
    let (period, count) = match drive {
        DriveProfile::PulseTrain { period, count, .. } => (*period, *count),
        _ => return Err(invalid("spiral report needs a pulse-train drive")),
    };
    let full = HysteresisLoop::from_trajectory(traj, site)?;
    let epsilon_area = full.epsilon;
    let epsilon_response = DEGENERACY_FRACTION * range(&full.y);
    let times = &traj.times;
    let mut segments = Vec::with_capacity(count);
    for k in 0..count {
        let (t0, t1) = (k as f64 * period, (k + 1) as f64 * period);
        let tol = 1e-9 * period;
        let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t0 - tol && times[i] <= t1 + tol).collect();
        if idx.len() < 3 {
            return Err(invalid(format!("pulse {k} has fewer than 3 samples")));
        }
        let x: Vec<f64> = idx.iter().map(|&i| full.x[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| full.y[i]).collect();
        let area = loop_area_numeric(&x, &y)?;
        segments.push(SpiralSegment {
            index: k,
            t_start: times[idx[0]],
            t_end: times[*idx.last().expect("non-empty")],
            y_start: y[0],
            y_end: y[y.len() - 1],
            signed_area: area,
            circulation: Circulation::classify(area, epsilon_area),
        });
    }
    let endpoint_steps = segments.windows(2).map(|w| w[1].y_end - w[0].y_end).collect();
    Ok(SpiralReport { segments, epsilon_area, epsilon_response, endpoint_steps })
}
