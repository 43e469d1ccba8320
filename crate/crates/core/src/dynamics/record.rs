use std::io::Write;

use ndarray::{Array1, Array2};

use super::dopri::IntegratorStats;
use super::{dissipator, DensityMatrix, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::model::{ModelInstance, ModelKind};
use crate::ops::{self, OperatorMatrix, PolaritonLabel};

/// Observables of one site, one entry per output sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiteRecord {
    /// ⟨N_i⟩ (or ⟨a†a⟩ on sites without an atom).
    pub mean: Vec<f64>,
    /// var[N_i] = Tr[N_i²ρ] − Tr[N_iρ]².
    pub variance: Vec<f64>,
    /// ⟨a_i†a_i⟩
    pub photons: Vec<f64>,
    /// Re{−i⟨[α_i, H_0]⟩ + Tr[α_i Dρ]} with α_i = (N_i − c)² − c², c = ⟨N_i⟩ frozen.
    pub circuit_a: Option<Vec<f64>>,
    /// Re{i⟨[α_i, H_i]⟩}
    pub circuit_b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRecord {
    pub labels: Vec<PolaritonLabel>,
    pub values: Vec<f64>,
}

impl PopulationRecord {
    pub fn name(&self) -> String {
        let parts: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        format!("p_{}", parts.join("_"))
    }
}

/// Time series recorded on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub times: Vec<f64>,
    /// Drive value (ξ, F or I).
    pub drive: Vec<f64>,
    pub drive_rate: Vec<f64>,
    pub sites: Vec<SiteRecord>,
    pub populations: Vec<PopulationRecord>,
    pub purity: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub hermiticity_error: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub tail_population: Vec<f64>,
    pub states: Option<Vec<DensityMatrix>>,
    pub stats: IntegratorStats,
}

/// Fixed leading columns of the trajectory CSV; per-site and population
/// columns follow (see [`Trajectory::csv_header`]).
pub const TRAJECTORY_COLUMNS: [&str; 3] = ["t", "drive", "drive_rate"];

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn variance(&self, site: usize) -> &[f64] {
        &self.sites[site].variance
    }

    pub fn population(&self, labels: &[PolaritonLabel]) -> Option<&[f64]> {
        self.populations.iter().find(|p| p.labels == labels).map(|p| p.values.as_slice())
    }

    /// Checks the per-sample state and population invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let dim_floor = 0.0;
        for k in 0..self.len() {
            let t = self.times[k];
            if self.trace_error[k] >= 1e-8 {
                return Err(format!("t={t}: trace error {:e}", self.trace_error[k]));
            }
            if self.hermiticity_error[k] > 1e-10 {
                return Err(format!("t={t}: hermiticity error {:e}", self.hermiticity_error[k]));
            }
            if self.min_eigenvalue[k] < -1e-8 {
                return Err(format!("t={t}: min eigenvalue {:e}", self.min_eigenvalue[k]));
            }
            if self.purity[k] > 1.0 + 1e-8 || self.purity[k] < dim_floor {
                return Err(format!("t={t}: purity {}", self.purity[k]));
            }
            let mut total = 0.0;
            for p in &self.populations {
                let v = p.values[k];
                if !(-1e-8..=1.0 + 1e-8).contains(&v) {
                    return Err(format!("t={t}: population {} = {v}", p.name()));
                }
                total += v;
            }
            if total > 1.0 + 1e-6 {
                return Err(format!("t={t}: populations sum to {total}"));
            }
            for (i, s) in self.sites.iter().enumerate() {
                if s.variance[k] < -1e-8 {
                    return Err(format!("t={t}: negative variance {} on site {i}", s.variance[k]));
                }
            }
        }
        Ok(())
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols: Vec<String> = TRAJECTORY_COLUMNS.iter().map(|s| s.to_string()).collect();
        for i in 1..=self.sites.len() {
            cols.push(format!("mean_N{i}"));
            cols.push(format!("var_N{i}"));
            cols.push(format!("photons{i}"));
            if self.sites[i - 1].circuit_a.is_some() {
                cols.push(format!("circuit_a{i}"));
                cols.push(format!("circuit_b{i}"));
            }
        }
        cols.extend(self.populations.iter().map(|p| p.name()));
        for c in ["purity", "trace_error", "min_eigenvalue", "tail_population"] {
            cols.push(c.to_string());
        }
        cols
    }

    /// One row per sample, 15 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header().join(","))?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k], self.drive[k], self.drive_rate[k]];
            for s in &self.sites {
                row.extend([s.mean[k], s.variance[k], s.photons[k]]);
                if let (Some(a), Some(b)) = (&s.circuit_a, &s.circuit_b) {
                    row.extend([a[k], b[k]]);
                }
            }
            row.extend(self.populations.iter().map(|p| p.values[k]));
            row.extend([self.purity[k], self.trace_error[k], self.min_eigenvalue[k], self.tail_population[k]]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.14e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

struct SiteOps {
    number: Array2<C64>,
    number_sq: Array2<C64>,
    photons: Array2<C64>,
}

pub(crate) struct Recorder<'a> {
    model: &'a ModelInstance,
    cfg: &'a IntegratorConfig,
    site_ops: Vec<SiteOps>,
    /// Diagonal indices whose occupation counts towards the tail.
    tail_indices: Vec<usize>,
    traj: Trajectory,
}

fn default_populations(model: &ModelInstance) -> Vec<Vec<PolaritonLabel>> {
    match model.kind {
        ModelKind::Jch => vec![
            vec![PolaritonLabel::minus(1), PolaritonLabel::minus(1)],
            vec![PolaritonLabel::minus(2), PolaritonLabel::ground()],
            vec![PolaritonLabel::ground(), PolaritonLabel::minus(2)],
        ],
        ModelKind::DrivenJc if model.displacement.is_some() => Vec::new(),
        ModelKind::DrivenJc => vec![
            vec![PolaritonLabel::ground()],
            vec![PolaritonLabel::minus(1)],
            vec![PolaritonLabel::plus(1)],
        ],
        ModelKind::Kerr => Vec::new(),
    }
}

fn tail_indices(model: &ModelInstance) -> Vec<usize> {
    let layout = &model.layout;
    let n_max = layout.sites().iter().map(|s| s.n_max).min().unwrap_or(0);
    (0..layout.dim())
        .filter(|&idx| {
            let occ = layout.occupations(idx);
            if model.excitation_conserving {
                // only sectors able to push a photon past the cutoff
                occ.iter().map(|&(n, e)| n + usize::from(e)).sum::<usize>() > n_max
            } else {
                occ.iter().zip(layout.sites()).any(|(&(n, _), s)| n == s.n_max)
            }
        })
        .collect()
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(model: &'a ModelInstance, cfg: &'a IntegratorConfig, times: Vec<f64>) -> Result<Self> {
        let n_sites = model.layout.num_sites();
        let mut site_ops = Vec::with_capacity(n_sites);
        for i in 0..n_sites {
            let number = model.site_number(i)?.entries;
            let number_sq = number.dot(&number);
            let photons = ops::photon_number(i, &model.layout)?.entries;
            site_ops.push(SiteOps { number, number_sq, photons });
        }
        let populations = cfg.record.populations.clone().unwrap_or_else(|| default_populations(model));
        if model.displacement.is_some() && (!populations.is_empty() || cfg.record.circuit) {
            return Err(Error::InvalidArgument(
                "polariton populations and circuit inputs are not recorded in the displaced frame".into(),
            ));
        }
        for labels in &populations {
            if labels.len() != n_sites {
                return Err(Error::InvalidArgument(format!("population probe needs {n_sites} labels")));
            }
            for (l, s) in labels.iter().zip(model.layout.sites()) {
                l.validate()?;
                if l.n > s.n_max {
                    return Err(Error::InvalidArgument(format!("population label {l} exceeds the cutoff")));
                }
            }
            if model.polariton_detuning(0.0).is_none() {
                return Err(Error::InvalidArgument("population probes need a model with atoms".into()));
            }
        }
        let n = times.len();
        let site = SiteRecord {
            mean: Vec::with_capacity(n),
            variance: Vec::with_capacity(n),
            photons: Vec::with_capacity(n),
            circuit_a: cfg.record.circuit.then(|| Vec::with_capacity(n)),
            circuit_b: cfg.record.circuit.then(|| Vec::with_capacity(n)),
        };
        let traj = Trajectory {
            kind: model.kind,
            times,
            drive: Vec::with_capacity(n),
            drive_rate: Vec::with_capacity(n),
            sites: vec![site; n_sites],
            populations: populations
                .into_iter()
                .map(|labels| PopulationRecord { labels, values: Vec::with_capacity(n) })
                .collect(),
            purity: Vec::with_capacity(n),
            trace_error: Vec::with_capacity(n),
            hermiticity_error: Vec::with_capacity(n),
            min_eigenvalue: Vec::with_capacity(n),
            tail_population: Vec::with_capacity(n),
            states: cfg.record.states.then(|| Vec::with_capacity(n)),
            stats: IntegratorStats::default(),
        };
        Ok(Self { model, cfg, site_ops, tail_indices: tail_indices(model), traj })
    }

    pub(crate) fn record(&mut self, k: usize, y: &[C64]) -> Result<()> {
        let t = self.traj.times[k];
        let dim = self.model.dim();
        let rho = Array2::from_shape_vec((dim, dim), y.to_vec()).expect("state length matches dim²");
        let drive = self.model.drive.eval_unchecked(t);
        self.traj.drive.push(drive.value);
        self.traj.drive_rate.push(drive.derivative);

        let tail: f64 = self.tail_indices.iter().map(|&i| rho[[i, i]].re).sum();
        self.traj.tail_population.push(tail);
        if tail > self.cfg.cutoff_tail_threshold {
            return Err(Error::CutoffOverflow { time: t, tail, threshold: self.cfg.cutoff_tail_threshold });
        }

        let tr = linalg::trace(&rho);
        self.traj.trace_error.push((tr - C64::new(1.0, 0.0)).norm());
        self.traj.hermiticity_error.push(linalg::hermiticity_error(&rho));
        self.traj.purity.push(rho.iter().map(|z| z.norm_sqr()).sum());
        self.traj.min_eigenvalue.push(linalg::hermitian_eigenvalues(&rho)[0]);

        let circuit = self.cfg.record.circuit.then(|| self.circuit_context(t, drive.value, &rho));
        if self.model.displacement.is_some() {
            for (i, ops) in self.site_ops.iter_mut().enumerate() {
                ops.number = self.model.site_number_at(i, t)?.entries;
                ops.number_sq = ops.number.dot(&ops.number);
                ops.photons = self.model.photon_number_at(i, t)?.entries;
            }
        }
        for (i, ops) in self.site_ops.iter().enumerate() {
            let mean = linalg::trace_product(&ops.number, &rho).re;
            let second = linalg::trace_product(&ops.number_sq, &rho).re;
            let rec = &mut self.traj.sites[i];
            rec.mean.push(mean);
            rec.variance.push(second - mean * mean);
            rec.photons.push(linalg::trace_product(&ops.photons, &rho).re);
            if let Some((h0_comm, hi_comm, diss)) = &circuit {
                // α = N² − 2cN with c = ⟨N⟩ frozen at this instant
                let alpha = &ops.number_sq - &(&ops.number * C64::new(2.0 * mean, 0.0));
                let a = (C64::new(0.0, -1.0) * linalg::trace_product(&alpha, h0_comm)
                    + linalg::trace_product(&alpha, diss))
                .re;
                let b = (C64::new(0.0, 1.0) * linalg::trace_product(&alpha, hi_comm)).re;
                rec.circuit_a.as_mut().expect("allocated").push(a);
                rec.circuit_b.as_mut().expect("allocated").push(b);
            }
        }

        if !self.traj.populations.is_empty() {
            let detuning = self.model.polariton_detuning(drive.value).expect("checked in new");
            for p in &mut self.traj.populations {
                let psi: Array1<C64> = ops::polariton_product(&p.labels, detuning, self.model.g, &self.model.layout)?;
                p.values.push(linalg::expectation_vec(&rho, &psi).re);
            }
        }

        if let Some(states) = &mut self.traj.states {
            states.push(DensityMatrix { entries: rho });
        }
        Ok(())
    }

    /// `([H_0, ρ], [H_i, ρ], Dρ)` at time `t`.
    fn circuit_context(&self, t: f64, drive: f64, rho: &Array2<C64>) -> (Array2<C64>, Array2<C64>, Array2<C64>) {
        let full: OperatorMatrix = self.model.hamiltonian_with_drive(t, drive);
        let h0 = &full.entries - &(&self.model.h_coupling.entries * C64::new(drive, 0.0));
        let h0_comm = linalg::commutator(&h0, rho);
        let hi_comm = linalg::commutator(&self.model.h_coupling.entries, rho);
        (h0_comm, hi_comm, dissipator(rho, self.model))
    }

    pub(crate) fn finish(mut self, stats: IntegratorStats) -> Trajectory {
        self.traj.stats = stats;
        self.traj
    }
}
