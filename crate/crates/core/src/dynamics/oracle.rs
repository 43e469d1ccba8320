//! Reference propagation by exponentiating the vectorised generator.
//!
//! Row-major vectorisation: `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`. Each step composes
//! two exponentials of the generator frozen at the Gauss nodes of the step,
//! which is fourth-order accurate for time-dependent drives and exact for
//! constant ones.

use ndarray::{Array1, Array2};

use super::generator::SparseOp;
use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, I};
use crate::model::ModelInstance;

/// Largest Hilbert dimension the reference propagator accepts.
pub const ORACLE_MAX_DIM: usize = 40;

fn check_scale(dim: usize) -> Result<()> {
    if dim > ORACLE_MAX_DIM {
        return Err(Error::OracleScaleExceeded { dim, limit: ORACLE_MAX_DIM });
    }
    Ok(())
}

/// `ρ ↦ −i(Xρ − ρX)` as a superoperator; `X` need not be Hermitian.
fn commutator_super(x: &Array2<C64>) -> Array2<C64> {
    let n = x.nrows();
    let mut l = Array2::zeros((n * n, n * n));
    for ((i, k), &v) in x.indexed_iter().filter(|(_, v)| **v != C64::new(0.0, 0.0)) {
        for j in 0..n {
            // (Xρ)_ij ∋ X_ik ρ_kj
            l[[i * n + j, k * n + j]] += -I * v;
            // (ρX)_jk ∋ ρ_ji X_ik
            l[[j * n + k, j * n + i]] += I * v;
        }
    }
    l
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    One,
    Drive,
    Phase(f64),
    PhaseConj(f64),
    AtomDriveRe,
    AtomDriveIm,
}

/// The generator split into fixed superoperators with scalar weights.
struct Pieces<'a> {
    model: &'a ModelInstance,
    parts: Vec<(Weight, Array2<C64>)>,
}

impl<'a> Pieces<'a> {
    fn new(model: &'a ModelInstance) -> Result<Self> {
        let dim = model.dim();
        check_scale(dim)?;
        let id = linalg::eye(dim);
        let mut fixed = commutator_super(&model.h_static.entries);
        for (gamma, op) in &model.collapse_ops {
            let c = &op.entries;
            let ldl = linalg::dagger(c).dot(c);
            let g = C64::new(*gamma, 0.0);
            fixed = fixed
                + (linalg::kron(c, &c.mapv(|z| z.conj()))
                    - linalg::kron(&ldl, &id) * 0.5
                    - linalg::kron(&id, &ldl.t().to_owned()) * 0.5)
                    * g;
        }
        let mut parts = vec![(Weight::One, fixed)];
        parts.push((Weight::Drive, commutator_super(&model.h_coupling.entries)));
        if let Some(ph) = &model.h_phased {
            parts.push((Weight::Phase(ph.rate), commutator_super(&ph.op.entries)));
            parts.push((Weight::PhaseConj(ph.rate), commutator_super(&linalg::dagger(&ph.op.entries))));
        }
        if let Some(d) = &model.displacement {
            parts.push((Weight::AtomDriveRe, commutator_super(&d.quadrature_re.entries)));
            parts.push((Weight::AtomDriveIm, commutator_super(&d.quadrature_im.entries)));
        }
        Ok(Self { model, parts })
    }

    fn weights(&self, t: f64) -> Result<Vec<C64>> {
        let f = self.model.drive.eval(t)?.value;
        let beta = self.model.displacement.as_ref().map_or(C64::new(0.0, 0.0), |d| d.atom_drive(t));
        Ok(self
            .parts
            .iter()
            .map(|(w, _)| match *w {
                Weight::One => C64::new(1.0, 0.0),
                Weight::Drive => C64::new(f, 0.0),
                Weight::Phase(r) => C64::from_polar(1.0, r * t),
                Weight::PhaseConj(r) => C64::from_polar(1.0, -r * t),
                Weight::AtomDriveRe => C64::new(beta.re, 0.0),
                Weight::AtomDriveIm => C64::new(beta.im, 0.0),
            })
            .collect())
    }

    /// `Σ_p (Σ_k c_k w_p(t_k)) L_p` for weighted sample times `(c_k, t_k)`.
    fn combine(&self, samples: &[(f64, f64)]) -> Result<Array2<C64>> {
        let mut coeffs = vec![C64::new(0.0, 0.0); self.parts.len()];
        for &(c, t) in samples {
            for (acc, w) in coeffs.iter_mut().zip(self.weights(t)?) {
                *acc += c * w;
            }
        }
        let n = self.parts[0].1.nrows();
        let mut out = Array2::zeros((n, n));
        for ((_, l), c) in self.parts.iter().zip(coeffs) {
            if c != C64::new(0.0, 0.0) {
                out.scaled_add(c, l);
            }
        }
        Ok(out)
    }

    /// One step of `exp(dt(a₂L₁ + a₁L₂))·exp(dt(a₁L₁ + a₂L₂))` with
    /// `L₁, L₂` frozen at `t + (½ ∓ √3/6)dt`.
    fn step(&self, v: &Array1<C64>, t: f64, dt: f64) -> Result<Array1<C64>> {
        let (early, late) = (0.25 + SQRT3_6, 0.25 - SQRT3_6);
        let (t1, t2) = (t + (0.5 - SQRT3_6) * dt, t + (0.5 + SQRT3_6) * dt);
        let first = self.combine(&[(early * dt, t1), (late * dt, t2)])?;
        let second = self.combine(&[(late * dt, t1), (early * dt, t2)])?;
        Ok(exp_action(&second, &exp_action(&first, v)))
    }
}

fn exp_action(l: &Array2<C64>, v: &Array1<C64>) -> Array1<C64> {
    let sparse = SparseOp::from_dense(l);
    linalg::expm_multiply(|x| sparse.matvec(x), sparse.one_norm(), v)
}

/// Superoperator matrix of the master equation with the Hamiltonian frozen
/// at time `t`.
pub fn liouvillian(model: &ModelInstance, t: f64) -> Result<Array2<C64>> {
    Pieces::new(model)?.combine(&[(1.0, t)])
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9;

fn to_vec(rho: &Array2<C64>) -> Array1<C64> {
    rho.iter().copied().collect()
}

fn to_matrix(v: Array1<C64>, dim: usize) -> Array2<C64> {
    Array2::from_shape_vec((dim, dim), v.to_vec()).expect("square")
}

/// Advances `rho` from `t` to `t + dt` in one composed step.
pub fn oracle_step(rho: &DensityMatrix, model: &ModelInstance, t: f64, dt: f64) -> Result<DensityMatrix> {
    if rho.dim() != model.dim() {
        return Err(Error::InvalidArgument("state dimension does not match the model".into()));
    }
    let v = Pieces::new(model)?.step(&to_vec(rho.entries()), t, dt)?;
    DensityMatrix::new(to_matrix(v, rho.dim()))
}

/// Propagates over `[0, duration]` in `steps` composed steps and returns the
/// state after every step. A time-independent generator is built once.
pub fn oracle_evolve(rho0: &DensityMatrix, model: &ModelInstance, duration: f64, steps: usize) -> Result<Vec<DensityMatrix>> {
    if steps == 0 || !(duration > 0.0) {
        return Err(Error::InvalidArgument("oracle needs a positive duration and step count".into()));
    }
    check_scale(model.dim())?;
    if rho0.dim() != model.dim() {
        return Err(Error::InvalidArgument("state dimension does not match the model".into()));
    }
    let dim = model.dim();
    let dt = duration / steps as f64;
    let pieces = Pieces::new(model)?;
    let frozen = if model.drive.is_constant() && model.h_phased.is_none() && model.displacement.is_none() {
        Some(SparseOp::from_dense(&pieces.combine(&[(dt, 0.0)])?))
    } else {
        None
    };
    let mut out = Vec::with_capacity(steps);
    let mut v = to_vec(rho0.entries());
    for k in 0..steps {
        v = match &frozen {
            Some(l) => linalg::expm_multiply(|x| l.matvec(x), l.one_norm(), &v),
            None => pieces.step(&v, k as f64 * dt, dt)?,
        };
        out.push(DensityMatrix::new(to_matrix(v.clone(), dim))?);
    }
    Ok(out)
}
