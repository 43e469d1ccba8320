//! Sparse evaluation of the Lindblad generator used inside the integrator.
//!
//! Every model operator is banded in the Fock basis, so the generator keeps
//! row-compressed copies of the Hamiltonian pieces and collapse operators
//! and applies them to the dense density matrix.

use ndarray::{Array1, Array2};

use crate::linalg::{C64, I, ZERO};
use crate::model::{CoherentDisplacement, ModelInstance};

#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    pub(crate) fn from_dense(m: &Array2<C64>) -> Self {
        let dim = m.nrows();
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[[i, j]];
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self { dim, row_start, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub(crate) fn matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        Array1::from_iter((0..self.dim).map(|i| self.row(i).map(|(k, a)| a * v[k]).sum::<C64>()))
    }

    /// Largest column sum of magnitudes.
    pub(crate) fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for (&c, v) in self.cols.iter().zip(&self.vals) {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// out += c · A ρ
    fn left_acc(&self, c: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for (k, a) in self.row(i) {
                let s = c * a;
                let rho_row = &rho[k * n..(k + 1) * n];
                for (o, r) in out_row.iter_mut().zip(rho_row) {
                    *o += s * r;
                }
            }
        }
    }

    /// out += γ · L ρ L†
    fn sandwich_acc(&self, gamma: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for i in 0..n {
            for (k, lik) in self.row(i) {
                let left = lik * gamma;
                for j in 0..n {
                    for (l, ljl) in self.row(j) {
                        out[i * n + j] += left * rho[k * n + l] * ljl.conj();
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Coefficient {
    One,
    Drive,
    Phase(f64),
    PhaseConj(f64),
    AtomDriveRe,
    AtomDriveIm,
}

/// A non-Hermitian Hamiltonian piece `c(t)·A`.
#[derive(Debug, Clone)]
struct Term {
    op: SparseOp,
    coeff: Coefficient,
}

/// `M ← M + M†`, in cache-sized tiles.
fn add_adjoint_in_place(m: &mut [C64], n: usize) {
    const TILE: usize = 32;
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let j0 = if bi == bj { i } else { bj };
                for j in j0..(bj + TILE).min(n) {
                    let a = m[i * n + j];
                    let b = m[j * n + i];
                    m[i * n + j] = a + b.conj();
                    m[j * n + i] = b + a.conj();
                }
            }
        }
    }
}

/// `ρ ↦ −i(H_eff ρ − ρ H_eff†) + Σ γ L ρ L†`, with
/// `H_eff = H(t) − (i/2) Σ γ L†L`. Only valid on Hermitian `ρ`.
#[derive(Debug, Clone)]
pub(crate) struct LindbladGenerator {
    dim: usize,
    terms: Vec<Term>,
    jumps: Vec<(f64, SparseOp)>,
    displacement: Option<CoherentDisplacement>,
}

impl LindbladGenerator {
    pub(crate) fn new(model: &ModelInstance) -> Self {
        let mut h_eff = model.h_static.entries.clone();
        for (gamma, l) in &model.collapse_ops {
            let ldl = crate::linalg::dagger(&l.entries).dot(&l.entries);
            h_eff.scaled_add(-0.5 * I * *gamma, &ldl);
        }
        let mut terms = Vec::new();
        let mut push = |m: &Array2<C64>, coeff: Coefficient| {
            let op = SparseOp::from_dense(m);
            if !op.is_empty() {
                terms.push(Term { op, coeff });
            }
        };
        push(&h_eff, Coefficient::One);
        push(&model.h_coupling.entries, Coefficient::Drive);
        if let Some(ph) = &model.h_phased {
            push(&ph.op.entries, Coefficient::Phase(ph.rate));
            push(&crate::linalg::dagger(&ph.op.entries), Coefficient::PhaseConj(ph.rate));
        }
        if let Some(d) = &model.displacement {
            push(&d.quadrature_re.entries, Coefficient::AtomDriveRe);
            push(&d.quadrature_im.entries, Coefficient::AtomDriveIm);
        }
        let jumps = model
            .collapse_ops
            .iter()
            .filter(|(g, _)| *g > 0.0)
            .map(|(g, l)| (*g, SparseOp::from_dense(&l.entries)))
            .collect();
        Self { dim: model.dim(), terms, jumps, displacement: model.displacement.clone() }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    /// Writes dρ/dt into `out` for time `t` and drive value `drive`.
    pub(crate) fn apply(&self, t: f64, drive: f64, rho: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        let beta = self.displacement.as_ref().map_or(ZERO, |d| d.atom_drive(t));
        for term in &self.terms {
            let c = match term.coeff {
                Coefficient::One => C64::new(1.0, 0.0),
                Coefficient::Drive => C64::new(drive, 0.0),
                Coefficient::Phase(w) => C64::from_polar(1.0, w * t),
                Coefficient::PhaseConj(w) => C64::from_polar(1.0, -w * t),
                Coefficient::AtomDriveRe => C64::new(beta.re, 0.0),
                Coefficient::AtomDriveIm => C64::new(beta.im, 0.0),
            };
            term.op.left_acc(-I * c, rho, out);
        }
        for (gamma, l) in &self.jumps {
            l.sandwich_acc(0.5 * gamma, rho, out);
        }
        // −i c Aρ + i c̄ ρA† = X + X† for Hermitian ρ. Symmetrising last
        // makes the output conjugate-symmetric to the bit, so a Hermitian
        // state never acquires an anti-Hermitian part, which this form
        // would amplify.
        add_adjoint_in_place(out, self.dim);
    }
}
