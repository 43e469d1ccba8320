//! Small dense helpers on complex `ndarray` matrices.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn eye(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * br + k, j * bc + l]] = x * y;
        }
    }
    out
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Tr(A B) without forming the product.
pub fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

/// Largest entrywise |M - M†|.
pub fn hermiticity_error(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Ascending eigenvalues of a Hermitian matrix. Only the Hermitian part of
/// `m` is used.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let mut vals: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigh(m: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = m.nrows();
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vecs[[row, col]] = eig.eigenvectors[(row, k)];
        }
    }
    (vals, vecs)
}

/// Trace distance ½‖A − B‖₁ between two Hermitian matrices.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    let diff = a - b;
    0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>()
}

pub fn outer(psi: &Array1<C64>) -> Array2<C64> {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
}

/// ⟨ψ|M|ψ⟩
pub fn expectation_vec(m: &Array2<C64>, psi: &Array1<C64>) -> C64 {
    let mpsi = m.dot(psi);
    psi.iter().zip(mpsi.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `exp(A)·v` without forming `exp(A)`, given the product `x ↦ Ax` and an
/// upper bound on `‖A‖₁`. The interval is cut into `⌈‖A‖₁⌉` pieces and each
/// is a Taylor series summed to roundoff.
pub fn expm_multiply(apply: impl Fn(&Array1<C64>) -> Array1<C64>, norm: f64, v: &Array1<C64>) -> Array1<C64> {
    let pieces = norm.ceil().max(1.0) as usize;
    let h = C64::new(1.0 / pieces as f64, 0.0);
    let mut out = v.clone();
    for _ in 0..pieces {
        let scale = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut term = out.clone();
        for k in 1..=40 {
            term = apply(&term) * (h / k as f64);
            out += &term;
            if term.iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-17 * scale {
                break;
            }
        }
    }
    out
}

pub fn one_norm(m: &Array2<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
