//! Operator algebra on truncated Fock ⊗ two-level-atom spaces and the
//! instantaneous polariton (dressed-state) basis of a single cavity.
//!
//! Basis ordering is site-major: the composite index of a two-site state is
//! `i_1 * d_2 + i_2`, and within one site the photon number is the major
//! index with the atom minor (`photon * 2 + atom`, atom 0 = ground,
//! 1 = excited). Site indices are zero-based.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, C64, ONE, ZERO};

/// Photon cutoff and atom flag of one cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSpec {
    pub n_max: usize,
    pub has_atom: bool,
}

impl SiteSpec {
    pub fn local_dim(&self) -> usize {
        (self.n_max + 1) * self.atom_dim()
    }

    fn atom_dim(&self) -> usize {
        if self.has_atom {
            2
        } else {
            1
        }
    }
}

/// Tensor-product structure of the simulated system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertLayout {
    sites: Vec<SiteSpec>,
}

impl HilbertLayout {
    pub fn new(sites: Vec<SiteSpec>) -> Result<Self> {
        if sites.is_empty() {
            return Err(invalid("layout needs at least one site"));
        }
        if let Some(bad) = sites.iter().find(|s| s.n_max < 1) {
            return Err(invalid(format!("photon cutoff must be >= 1, got {}", bad.n_max)));
        }
        Ok(Self { sites })
    }

    /// Two identical cavities, each with one atom.
    pub fn two_cavity(n_max: usize) -> Result<Self> {
        let site = SiteSpec { n_max, has_atom: true };
        Self::new(vec![site, site])
    }

    pub fn single(n_max: usize, has_atom: bool) -> Result<Self> {
        Self::new(vec![SiteSpec { n_max, has_atom }])
    }

    pub fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, index: usize) -> Result<SiteSpec> {
        self.sites
            .get(index)
            .copied()
            .ok_or_else(|| invalid(format!("site {index} out of range ({} sites)", self.sites.len())))
    }

    pub fn dim(&self) -> usize {
        self.sites.iter().map(SiteSpec::local_dim).product()
    }

    /// Composite index of the product state with the given
    /// `(photons, atom_excited)` per site.
    pub fn index_of(&self, occupations: &[(usize, bool)]) -> Result<usize> {
        if occupations.len() != self.sites.len() {
            return Err(invalid("one occupation per site is required"));
        }
        let mut index = 0;
        for (site, &(n, excited)) in self.sites.iter().zip(occupations) {
            if n > site.n_max {
                return Err(invalid(format!("photon number {n} exceeds cutoff {}", site.n_max)));
            }
            if excited && !site.has_atom {
                return Err(invalid("excited atom requested on a site without an atom"));
            }
            let local = n * site.atom_dim() + usize::from(excited);
            index = index * site.local_dim() + local;
        }
        Ok(index)
    }

    /// Inverse of [`HilbertLayout::index_of`].
    pub fn occupations(&self, mut index: usize) -> Vec<(usize, bool)> {
        let mut occ = vec![(0, false); self.sites.len()];
        for (slot, site) in occ.iter_mut().zip(&self.sites).rev() {
            let local = index % site.local_dim();
            index /= site.local_dim();
            *slot = (local / site.atom_dim(), site.has_atom && local % 2 == 1);
        }
        occ
    }
}

/// Dense complex operator with a descriptive label.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub entries: Array2<C64>,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(entries: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(invalid(format!("operator must be square, got {:?}", entries.dim())));
        }
        Ok(Self { entries, label: label.into() })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: linalg::eye(dim), label: "I".into() }
    }

    pub fn zeros(dim: usize, label: impl Into<String>) -> Self {
        Self { entries: Array2::zeros((dim, dim)), label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { entries: linalg::dagger(&self.entries), label: format!("{}†", self.label) }
    }

    pub fn dot(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.dot(&other.entries),
            label: format!("{}·{}", self.label, other.label),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: &self.entries + &other.entries,
            label: format!("{} + {}", self.label, other.label),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { entries: &self.entries * factor, label: self.label.clone() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            entries: linalg::commutator(&self.entries, &other.entries),
            label: format!("[{}, {}]", self.label, other.label),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.entries)
    }

    /// Checks Hermiticity to 1e-12 entrywise.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= 1e-12
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.entries)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.entries)
    }

    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(psi)
    }
}

/// Truncated photon annihilation operator on `n_max + 1` Fock levels.
pub fn annihilation(n_max: usize) -> Result<OperatorMatrix> {
    if n_max < 1 {
        return Err(invalid("annihilation operator needs n_max >= 1"));
    }
    let mut a = Array2::zeros((n_max + 1, n_max + 1));
    for m in 1..=n_max {
        a[[m - 1, m]] = C64::new((m as f64).sqrt(), 0.0);
    }
    OperatorMatrix::new(a, "a")
}

/// Atomic lowering operator |g⟩⟨e| with ground at index 0.
pub fn atom_lowering() -> OperatorMatrix {
    let mut s = Array2::zeros((2, 2));
    s[[0, 1]] = ONE;
    OperatorMatrix { entries: s, label: "σ".into() }
}

/// Places `local_op` on site `site_index` with identities elsewhere.
pub fn embed(site_index: usize, local_op: &OperatorMatrix, layout: &HilbertLayout) -> Result<OperatorMatrix> {
    let site = layout.site(site_index)?;
    if local_op.dim() != site.local_dim() {
        return Err(invalid(format!(
            "local operator has dimension {} but site {site_index} has dimension {}",
            local_op.dim(),
            site.local_dim()
        )));
    }
    let mut acc: Option<Array2<C64>> = None;
    for (k, s) in layout.sites().iter().enumerate() {
        let factor = if k == site_index { local_op.entries.clone() } else { linalg::eye(s.local_dim()) };
        acc = Some(match acc {
            None => factor,
            Some(prev) => linalg::kron(&prev, &factor),
        });
    }
    let entries = acc.expect("layout has at least one site");
    Ok(OperatorMatrix { entries, label: format!("{}_{}", local_op.label, site_index + 1) })
}

/// Photon annihilation `a_i` on the composite space.
pub fn photon_annihilation(site_index: usize, layout: &HilbertLayout) -> Result<OperatorMatrix> {
    let site = layout.site(site_index)?;
    let a = annihilation(site.n_max)?;
    let local = if site.has_atom {
        linalg::kron(&a.entries, &linalg::eye(2))
    } else {
        a.entries
    };
    embed(site_index, &OperatorMatrix { entries: local, label: "a".into() }, layout)
}

/// Atomic lowering `σ_i` on the composite space.
pub fn atom_lowering_at(site_index: usize, layout: &HilbertLayout) -> Result<OperatorMatrix> {
    let site = layout.site(site_index)?;
    if !site.has_atom {
        return Err(invalid(format!("site {site_index} has no atom")));
    }
    let local = linalg::kron(&linalg::eye(site.n_max + 1), &atom_lowering().entries);
    embed(site_index, &OperatorMatrix { entries: local, label: "σ".into() }, layout)
}

/// `a_i† a_i` on the composite space.
pub fn photon_number(site_index: usize, layout: &HilbertLayout) -> Result<OperatorMatrix> {
    let a = photon_annihilation(site_index, layout)?;
    Ok(a.dagger().dot(&a).with_label(format!("n_{}", site_index + 1)))
}

/// Excitation number `N_i = a_i†a_i + σ_i†σ_i`.
pub fn number_operator(site_index: usize, layout: &HilbertLayout) -> Result<OperatorMatrix> {
    let n_photon = photon_number(site_index, layout)?;
    let s = atom_lowering_at(site_index, layout)?;
    Ok(n_photon.add(&s.dagger().dot(&s)).with_label(format!("N_{}", site_index + 1)))
}

/// Energies and mixing angle of the `n`-excitation Jaynes–Cummings doublet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcEigen {
    pub e_plus: f64,
    pub e_minus: f64,
    pub theta: f64,
}

/// Closed-form doublet `E_{n±} = ω_c n + ξ/2 ± √(ξ² + 4g²n)/2` and mixing
/// angle `θ_n = ½ atan(2√n g / ξ)`.
///
/// `atan2` coincides with the principal branch for ξ > 0 and keeps the
/// eigenvector assignment correct for ξ ≤ 0.
pub fn jc_eigen(n: usize, xi: f64, g: f64, omega_c: f64) -> Result<JcEigen> {
    if n == 0 {
        return Err(invalid("the ground state |0g⟩ has no polariton doublet (n must be >= 1)"));
    }
    if !(g > 0.0) {
        return Err(invalid(format!("coupling g must be positive, got {g}")));
    }
    let nf = n as f64;
    let root = (xi * xi + 4.0 * g * g * nf).sqrt();
    let centre = omega_c * nf + 0.5 * xi;
    Ok(JcEigen {
        e_plus: centre + 0.5 * root,
        e_minus: centre - 0.5 * root,
        theta: 0.5 * (2.0 * nf.sqrt() * g).atan2(xi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
    Ground,
}

/// Single-cavity polariton label: `|n±⟩`, or `|0g⟩` for the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PolaritonLabel {
    pub n: usize,
    pub branch: Branch,
}

impl PolaritonLabel {
    pub fn new(n: usize, branch: Branch) -> Result<Self> {
        let label = Self { n, branch };
        label.validate()?;
        Ok(label)
    }

    pub fn ground() -> Self {
        Self { n: 0, branch: Branch::Ground }
    }

    pub fn minus(n: usize) -> Self {
        Self { n, branch: Branch::Minus }
    }

    pub fn plus(n: usize) -> Self {
        Self { n, branch: Branch::Plus }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.n, self.branch) {
            (0, Branch::Ground) => Ok(()),
            (0, _) => Err(invalid("n = 0 only admits the ground label |0g⟩")),
            (_, Branch::Ground) => Err(invalid("the ground branch requires n = 0")),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for PolaritonLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.branch {
            Branch::Ground => write!(f, "0g"),
            Branch::Plus => write!(f, "{}+", self.n),
            Branch::Minus => write!(f, "{}-", self.n),
        }
    }
}

impl From<PolaritonLabel> for String {
    fn from(label: PolaritonLabel) -> Self {
        label.to_string()
    }
}

impl TryFrom<String> for PolaritonLabel {
    type Error = crate::error::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for PolaritonLabel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0g" {
            return Ok(Self::ground());
        }
        let (digits, branch) = match s.chars().last() {
            Some('+') => (&s[..s.len() - 1], Branch::Plus),
            Some('-') => (&s[..s.len() - 1], Branch::Minus),
            _ => return Err(invalid(format!("cannot parse polariton label {s:?}"))),
        };
        let n = digits.parse().map_err(|_| invalid(format!("cannot parse polariton label {s:?}")))?;
        Self::new(n, branch)
    }
}

/// Dressed state of one cavity at detuning `xi`:
/// `|n+⟩ = sin θ |n,g⟩ + cos θ |n−1,e⟩`, `|n−⟩ = cos θ |n,g⟩ − sin θ |n−1,e⟩`.
pub fn polariton_state(label: PolaritonLabel, xi: f64, g: f64, site: SiteSpec) -> Result<Array1<C64>> {
    label.validate()?;
    if !site.has_atom {
        return Err(invalid("polariton states need a site with an atom"));
    }
    if label.n > site.n_max {
        return Err(invalid(format!("label {label} exceeds the photon cutoff {}", site.n_max)));
    }
    let mut v = Array1::from_elem(site.local_dim(), ZERO);
    if label.branch == Branch::Ground {
        v[0] = ONE;
        return Ok(v);
    }
    let theta = jc_eigen(label.n, xi, g, 0.0)?.theta;
    let ground_idx = 2 * label.n;
    let excited_idx = 2 * (label.n - 1) + 1;
    let (cg, ce) = match label.branch {
        Branch::Plus => (theta.sin(), theta.cos()),
        Branch::Minus => (theta.cos(), -theta.sin()),
        Branch::Ground => unreachable!(),
    };
    v[ground_idx] = C64::new(cg, 0.0);
    v[excited_idx] = C64::new(ce, 0.0);
    Ok(v)
}

/// Product of per-site polariton states on the composite space.
pub fn polariton_product(labels: &[PolaritonLabel], xi: f64, g: f64, layout: &HilbertLayout) -> Result<Array1<C64>> {
    if labels.len() != layout.num_sites() {
        return Err(invalid("one polariton label per site is required"));
    }
    let mut acc = Array1::from_elem(1, ONE);
    for (label, site) in labels.iter().zip(layout.sites()) {
        let local = polariton_state(*label, xi, g, *site)?;
        let mut next = Array1::from_elem(acc.len() * local.len(), ZERO);
        for (i, &x) in acc.iter().enumerate() {
            for (j, &y) in local.iter().enumerate() {
                next[i * local.len() + j] = x * y;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Single-site Jaynes–Cummings Hamiltonian `ω_c a†a + (ω_c + ξ) σ†σ + g(aσ† + a†σ)`.
pub fn single_site_jc(site: SiteSpec, xi: f64, g: f64, omega_c: f64) -> Result<OperatorMatrix> {
    if !site.has_atom {
        return Err(invalid("Jaynes–Cummings block needs an atom"));
    }
    let layout = HilbertLayout::new(vec![site])?;
    let a = photon_annihilation(0, &layout)?;
    let s = atom_lowering_at(0, &layout)?;
    let na = a.dagger().dot(&a);
    let ns = s.dagger().dot(&s);
    let coupling = a.dot(&s.dagger()).add(&a.dagger().dot(&s));
    let h = na
        .scale(C64::new(omega_c, 0.0))
        .add(&ns.scale(C64::new(omega_c + xi, 0.0)))
        .add(&coupling.scale(C64::new(g, 0.0)));
    Ok(h.with_label("H_JC"))
}
