//! Quantum Dicke Hamiltonian for one- and two-photon coupling.
//!
//! H = ω a†a + ω0 Jz + (γ / N^{f/2}) (a†^f + a^f)(J+ + J−), N = 2j.
//!
//! Spin projections are indexed by `k = m + j ∈ 0..=2j` throughout, so half-integer `j`
//! never needs fractional indices.

mod efficient;
mod eigen;
mod fock;
mod truncation;

pub use efficient::{
    build_efficient_hamiltonian, displacement_matrix, efficient_to_fock, EfficientFrame,
};
pub use eigen::{
    convergence_mask, diagonalize, diagonalize_window, parity_labels, peres_lattice, tail_weight,
    residual_norm, EigenSolution, Observable, SectorLayout, DEFAULT_DELTA,
};
pub use fock::{build_fock_hamiltonian, fock_element, fock_label};
pub use truncation::{classical_photon_bound, initial_truncation, solve_converged_window, WindowSolve};

use crate::error::{Error, Result};
use crate::linalg::SymBand;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub j: f64,
    pub f: u8,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, gamma: f64, j: f64, f: u8) -> Result<Self> {
        let p = Self {
            omega,
            omega0,
            gamma,
            j,
            f,
        };
        p.validate()?;
        Ok(p)
    }

    /// Resonant one-photon model at the critical coupling.
    pub fn one_photon(j: f64) -> Self {
        Self::new(1.0, 1.0, 0.5, j, 1).expect("valid preset")
    }

    /// Two-photon model below spectral collapse.
    pub fn two_photon(j: f64) -> Self {
        Self::new(1.0, 2.0, 0.3, j, 2).expect("valid preset")
    }

    pub fn with_j(self, j: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.gamma, j, self.f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("omega must be positive");
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return bad("omega0 must be positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be non-negative");
        }
        let two_j = 2.0 * self.j;
        if !(self.j >= 0.5 && two_j.fract() == 0.0 && two_j < 1e6) {
            return bad("j must be a positive multiple of 1/2");
        }
        match self.f {
            1 => Ok(()),
            2 if self.gamma < self.omega / 2.0 => Ok(()),
            2 => bad("two-photon coupling must stay below omega/2"),
            _ => bad("photon order f must be 1 or 2"),
        }
    }

    #[inline]
    pub fn two_j(&self) -> usize {
        (2.0 * self.j) as usize
    }

    /// Number of spin projections, 2j + 1.
    #[inline]
    pub fn spin_dim(&self) -> usize {
        self.two_j() + 1
    }

    /// γ / N^{f/2}.
    #[inline]
    pub fn coupling_scale(&self) -> f64 {
        self.gamma / (2.0 * self.j).powf(f64::from(self.f) / 2.0)
    }

    /// Number of parity sectors, 2f.
    #[inline]
    pub fn n_sectors(&self) -> usize {
        2 * self.f as usize
    }
}

/// Parity sector index `(n + f k) mod 2f`; the symmetry eigenvalue is `exp(iπ index / f)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParityLabel(pub u8);

impl ParityLabel {
    /// Eigenvalue of the parity operator as (re, im).
    pub fn eigenvalue(self, f: u8) -> (f64, f64) {
        match (f, self.0) {
            (1, 0) | (2, 0) => (1.0, 0.0),
            (1, 1) | (2, 2) => (-1.0, 0.0),
            (2, 1) => (0.0, 1.0),
            (2, 3) => (0.0, -1.0),
            _ => panic!("label {} out of range for f = {f}", self.0),
        }
    }

    pub fn symbol(self, f: u8) -> &'static str {
        match self.eigenvalue(f) {
            (re, _) if re > 0.5 => "+1",
            (re, _) if re < -0.5 => "-1",
            (_, im) if im > 0.5 => "+i",
            _ => "-i",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    Fock,
    Efficient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    /// Largest retained boson index.
    pub truncation: usize,
    pub j: f64,
}

impl BasisSpec {
    pub fn spin_dim(&self) -> usize {
        (2.0 * self.j) as usize + 1
    }

    pub fn dimension(&self) -> usize {
        (self.truncation + 1) * self.spin_dim()
    }

    /// (boson index, spin slot) of a global basis index.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.spin_dim(), index % self.spin_dim())
    }
}

#[derive(Clone, Debug)]
pub enum SectorMatrix {
    Band(SymBand),
    Dense { n: usize, a: Vec<f64> },
}

impl SectorMatrix {
    pub fn dim(&self) -> usize {
        match self {
            SectorMatrix::Band(b) => b.n,
            SectorMatrix::Dense { n, .. } => *n,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            SectorMatrix::Band(b) => b.get(i, j),
            SectorMatrix::Dense { n, a } => a[i + j * n],
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            SectorMatrix::Band(b) => b.to_dense(),
            SectorMatrix::Dense { a, .. } => a.clone(),
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SectorMatrix::Band(b) => b.matvec(x, y),
            SectorMatrix::Dense { n, a } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (0..*n).map(|k| a[i + k * n] * x[k]).sum();
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sector {
    pub label: ParityLabel,
    /// Global basis indices in local order.
    pub states: Vec<usize>,
    pub matrix: SectorMatrix,
}

/// Block-diagonal Hamiltonian: one real symmetric block per parity sector.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub basis: BasisSpec,
    pub params: ModelParams,
    pub sector_labels: Vec<ParityLabel>,
    pub sectors: Vec<Sector>,
    /// Global index -> (sector, local index).
    pub location: Vec<(usize, usize)>,
}

impl HamiltonianMatrix {
    pub(crate) fn assemble(basis: BasisSpec, params: ModelParams, sectors: Vec<Sector>) -> Self {
        let dim = basis.dimension();
        let mut sector_labels = vec![ParityLabel(0); dim];
        let mut location = vec![(usize::MAX, usize::MAX); dim];
        for (s, sec) in sectors.iter().enumerate() {
            for (l, &g) in sec.states.iter().enumerate() {
                sector_labels[g] = sec.label;
                location[g] = (s, l);
            }
        }
        debug_assert!(location.iter().all(|&(s, _)| s != usize::MAX));
        Self {
            basis,
            params,
            sector_labels,
            sectors,
            location,
        }
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Global entry `(i, j)`; zero across sectors.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (si, li) = self.location[i];
        let (sj, lj) = self.location[j];
        if si != sj {
            0.0
        } else {
            self.sectors[si].matrix.get(li, lj)
        }
    }

    /// Full dense matrix, column-major. Only for small bases.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dimension();
        let mut a = vec![0.0; n * n];
        for sec in &self.sectors {
            let d = sec.matrix.to_dense();
            let m = sec.states.len();
            for (c, &gc) in sec.states.iter().enumerate() {
                for (r, &gr) in sec.states.iter().enumerate() {
                    a[gr + gc * n] = d[r + c * m];
                }
            }
        }
        a
    }
}

/// √(j(j+1) − m(m+1)) with m = k − j: the J+ matrix element from slot k to k+1.
#[inline]
pub(crate) fn raising(two_j: usize, k: usize) -> f64 {
    // j(j+1) − m(m+1) = (j − m)(j + m + 1) = (2j − k)(k + 1).
    (((two_j - k) * (k + 1)) as f64).sqrt()
}

#[inline]
pub(crate) fn m_of(two_j: usize, k: usize) -> f64 {
    k as f64 - two_j as f64 / 2.0
}
