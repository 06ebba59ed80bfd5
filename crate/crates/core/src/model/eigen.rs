use super::efficient::{efficient_to_fock, EfficientFrame};
use super::{m_of, raising, BasisKind, BasisSpec, HamiltonianMatrix, ModelParams, ParityLabel, SectorMatrix};
use crate::error::{Error, Result};
use crate::linalg;
use rayon::prelude::*;
use std::sync::Arc;

/// Default tail-weight tolerance for the convergence criterion.
pub const DEFAULT_DELTA: f64 = 1e-10;

/// Basis states of one parity sector, in local order.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorLayout {
    pub label: ParityLabel,
    pub states: Vec<usize>,
}

/// Eigenpairs of a [`HamiltonianMatrix`], possibly restricted to an energy window.
///
/// Vectors are stored in the local coordinates of their sector; `layouts[sector[k]]`
/// maps local positions to global basis indices.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub params: ModelParams,
    pub basis: BasisSpec,
    pub layouts: Arc<Vec<SectorLayout>>,
    pub energies: Vec<f64>,
    pub sector: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub parity: Vec<ParityLabel>,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn scaled_energies(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e / self.params.j).collect()
    }

    pub fn scaled_energy(&self, k: usize) -> f64 {
        self.energies[k] / self.params.j
    }

    /// Coefficients of state `k` over the full basis.
    pub fn global_vector(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.basis.dimension()];
        for (&g, &c) in self.layouts[self.sector[k]].states.iter().zip(&self.vectors[k]) {
            v[g] = c;
        }
        v
    }

    /// Fock coefficients of state `k`, row-major n × (2j+1), with the largest boson index.
    /// Efficient-basis states are converted with a cutoff that loses at most `delta` norm.
    pub fn fock_vector(&self, k: usize, delta: f64) -> (usize, Vec<f64>) {
        match self.basis.kind {
            BasisKind::Fock => (self.basis.truncation, self.global_vector(k)),
            BasisKind::Efficient => {
                let frame = EfficientFrame::new(&self.params);
                let raw = self.efficient_raw(&frame, k);
                efficient_to_fock(&self.params, &frame, &raw, self.basis.truncation, delta)
            }
        }
    }

    /// Raw |N; m_x⟩ amplitudes of an efficient-basis state.
    fn efficient_raw(&self, frame: &EfficientFrame, k: usize) -> Vec<f64> {
        let layout = &self.layouts[self.sector[k]];
        let spin = self.basis.spin_dim();
        let mut raw = vec![0.0; self.basis.dimension()];
        for (&g, &c) in layout.states.iter().zip(&self.vectors[k]) {
            let (nb, slot) = self.basis.split(g);
            let (terms, len) = frame.expand(nb, slot, layout.label);
            for &(kx, w) in &terms[..len] {
                raw[nb * spin + kx] += w * c;
            }
        }
        raw
    }

    /// Keeps the states selected by `keep`, preserving order.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> EigenSolution {
        let idx: Vec<usize> = (0..self.len()).filter(|&k| keep(k)).collect();
        EigenSolution {
            params: self.params,
            basis: self.basis,
            layouts: self.layouts.clone(),
            energies: idx.iter().map(|&k| self.energies[k]).collect(),
            sector: idx.iter().map(|&k| self.sector[k]).collect(),
            vectors: idx.iter().map(|&k| self.vectors[k].clone()).collect(),
            converged: idx.iter().map(|&k| self.converged[k]).collect(),
            parity: idx.iter().map(|&k| self.parity[k]).collect(),
        }
    }

    /// Ascending energies of converged states in one sector.
    pub fn sector_levels(&self, sector: usize, converged_only: bool) -> Vec<f64> {
        (0..self.len())
            .filter(|&k| self.sector[k] == sector && (!converged_only || self.converged[k]))
            .map(|k| self.energies[k])
            .collect()
    }
}

fn layouts_of(h: &HamiltonianMatrix) -> Arc<Vec<SectorLayout>> {
    Arc::new(
        h.sectors
            .iter()
            .map(|s| SectorLayout {
                label: s.label,
                states: s.states.clone(),
            })
            .collect(),
    )
}

fn check_finite(h: &HamiltonianMatrix) -> Result<()> {
    for (s, sec) in h.sectors.iter().enumerate() {
        let finite = match &sec.matrix {
            SectorMatrix::Band(b) => b.ab.iter().all(|v| v.is_finite()),
            SectorMatrix::Dense { a, .. } => a.iter().all(|v| v.is_finite()),
        };
        if !finite {
            return Err(Error::NonFinite { sector: s });
        }
    }
    Ok(())
}

fn with_sector(e: Error, s: usize) -> Error {
    match e {
        Error::Lapack { routine, info, .. } => Error::Lapack {
            routine,
            sector: s,
            info,
        },
        Error::EigenvectorNotConverged {
            energy, residual, ..
        } => Error::EigenvectorNotConverged {
            sector: s,
            energy,
            residual,
        },
        other => other,
    }
}

/// Merges per-sector eigenpairs into one ascending list. Exact ties are ordered by
/// (parity index, spin slot of the dominant component).
fn merge(
    h: &HamiltonianMatrix,
    per_sector: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
    delta: f64,
) -> EigenSolution {
    let layouts = layouts_of(h);
    let spin = h.basis.spin_dim();
    let mut items: Vec<(f64, u8, usize, usize, Vec<f64>)> = Vec::new();
    for (s, (vals, vecs)) in per_sector.into_iter().enumerate() {
        for (e, v) in vals.into_iter().zip(vecs) {
            let dom = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| layouts[s].states[i] % spin)
                .unwrap_or(0);
            items.push((e, layouts[s].label.0, dom, s, v));
        }
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sol = EigenSolution {
        params: h.params,
        basis: h.basis,
        layouts,
        energies: Vec::with_capacity(items.len()),
        sector: Vec::with_capacity(items.len()),
        vectors: Vec::with_capacity(items.len()),
        converged: Vec::new(),
        parity: Vec::with_capacity(items.len()),
    };
    for (e, label, _, s, v) in items {
        sol.energies.push(e);
        sol.sector.push(s);
        sol.parity.push(ParityLabel(label));
        sol.vectors.push(v);
    }
    sol.converged = convergence_mask(&sol, delta);
    sol
}

/// Full eigensystem, sector by sector.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenSolution> {
    check_finite(h)?;
    let per_sector = h
        .sectors
        .par_iter()
        .enumerate()
        .map(|(s, sec)| {
            let n = sec.matrix.dim();
            let (w, z) = linalg::dense_sym_eigen(&sec.matrix.to_dense(), n).map_err(|e| with_sector(e, s))?;
            let vecs = (0..n).map(|c| z[c * n..(c + 1) * n].to_vec()).collect();
            Ok((w, vecs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(h, per_sector, DEFAULT_DELTA))
}

/// Eigenpairs with energy in `(e_lo, e_hi]`.
pub fn diagonalize_window(h: &HamiltonianMatrix, e_lo: f64, e_hi: f64) -> Result<EigenSolution> {
    check_finite(h)?;
    let per_sector = h
        .sectors
        .par_iter()
        .enumerate()
        .map(|(s, sec)| match &sec.matrix {
            SectorMatrix::Band(b) => b.eigenpairs_in(e_lo, e_hi).map_err(|e| with_sector(e, s)),
            SectorMatrix::Dense { n, a } => {
                let (w, z) = linalg::dense_sym_eigen(a, *n).map_err(|e| with_sector(e, s))?;
                let keep: Vec<usize> = (0..*n).filter(|&i| w[i] > e_lo && w[i] <= e_hi).collect();
                Ok((
                    keep.iter().map(|&i| w[i]).collect(),
                    keep.iter().map(|&i| z[i * n..(i + 1) * n].to_vec()).collect(),
                ))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(h, per_sector, DEFAULT_DELTA))
}

/// Tail weight at the largest boson index present in each state's sector.
pub fn tail_weight(sol: &EigenSolution, k: usize) -> f64 {
    let layout = &sol.layouts[sol.sector[k]];
    let spin = sol.basis.spin_dim();
    let top = layout.states.iter().map(|&g| g / spin).max().unwrap_or(0);
    layout
        .states
        .iter()
        .zip(&sol.vectors[k])
        .filter(|(&g, _)| g / spin == top)
        .map(|(_, c)| c * c)
        .sum()
}

pub fn convergence_mask(sol: &EigenSolution, delta: f64) -> Vec<bool> {
    (0..sol.len()).map(|k| tail_weight(sol, k) <= delta).collect()
}

/// Sector label of each state from its weight distribution; any weight outside the
/// state's own sector beyond 1e−12 is a construction error.
pub fn parity_labels(sol: &EigenSolution, h: &HamiltonianMatrix) -> Result<Vec<ParityLabel>> {
    (0..sol.len())
        .map(|k| {
            let v = sol.global_vector(k);
            let mut weight = vec![0.0; h.params.n_sectors()];
            for (g, c) in v.iter().enumerate() {
                weight[h.sector_labels[g].0 as usize] += c * c;
            }
            let (best, _) = weight
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("at least one sector");
            let outside: f64 = weight.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, w)| w).sum();
            if outside > 1e-12 {
                return Err(Error::MixedParity { weight: outside });
            }
            Ok(ParityLabel(best as u8))
        })
        .collect()
}

/// ‖H v − E v‖ for state `k`.
pub fn residual_norm(h: &HamiltonianMatrix, sol: &EigenSolution, k: usize) -> f64 {
    let sec = &h.sectors[sol.sector[k]];
    let v = &sol.vectors[k];
    let mut hv = vec![0.0; v.len()];
    sec.matrix.matvec(v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - sol.energies[k] * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    Jx2,
}

/// (ε_k, ⟨Jx²⟩_k / j²) for the converged states.
pub fn peres_lattice(sol: &EigenSolution, observable: Observable) -> Vec<(f64, f64)> {
    let Observable::Jx2 = observable;
    let two_j = sol.params.two_j();
    let spin = two_j + 1;
    let j2 = sol.params.j * sol.params.j;
    (0..sol.len())
        .filter(|&k| sol.converged[k])
        .map(|k| {
            let layout = &sol.layouts[sol.sector[k]];
            let v = &sol.vectors[k];
            let value = match sol.basis.kind {
                // Jx is diagonal in the efficient basis: ⟨Jx²⟩ = Σ |c|² m_x².
                BasisKind::Efficient => layout
                    .states
                    .iter()
                    .zip(v)
                    .map(|(&g, c)| c * c * m_of(two_j, g % spin).powi(2))
                    .sum(),
                // ⟨Jx²⟩ = ‖Jx ψ‖², with Jx tridiagonal in m_z.
                BasisKind::Fock => {
                    let rows = sol.basis.truncation + 1;
                    let mut psi = vec![0.0; rows * spin];
                    for (&g, &c) in layout.states.iter().zip(v) {
                        psi[g] = c;
                    }
                    let mut acc = 0.0;
                    for n in 0..rows {
                        let row = &psi[n * spin..(n + 1) * spin];
                        for kk in 0..spin {
                            let mut y = 0.0;
                            if kk > 0 {
                                y += 0.5 * raising(two_j, kk - 1) * row[kk - 1];
                            }
                            if kk + 1 < spin {
                                y += 0.5 * raising(two_j, kk) * row[kk + 1];
                            }
                            acc += y * y;
                        }
                    }
                    acc
                }
            };
            (sol.scaled_energy(k), value / j2)
        })
        .collect()
}
