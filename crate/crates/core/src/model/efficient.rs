//! Displaced-oscillator basis for the one-photon model.
//!
//! With A = a + G Jx and G = 2γ/(ω√N) the Hamiltonian reads
//! H = ω A†A − ωG² Jx² + ω0 Jz. The states |N; m_x⟩ = D(−G m_x)|N⟩ ⊗ |m_x⟩ diagonalize the
//! first two terms, and Jz couples m_x to m_x ± 1 through displacement overlaps
//! ⟨N'|D(±G)|N⟩.
//!
//! Parity maps |N; m⟩ to t_{N,m} |N; −m⟩ with t_{N,m} = (−1)^N s_m, where s_m is the sign
//! picked up by the Jx eigenvector under the spin flip. Sector states are the
//! combinations (|N; m⟩ + p t_{N,m} |N; −m⟩)/√2 for m > 0 and |N; 0⟩ itself, stored at
//! spin slot j + m for p = +1 and j − m for p = −1.

use super::{
    m_of, raising, BasisKind, BasisSpec, HamiltonianMatrix, ModelParams, ParityLabel, Sector,
    SectorMatrix,
};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// ⟨n|D(β)|N⟩ for real β, row-major with `rows + 1` rows and `cols + 1` columns.
///
/// Each diagonal n − N = a is generated by the three-term recurrence of the normalized
/// associated Laguerre polynomials, e_k = ⟨k + a|D(β)|k⟩, seeded in the log domain;
/// entries above the diagonal follow from ⟨n|D(β)|N⟩ = (−1)^{n+N} ⟨N|D(β)|n⟩.
pub fn displacement_matrix(beta: f64, rows: usize, cols: usize) -> Vec<f64> {
    let nc = cols + 1;
    let mut d = vec![0.0; (rows + 1) * nc];
    let x = beta * beta;
    let big = rows.max(cols);
    let mut ln_fact = vec![0.0f64; big + 2];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    for a in 0..=big {
        // Diagonal a serves (k + a, k) below and (k, k + a) above the main diagonal.
        let k_max = (rows.saturating_sub(a).min(cols)).max(cols.saturating_sub(a).min(rows));
        if a > rows && a > cols {
            break;
        }
        let af = a as f64;
        let sign0 = if beta < 0.0 && a % 2 == 1 { -1.0 } else { 1.0 };
        let mut log_scale = if beta == 0.0 {
            if a == 0 { 0.0 } else { f64::NEG_INFINITY }
        } else {
            -0.5 * x + af * beta.abs().ln() - 0.5 * ln_fact[a]
        };
        let mut prev = 0.0;
        let mut cur = sign0;
        for k in 0..=k_max {
            if k > 0 {
                let kf = (k - 1) as f64;
                let next = if k == 1 {
                    cur * (1.0 + af - x) / (1.0 + af).sqrt()
                } else {
                    ((2.0 * kf + 1.0 + af - x) * cur - (kf * (kf + af)).sqrt() * prev)
                        / ((kf + 1.0) * (kf + 1.0 + af)).sqrt()
                };
                prev = cur;
                cur = next;
                if cur.abs() > 1e100 {
                    cur *= 1e-100;
                    prev *= 1e-100;
                    log_scale += 100.0 * std::f64::consts::LN_10;
                }
            }
            let v = cur * log_scale.exp();
            let (n, big_n) = (k + a, k);
            if n <= rows && big_n <= cols {
                d[n * nc + big_n] = v;
            }
            if a > 0 && big_n <= rows && n <= cols {
                d[big_n * nc + n] = if a % 2 == 0 { v } else { -v };
            }
        }
    }
    d
}

/// Spin frame shared by the efficient-basis construction and the conversion back to Fock
/// coefficients.
#[derive(Clone, Debug)]
pub struct EfficientFrame {
    pub two_j: usize,
    pub g: f64,
    /// Jx eigenvectors, column `kx` for m_x = kx − j, in the Jz basis (column-major).
    pub jx_vectors: Vec<f64>,
    /// ⟨kx + 1| Jz |kx⟩ in the Jx eigenbasis.
    pub jz_offdiag: Vec<f64>,
    /// s_m: spin flip maps |m_x⟩ to s_m |−m_x⟩.
    pub flip_sign: Vec<f64>,
}

impl EfficientFrame {
    pub fn new(params: &ModelParams) -> Self {
        let two_j = params.two_j();
        let d = two_j + 1;
        let g = 2.0 * params.gamma / (params.omega * (2.0 * params.j).sqrt());
        let mut jx = DMatrix::<f64>::zeros(d, d);
        for k in 0..two_j {
            let v = 0.5 * raising(two_j, k);
            jx[(k + 1, k)] = v;
            jx[(k, k + 1)] = v;
        }
        let eig = jx.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut vecs = vec![0.0; d * d];
        for (kx, &src) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(src);
            // Fix the sign by the m_z = j component, which never vanishes.
            let s = col[d - 1].signum();
            for kz in 0..d {
                vecs[kz + kx * d] = s * col[kz];
            }
        }
        let col = |kx: usize| &vecs[kx * d..(kx + 1) * d];
        let jz_offdiag = (0..two_j)
            .map(|kx| {
                let (a, b) = (col(kx), col(kx + 1));
                let overlap: f64 = (0..d).map(|kz| b[kz] * m_of(two_j, kz) * a[kz]).sum();
                // Exact magnitude ½C+ at m = kx − j; only the sign comes from the numerics.
                overlap.signum() * 0.5 * raising(two_j, kx)
            })
            .collect();
        let flip_sign = (0..d)
            .map(|kx| {
                let (a, b) = (col(kx), col(two_j - kx));
                let s: f64 = (0..d)
                    .map(|kz| if kz % 2 == 0 { a[kz] * b[kz] } else { -a[kz] * b[kz] })
                    .sum();
                s.signum()
            })
            .collect();
        Self {
            two_j,
            g,
            jx_vectors: vecs,
            jz_offdiag,
            flip_sign,
        }
    }

    /// ⟨kx'| Jz |kx⟩.
    #[inline]
    pub fn jz(&self, k1: usize, k0: usize) -> f64 {
        if k1 == k0 + 1 {
            self.jz_offdiag[k0]
        } else if k0 == k1 + 1 {
            self.jz_offdiag[k1]
        } else {
            0.0
        }
    }

    /// t_{N,m} for the raw state at boson index N and spin slot kx.
    #[inline]
    pub fn parity_phase(&self, big_n: usize, kx: usize) -> f64 {
        if big_n.is_multiple_of(2) {
            self.flip_sign[kx]
        } else {
            -self.flip_sign[kx]
        }
    }

    /// Raw-basis expansion of the sector state stored at (N, slot) with the given label.
    pub fn expand(&self, big_n: usize, slot: usize, label: ParityLabel) -> ([(usize, f64); 2], usize) {
        let j2 = self.two_j;
        if 2 * slot == j2 {
            return ([(slot, 1.0), (slot, 0.0)], 1);
        }
        let p = if label.0 == 0 { 1.0 } else { -1.0 };
        let mirror = j2 - slot;
        let (pos, neg) = if 2 * slot > j2 { (slot, mirror) } else { (mirror, slot) };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ([(pos, h), (neg, p * self.parity_phase(big_n, pos) * h)], 2)
    }

    /// Sector label of the sector state at (N, slot).
    pub fn slot_label(&self, big_n: usize, slot: usize) -> ParityLabel {
        let j2 = self.two_j;
        if 2 * slot == j2 {
            ParityLabel(if self.parity_phase(big_n, slot) > 0.0 { 0 } else { 1 })
        } else if 2 * slot > j2 {
            ParityLabel(0)
        } else {
            ParityLabel(1)
        }
    }
}

pub fn build_efficient_hamiltonian(params: &ModelParams, n_max: usize) -> Result<HamiltonianMatrix> {
    params.validate()?;
    if params.f != 1 {
        return Err(Error::InvalidInput(
            "the efficient basis exists only for one-photon coupling".into(),
        ));
    }
    let frame = EfficientFrame::new(params);
    let two_j = params.two_j();
    let basis = BasisSpec {
        kind: BasisKind::Efficient,
        truncation: n_max,
        j: params.j,
    };
    let dim = basis.dimension();
    let disp = displacement_matrix(frame.g, n_max, n_max);
    let nc = n_max + 1;
    let (w, w0, g2) = (params.omega, params.omega0, frame.g * frame.g);

    // Raw element ⟨N1, k1| H |N0, k0⟩.
    let raw = |(n1, k1): (usize, usize), (n0, k0): (usize, usize)| -> f64 {
        let mut v = 0.0;
        if n1 == n0 && k1 == k0 {
            let m = m_of(two_j, k0);
            v += w * n0 as f64 - w * g2 * m * m;
        }
        let jz = frame.jz(k1, k0);
        if jz != 0.0 {
            let d = disp[n1 * nc + n0];
            // D(−G) = (−1)^{N1+N0} D(G) for real G.
            let d = if k1 > k0 || (n1 + n0) % 2 == 0 { d } else { -d };
            v += w0 * jz * d;
        }
        v
    };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); 2];
    for g in 0..dim {
        let (nb, slot) = basis.split(g);
        members[frame.slot_label(nb, slot).0 as usize].push(g);
    }
    let sectors = members
        .into_iter()
        .enumerate()
        .map(|(label, states)| {
            let label = ParityLabel(label as u8);
            let n = states.len();
            let terms: Vec<_> = states
                .iter()
                .map(|&g| {
                    let (nb, slot) = basis.split(g);
                    let (t, len) = frame.expand(nb, slot, label);
                    (nb, t, len)
                })
                .collect();
            let mut a = vec![0.0; n * n];
            for c in 0..n {
                let (n0, t0, l0) = terms[c];
                for r in c..n {
                    let (n1, t1, l1) = terms[r];
                    let mut v = 0.0;
                    for &(k1, c1) in &t1[..l1] {
                        for &(k0, c0) in &t0[..l0] {
                            v += c1 * c0 * raw((n1, k1), (n0, k0));
                        }
                    }
                    a[r + c * n] = v;
                    a[c + r * n] = v;
                }
            }
            Sector {
                label,
                states,
                matrix: SectorMatrix::Dense { n, a },
            }
        })
        .collect();
    Ok(HamiltonianMatrix::assemble(basis, *params, sectors))
}

/// Fock coefficients (row-major, n × (2j+1)) of a state given by its raw efficient-basis
/// amplitudes `raw[N * (2j+1) + kx]`. The Fock cutoff grows until the lost norm is ≤ `delta`.
pub fn efficient_to_fock(
    params: &ModelParams,
    frame: &EfficientFrame,
    raw: &[f64],
    big_n_max: usize,
    delta: f64,
) -> (usize, Vec<f64>) {
    let spin = frame.two_j + 1;
    let norm_in: f64 = raw.iter().map(|v| v * v).sum();
    let shift = frame.g * params.j;
    let mut n_cut = big_n_max + (shift * shift).ceil() as usize + (10.0 * (shift + 1.0)) as usize + 20;
    loop {
        let mut u = vec![0.0; (n_cut + 1) * spin];
        for kx in 0..spin {
            let alpha = -frame.g * m_of(frame.two_j, kx);
            let d = displacement_matrix(alpha, n_cut, big_n_max);
            let nc = big_n_max + 1;
            for n in 0..=n_cut {
                let mut acc = 0.0;
                for big_n in 0..=big_n_max {
                    acc += d[n * nc + big_n] * raw[big_n * spin + kx];
                }
                u[n * spin + kx] = acc;
            }
        }
        let mut psi = vec![0.0; (n_cut + 1) * spin];
        for n in 0..=n_cut {
            for kz in 0..spin {
                let mut acc = 0.0;
                for kx in 0..spin {
                    acc += frame.jx_vectors[kz + kx * spin] * u[n * spin + kx];
                }
                psi[n * spin + kz] = acc;
            }
        }
        let norm: f64 = psi.iter().map(|v| v * v).sum();
        if norm_in - norm <= delta * norm_in || n_cut > 20 * (big_n_max + 10) {
            return (n_cut, psi);
        }
        n_cut += n_cut / 4 + 1;
    }
}
