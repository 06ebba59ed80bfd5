use super::{
    m_of, raising, BasisKind, BasisSpec, HamiltonianMatrix, ModelParams, ParityLabel, Sector,
    SectorMatrix,
};
use crate::error::{Error, Result};
use crate::linalg::SymBand;

/// Parity sector of the Fock state |n; j, m = k − j⟩.
#[inline]
pub fn fock_label(n: usize, k: usize, f: u8) -> ParityLabel {
    let f = f as usize;
    ParityLabel(((n + f * k) % (2 * f)) as u8)
}

/// √((n+1)⋯(n+f)).
#[inline]
fn ladder(n: usize, f: u8) -> f64 {
    (1..=f as usize).map(|i| (n + i) as f64).product::<f64>().sqrt()
}

/// ⟨n', k'| H |n, k⟩ in the Fock basis.
pub fn fock_element(params: &ModelParams, (n1, k1): (usize, usize), (n0, k0): (usize, usize)) -> f64 {
    let two_j = params.two_j();
    if n1 == n0 && k1 == k0 {
        return params.omega * n0 as f64 + params.omega0 * m_of(two_j, k0);
    }
    let f = params.f as usize;
    let boson = if n1 == n0 + f {
        ladder(n0, params.f)
    } else if n0 == n1 + f {
        ladder(n1, params.f)
    } else {
        return 0.0;
    };
    let spin = if k1 == k0 + 1 {
        raising(two_j, k0)
    } else if k0 == k1 + 1 {
        raising(two_j, k1)
    } else {
        return 0.0;
    };
    params.coupling_scale() * boson * spin
}

pub fn build_fock_hamiltonian(params: &ModelParams, n_max: usize) -> Result<HamiltonianMatrix> {
    params.validate()?;
    let f = params.f as usize;
    if n_max < f {
        return Err(Error::InvalidInput(format!(
            "n_max = {n_max} must be at least f = {f}"
        )));
    }
    let spin = params.spin_dim();
    let basis = BasisSpec {
        kind: BasisKind::Fock,
        truncation: n_max,
        j: params.j,
    };
    let dim = basis.dimension();
    let n_sec = params.n_sectors();

    let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(dim / n_sec + 1); n_sec];
    let mut local = vec![0usize; dim];
    for g in 0..dim {
        let (n, k) = basis.split(g);
        let l = fock_label(n, k, params.f).0 as usize;
        local[g] = members[l].len();
        members[l].push(g);
    }

    let g_scale = params.coupling_scale();
    let sectors = members
        .into_iter()
        .enumerate()
        .map(|(label, states)| {
            // Couplings go from (n, k) to (n + f, k ± 1); both lie later in the (n, k) order.
            let mut kd = 0usize;
            for &g in &states {
                let (n, k) = basis.split(g);
                if n + f > n_max {
                    continue;
                }
                for k1 in [k.wrapping_sub(1), k + 1] {
                    if k1 < spin {
                        kd = kd.max(local[(n + f) * spin + k1] - local[g]);
                    }
                }
            }
            let mut band = SymBand::zeros(states.len(), kd);
            for &g in &states {
                let (n, k) = basis.split(g);
                let c = local[g];
                band.set_lower(c, c, fock_element(params, (n, k), (n, k)));
                if n + f > n_max || g_scale == 0.0 {
                    continue;
                }
                let a = ladder(n, params.f);
                if k + 1 < spin {
                    let r = local[(n + f) * spin + k + 1];
                    band.set_lower(r, c, g_scale * a * raising(params.two_j(), k));
                }
                if k > 0 {
                    let r = local[(n + f) * spin + k - 1];
                    band.set_lower(r, c, g_scale * a * raising(params.two_j(), k - 1));
                }
            }
            Sector {
                label: ParityLabel(label as u8),
                states,
                matrix: SectorMatrix::Band(band),
            }
        })
        .collect();
    Ok(HamiltonianMatrix::assemble(basis, *params, sectors))
}
