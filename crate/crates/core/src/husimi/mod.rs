//! Coherent-state projections of eigenstates: Poincaré–Husimi fields on the atomic plane,
//! the phase-space overlap index M_ν, and Rényi–Wehrl localization on the energy shell.
//!
//! Glauber–Bloch coherent states are labelled by x = (q, p, Q, P) with
//! α = √(j/2)(q + ip) and β = (Q + iP)/(2Θ), Θ = √(1 − (Q² + P²)/4). Amplitudes are
//! assembled from logarithms so that no intermediate can overflow at large j.

mod field;
mod shell;

pub use field::{
    overlap_index, overlap_index_of, poincare_husimi, HusimiField, OverlapIndexRecord,
};
pub use shell::{
    delocalization_thresholds, shell_localization, shell_measures, shell_samples,
    LocalizationRecord, ShellMeasures, ShellSamples, Thresholds, DEFAULT_SHELL_SAMPLES,
};

use crate::error::{Error, Result};
use crate::model::EigenSolution;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Eigenstate coefficients c_{n,k} over Fock states |n⟩ ⊗ |j, k − j⟩, row-major in (n, k).
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    pub n_max: usize,
    pub spin_dim: usize,
    pub coeffs: Vec<f64>,
}

impl FockState {
    pub fn new(n_max: usize, spin_dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != (n_max + 1) * spin_dim {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for ({} + 1) × {spin_dim} Fock states",
                coeffs.len(),
                n_max
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite state coefficient".into()));
        }
        Ok(Self { n_max, spin_dim, coeffs })
    }

    /// State `k` of a solution; efficient-basis states are converted with norm loss ≤ `delta`.
    pub fn from_solution(sol: &EigenSolution, k: usize, delta: f64) -> Self {
        let (n_max, coeffs) = sol.fock_vector(k, delta);
        Self {
            n_max,
            spin_dim: sol.basis.spin_dim(),
            coeffs,
        }
    }

    pub fn j(&self) -> f64 {
        (self.spin_dim - 1) as f64 / 2.0
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Zero-padded copy with boson cutoff `n_max` (never truncates).
    pub fn padded(&self, n_max: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize((n_max.max(self.n_max) + 1) * self.spin_dim, 0.0);
        Self {
            n_max: n_max.max(self.n_max),
            spin_dim: self.spin_dim,
            coeffs,
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_max + 1, self.spin_dim, &self.coeffs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CoherentPoint {
    pub q: f64,
    pub p: f64,
    pub Q: f64,
    pub P: f64,
}

impl CoherentPoint {
    #[allow(non_snake_case)]
    pub fn new(q: f64, p: f64, Q: f64, P: f64) -> Result<Self> {
        let ok = [q, p, Q, P].iter().all(|v| v.is_finite()) && Q * Q + P * P <= 4.0;
        if !ok {
            return Err(Error::InvalidInput(format!("({q}, {p}, {Q}, {P}) is not a phase-space point")));
        }
        Ok(Self { q, p, Q, P })
    }

    pub fn theta(&self) -> f64 {
        (1.0 - (self.Q * self.Q + self.P * self.P) / 4.0).max(0.0).sqrt()
    }

    /// (|α|, arg α).
    pub fn alpha(&self, j: f64) -> (f64, f64) {
        let s = (j / 2.0).sqrt();
        (s * self.q.hypot(self.p), self.p.atan2(self.q))
    }

    /// β = (Q + iP)/(2Θ) as (re, im); infinite at the disk edge.
    pub fn beta(&self) -> (f64, f64) {
        let th = self.theta();
        (self.Q / (2.0 * th), self.P / (2.0 * th))
    }
}

/// ln n! for n ≤ `n_max` by running sums.
fn log_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=n_max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// k · ln x with 0 · ln 0 = 0.
#[inline]
fn xlny(k: usize, ln: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln
    }
}

/// Log-magnitudes and phases of ⟨n|α⟩ (n ≤ n_max) and ⟨j, k − j|β⟩ (k ≤ 2j) at one point.
struct Amplitudes {
    log_a: Vec<f64>,
    phase_a: f64,
    log_b: Vec<f64>,
    phase_b: f64,
}

struct LogTables {
    fact: Vec<f64>,
    binom: Vec<f64>,
}

impl LogTables {
    fn new(n_max: usize, two_j: usize) -> Self {
        let fact = log_factorials(n_max.max(two_j));
        let binom = (0..=two_j).map(|k| fact[two_j] - fact[k] - fact[two_j - k]).collect();
        Self { fact, binom }
    }

    fn amplitudes(&self, x: &CoherentPoint, n1: usize, j: f64) -> Amplitudes {
        let (r, phase_a) = x.alpha(j);
        let ln_r = r.ln();
        let log_a = (0..n1)
            .map(|n| -0.5 * r * r + xlny(n, ln_r) - 0.5 * self.fact[n])
            .collect();
        // |⟨j,m|β⟩| = √C(2j, k) (ρ/2)^k Θ^{2j−k}, ρ = |(Q, P)|
        let ln_half_rho = (0.5 * x.Q.hypot(x.P)).ln();
        let ln_th = x.theta().ln();
        let two_j = self.binom.len() - 1;
        let log_b = (0..=two_j)
            .map(|k| 0.5 * self.binom[k] + xlny(k, ln_half_rho) + xlny(two_j - k, ln_th))
            .collect();
        Amplitudes {
            log_a,
            phase_a,
            log_b,
            phase_b: x.P.atan2(x.Q),
        }
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// ln|⟨E|x⟩| and arg⟨E|x⟩ for one state and one point, ⟨E|x⟩ = Σ c_{n,k} conj(⟨n|α⟩⟨j,m|β⟩).
pub fn coherent_overlap(state: &FockState, x: &CoherentPoint) -> Result<(f64, f64)> {
    let two_j = state.spin_dim - 1;
    let tables = LogTables::new(state.n_max, two_j);
    let amp = tables.amplitudes(x, state.n_max + 1, state.j());
    let (la, lb) = (max_of(&amp.log_a), max_of(&amp.log_b));
    let (mut re, mut im) = (0.0, 0.0);
    for n in 0..=state.n_max {
        let an = (amp.log_a[n] - la).exp();
        if an == 0.0 {
            continue;
        }
        for k in 0..=two_j {
            let c = state.coeffs[n * state.spin_dim + k];
            if c == 0.0 {
                continue;
            }
            let w = c * an * (amp.log_b[k] - lb).exp();
            let ph = n as f64 * amp.phase_a + k as f64 * amp.phase_b;
            re += w * ph.cos();
            im += w * ph.sin();
        }
    }
    let mag2 = re * re + im * im;
    if mag2.is_nan() {
        return Err(Error::InvalidInput("overlap evaluated to NaN".into()));
    }
    Ok((la + lb + 0.5 * mag2.ln(), -im.atan2(re)))
}

const CHUNK: usize = 2048;

/// ln|⟨E|x⟩|² for every state at every point, batched as one matrix product per chunk of
/// points. States are zero-padded to a common boson cutoff and must share j.
pub fn log_husimi(states: &[FockState], points: &[CoherentPoint]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = states.first() else { return Ok(Vec::new()) };
    let spin = first.spin_dim;
    if states.iter().any(|s| s.spin_dim != spin) {
        return Err(Error::InvalidInput("states with different j in one batch".into()));
    }
    let n_max = states.iter().map(|s| s.n_max).max().unwrap_or(0);
    let n1 = n_max + 1;
    let j = first.j();
    let tables = LogTables::new(n_max, spin - 1);
    let mats: Vec<DMatrix<f64>> = states.iter().map(|s| s.padded(n_max).matrix()).collect();
    let mut out = vec![Vec::with_capacity(points.len()); states.len()];

    for chunk in points.chunks(CHUNK) {
        let m = chunk.len();
        // Columns of `a` are Re/Im of ⟨n|α⟩ scaled by the per-point maximum; `b` holds the
        // scaled spin amplitudes with Re parts in columns 0..m and Im parts in m..2m.
        let mut a_re = DMatrix::<f64>::zeros(n1, m);
        let mut a_im = DMatrix::<f64>::zeros(n1, m);
        let mut b = DMatrix::<f64>::zeros(spin, 2 * m);
        let mut offset = vec![0.0; m];
        for (c, x) in chunk.iter().enumerate() {
            let amp = tables.amplitudes(x, n1, j);
            let (la, lb) = (max_of(&amp.log_a), max_of(&amp.log_b));
            offset[c] = 2.0 * (la + lb);
            for n in 0..n1 {
                let mag = (amp.log_a[n] - la).exp();
                let ph = n as f64 * amp.phase_a;
                a_re[(n, c)] = mag * ph.cos();
                a_im[(n, c)] = mag * ph.sin();
            }
            for k in 0..spin {
                let mag = (amp.log_b[k] - lb).exp();
                let ph = k as f64 * amp.phase_b;
                b[(k, c)] = mag * ph.cos();
                b[(k, m + c)] = mag * ph.sin();
            }
        }
        let rows: Vec<Vec<f64>> = mats
            .par_iter()
            .map(|cm| {
                let t = cm * &b;
                (0..m)
                    .map(|c| {
                        let (tr, ti) = (t.column(c), t.column(m + c));
                        let (ar, ai) = (a_re.column(c), a_im.column(c));
                        let re = ar.dot(&tr) - ai.dot(&ti);
                        let im = ar.dot(&ti) + ai.dot(&tr);
                        offset[c] + (re * re + im * im).ln()
                    })
                    .collect()
            })
            .collect();
        for (o, r) in out.iter_mut().zip(rows) {
            o.extend(r);
        }
    }
    if out.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("Husimi evaluation produced NaN".into()));
    }
    Ok(out)
}
