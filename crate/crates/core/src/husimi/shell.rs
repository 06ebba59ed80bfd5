//! Rényi–Wehrl localization on the energy shell.
//!
//! Shell integrals ∫ds F = ∫dx δ(h − ε) F are reduced over (q, p) to the ellipse of
//! [`shell_conic`] and estimated by Monte Carlo stratified over (Q, P) cells.

use super::{log_husimi, CoherentPoint, FockState};
use crate::classical::shell_conic;
use crate::error::{Error, Result};
use crate::model::{EigenSolution, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_SHELL_SAMPLES: usize = 200_000;
/// Strata per side of the (Q, P) square.
const STRATA: usize = 64;
/// Fewer accepted samples than this is reported as starvation.
const MIN_ACCEPTED: usize = 1000;

/// Weighted points on the shell; Σ weights · F estimates ∫ds F.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellSamples {
    pub epsilon: f64,
    pub points: Vec<CoherentPoint>,
    pub weights: Vec<f64>,
    /// Samples drawn, including those that fell off the shell.
    pub drawn: usize,
}

impl ShellSamples {
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn shell_samples(epsilon: f64, params: &ModelParams, n_samples: usize, seed: u64) -> Result<ShellSamples> {
    let h = 4.0 / STRATA as f64;
    let strata: Vec<usize> = (0..STRATA * STRATA)
        .filter(|&s| {
            // keep cells whose nearest point to the origin is inside the disk
            let near = |i: usize| {
                let (lo, hi) = (-2.0 + i as f64 * h, -2.0 + (i + 1) as f64 * h);
                if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 }
            };
            near(s / STRATA).hypot(near(s % STRATA)) < 2.0
        })
        .collect();
    let per = n_samples.div_ceil(strata.len()).max(1);
    let parts: Vec<(Vec<CoherentPoint>, Vec<f64>)> = strata
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let (q0, p0) = (-2.0 + (s / STRATA) as f64 * h, -2.0 + (s % STRATA) as f64 * h);
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for _ in 0..per {
                let qa = q0 + h * rng.random::<f64>();
                let pa = p0 + h * rng.random::<f64>();
                let angle = 2.0 * PI * rng.random::<f64>();
                let Some(conic) = shell_conic(epsilon, qa, pa, params) else { continue };
                let (q, p) = conic.point(angle);
                pts.push(CoherentPoint { q, p, Q: qa, P: pa });
                wts.push(h * h * conic.weight / per as f64);
            }
            (pts, wts)
        })
        .collect();
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    for (p, w) in parts {
        points.extend(p);
        weights.extend(w);
    }
    let drawn = per * strata.len();
    if points.len() < MIN_ACCEPTED {
        return Err(Error::Insufficient(format!(
            "shell at epsilon = {epsilon}: {} of {drawn} samples accepted",
            points.len()
        )));
    }
    Ok(ShellSamples {
        epsilon,
        points,
        weights,
        drawn,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellMeasures {
    pub l1: f64,
    pub l2: f64,
}

/// L1 = (C/V) exp(−(1/C)∫ds Q ln Q) and L2 = (C²/V)(∫ds Q²)⁻¹ with C = ∫ds Q, V = ∫ds, for
/// non-negative field values at weighted shell samples. Invariant under Q → cQ.
pub fn shell_measures(values: &[f64], weights: &[f64]) -> Result<ShellMeasures> {
    if values.len() != weights.len() || values.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidInput("field values must be non-negative, one per sample".into()));
    }
    let peak = values.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Insufficient("field vanishes on every sample".into()));
    }
    let (mut v, mut c, mut s, mut c2) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &w) in values.iter().zip(weights) {
        let u = x / peak;
        v += w;
        c += w * u;
        c2 += w * u * u;
        if u > 0.0 {
            s += w * u * u.ln();
        }
    }
    Ok(ShellMeasures {
        l1: c / v * (-s / c).exp(),
        l2: c * c / (v * c2),
    })
}

fn measures_from_logs(logs: &[f64], weights: &[f64]) -> Result<ShellMeasures> {
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    shell_measures(&values, weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub l1_max: f64,
    pub l1_err: f64,
    pub l2_max: f64,
    pub l2_err: f64,
    pub ensemble_size: usize,
    /// Eigenstates the random superpositions were drawn over.
    pub basis_states: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationRecord {
    pub state: usize,
    pub epsilon_k: f64,
    pub l1: f64,
    pub l2: f64,
    pub samples: usize,
}

/// L1 and L2 of one state on the shell at its own scaled energy `epsilon_k`.
pub fn shell_localization(
    state: &FockState,
    index: usize,
    epsilon_k: f64,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
) -> Result<LocalizationRecord> {
    let shell = shell_samples(epsilon_k, params, n_samples, seed)?;
    let logs = log_husimi(std::slice::from_ref(state), &shell.points)?;
    let m = measures_from_logs(&logs[0], &shell.weights)?;
    Ok(LocalizationRecord {
        state: index,
        epsilon_k,
        l1: m.l1,
        l2: m.l2,
        samples: shell.points.len(),
    })
}

fn mean_and_error(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Mean L1, L2 of random Gaussian superpositions of the converged states of `window`,
/// measured on the shell at `epsilon`.
pub fn delocalization_thresholds(
    window: &EigenSolution,
    epsilon: f64,
    ensemble_size: usize,
    n_samples: usize,
    seed: u64,
    delta: f64,
) -> Result<Thresholds> {
    if ensemble_size < 20 {
        return Err(Error::InvalidInput(format!("ensemble size {ensemble_size} < 20")));
    }
    let members: Vec<usize> = (0..window.len()).filter(|&k| window.converged[k]).collect();
    if members.len() < 10 {
        return Err(Error::Insufficient(format!("{} converged states in the window, need 10", members.len())));
    }
    let basis: Vec<FockState> = members.iter().map(|&k| FockState::from_solution(window, k, delta)).collect();
    let n_max = basis.iter().map(|s| s.n_max).max().unwrap_or(0);
    let basis: Vec<FockState> = basis.iter().map(|s| s.padded(n_max)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<FockState> = (0..ensemble_size)
        .map(|_| {
            let mut c = vec![0.0; basis[0].coeffs.len()];
            for b in &basis {
                let g: f64 = rng.sample(StandardNormal);
                c.iter_mut().zip(&b.coeffs).for_each(|(x, y)| *x += g * y);
            }
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            c.iter_mut().for_each(|v| *v /= norm);
            FockState { n_max, spin_dim: basis[0].spin_dim, coeffs: c }
        })
        .collect();
    let shell = shell_samples(epsilon, &window.params, n_samples, seed.wrapping_add(1))?;
    let logs = log_husimi(&random, &shell.points)?;
    let measures = logs
        .iter()
        .map(|l| measures_from_logs(l, &shell.weights))
        .collect::<Result<Vec<_>>>()?;
    let (l1_max, l1_err) = mean_and_error(&measures.iter().map(|m| m.l1).collect::<Vec<_>>());
    let (l2_max, l2_err) = mean_and_error(&measures.iter().map(|m| m.l2).collect::<Vec<_>>());
    Ok(Thresholds {
        l1_max,
        l1_err,
        l2_max,
        l2_err,
        ensemble_size,
        basis_states: members.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::shell_weight;

    #[test]
    fn uniform_field_saturates_both_measures() {
        let w = [0.5, 1.5, 2.0, 0.25];
        let m = shell_measures(&[3.0; 4], &w).unwrap();
        assert!((m.l1 - 1.0).abs() < 1e-15 && (m.l2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_support_indicator_has_half_participation() {
        let w = [1.0, 1.0, 2.0, 2.0];
        let m = shell_measures(&[1.0, 0.0, 1.0, 0.0], &w).unwrap();
        assert!((m.l2 - 0.5).abs() < 1e-15);
        assert!((m.l1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampled_volume_matches_weight_quadrature() {
        let params = ModelParams::one_photon(10.0);
        let s = shell_samples(0.0, &params, 100_000, 3).unwrap();
        // midpoint rule for ∫ w(Q, P) dQ dP on a fine lattice
        let n = 800;
        let h = 4.0 / n as f64;
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                v += shell_weight(-2.0 + (a as f64 + 0.5) * h, -2.0 + (b as f64 + 0.5) * h, 0.0, &params) * h * h;
            }
        }
        assert!((s.volume() / v - 1.0).abs() < 2e-3, "{} vs {v}", s.volume());
        assert_eq!(s, shell_samples(0.0, &params, 100_000, 3).unwrap());
    }

    #[test]
    fn starved_shell_is_reported() {
        let params = ModelParams::one_photon(10.0);
        assert!(matches!(shell_samples(-0.99999, &params, 20_000, 1), Err(Error::Insufficient(_))));
    }
}
