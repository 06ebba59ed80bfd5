//! Superposition surrogate for spectra with regular and chaotic components.
//!
//! Each component contributes an independent level sequence at density equal to its phase-
//! space fraction: a Poisson process for the regular part, and concatenated GOE chains for
//! each chaotic part. The union has unit mean density.

use super::{ratios_of_levels, RatioSample};
use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigenvalues;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Matrix size of the tridiagonal GOE chains.
pub const GOE_CHAIN_SIZE: usize = 500;
/// Fraction of each chain discarded at either spectral edge before concatenation.
const EDGE_CUT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub regular: f64,
    pub chaotic: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(regular: f64, chaotic: Vec<f64>) -> Result<Self> {
        let s = Self { regular, chaotic };
        s.validate()?;
        Ok(s)
    }

    /// Regular part plus one chaotic component of fraction `mu_c`.
    pub fn single(mu_c: f64) -> Result<Self> {
        Self::new(1.0 - mu_c, vec![mu_c])
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.regular + self.chaotic.iter().sum::<f64>();
        let nonneg = self.regular >= 0.0 && self.chaotic.iter().all(|&c| c >= 0.0);
        if nonneg && (total - 1.0).abs() < 1e-9 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("mixture fractions must be non-negative and sum to 1, got {total}")))
        }
    }
}

/// Levels of one β = 1 tridiagonal Hermite matrix, unfolded to unit density by the semicircle
/// law, with the outer `EDGE_CUT` of the spectrum on each side removed.
pub fn goe_chain(rng: &mut impl Rng, n: usize) -> Result<Vec<f64>> {
    // Diagonal N(0, 1), off-diagonal χ_{n−i}/√2: the GOE with semicircle radius √(2n).
    let d: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let e: Vec<f64> = (1..n)
        .map(|i| {
            let chi2 = ChiSquared::new((n - i) as f64).expect("positive degrees of freedom");
            (chi2.sample(rng) / 2.0).sqrt()
        })
        .collect();
    let eig = tridiagonal_eigenvalues(&d, &e)?;
    let radius = (2.0 * n as f64).sqrt();
    let staircase = |x: f64| {
        let x = (x / radius).clamp(-1.0, 1.0);
        n as f64 * (0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI)
    };
    let lo = (EDGE_CUT * n as f64).round() as usize;
    Ok(eig[lo..n - lo].iter().map(|&x| staircase(x)).collect())
}

/// Concatenated GOE chains covering [0, span) at the given density.
fn goe_sequence(rng: &mut impl Rng, density: f64, span: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut offset = 0.0;
    while offset < span * density {
        let chain = goe_chain(rng, GOE_CHAIN_SIZE)?;
        let shift = offset - chain[0];
        out.extend(chain.iter().map(|x| x + shift));
        // Start the next chain one mean spacing after this one ends.
        offset = out[out.len() - 1] + 1.0;
    }
    let limit = span * density;
    Ok(out.into_iter().take_while(|&x| x < limit).map(|x| x / density).collect())
}

fn poisson_sequence(rng: &mut impl Rng, density: f64, span: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x: f64 = rng.sample::<f64, _>(Exp1) / density;
    while x < span {
        out.push(x);
        x += rng.sample::<f64, _>(Exp1) / density;
    }
    out
}

/// Sorted union of all component sequences over a span of `n_levels` unit spacings.
pub fn surrogate_levels(spec: &MixtureSpec, n_levels: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let span = n_levels as f64;
    let mut levels = Vec::with_capacity(n_levels + 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if spec.regular > 0.0 {
        rng.set_stream(0);
        levels.extend(poisson_sequence(&mut rng, spec.regular, span));
    }
    for (i, &mu) in spec.chaotic.iter().enumerate() {
        if mu > 0.0 {
            rng.set_stream(i as u64 + 1);
            rng.set_word_pos(0);
            levels.extend(goe_sequence(&mut rng, mu, span)?);
        }
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

pub fn surrogate_mixed_sample(spec: &MixtureSpec, n_levels: usize, seed: u64) -> Result<RatioSample> {
    if n_levels < 100 {
        return Err(Error::InvalidInput(format!("n_levels = {n_levels} < 100")));
    }
    ratios_of_levels(&surrogate_levels(spec, n_levels, seed)?, 0)
}

/// Surrogate ⟨r⟩ against a single chaotic fraction, averaged over `seeds` runs.
pub fn mean_ratio_vs_chaos_curve(
    mu_grid: &[f64],
    n_levels: usize,
    seeds: u64,
    base_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    mu_grid
        .iter()
        .map(|&mu| {
            let spec = MixtureSpec::single(mu)?;
            let means: Result<Vec<f64>> = (0..seeds)
                .into_par_iter()
                .map(|s| Ok(surrogate_mixed_sample(&spec, n_levels, base_seed.wrapping_add(s))?.mean()))
                .collect();
            let means = means?;
            Ok((mu, means.iter().sum::<f64>() / means.len() as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{POISSON_MEAN, GOE_MEAN};

    #[test]
    fn unfolded_chain_has_unit_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = goe_chain(&mut rng, GOE_CHAIN_SIZE).unwrap();
        let mean_spacing = (chain[chain.len() - 1] - chain[0]) / (chain.len() - 1) as f64;
        assert!((mean_spacing - 1.0).abs() < 0.03, "{mean_spacing}");
    }

    #[test]
    fn pure_components_recover_their_means() {
        let p = surrogate_mixed_sample(&MixtureSpec::new(1.0, vec![]).unwrap(), 100_000, 3).unwrap();
        assert!((p.mean() - POISSON_MEAN).abs() < 0.01, "{}", p.mean());
        let g = surrogate_mixed_sample(&MixtureSpec::single(1.0).unwrap(), 100_000, 3).unwrap();
        assert!((g.mean() - GOE_MEAN).abs() < 0.01, "{}", g.mean());
    }

    #[test]
    fn levels_have_unit_density_and_are_reproducible() {
        let spec = MixtureSpec::new(0.13, vec![0.17, 0.70]).unwrap();
        let a = surrogate_levels(&spec, 20_000, 9).unwrap();
        let b = surrogate_levels(&spec, 20_000, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.len() as f64 / 20_000.0 - 1.0).abs() < 0.03, "{}", a.len());
        assert!(MixtureSpec::new(0.5, vec![0.6]).is_err());
    }
}
