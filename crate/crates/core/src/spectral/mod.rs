//! Spectral-ratio statistics: ratios, reference densities, a superposition surrogate for
//! mixed spectra, and the Anderson–Darling statistic.

mod surrogate;

pub use surrogate::{
    goe_chain, mean_ratio_vs_chaos_curve, surrogate_levels, surrogate_mixed_sample, MixtureSpec,
    GOE_CHAIN_SIZE,
};

use crate::error::{Error, Result};
use crate::model::{EigenSolution, ParityLabel};
use serde::{Deserialize, Serialize};

/// ⟨r⟩ for uncorrelated levels, 2 ln 2 − 1.
pub const POISSON_MEAN: f64 = 0.386_294_361_119_890_6;
/// ⟨r⟩ of the GOE surmise, 4 − 2√3.
pub const GOE_MEAN: f64 = 0.535_898_384_862_245_4;

/// Spacings below this multiple of the mean spacing count as degeneracies.
const DEGENERACY_TOL: f64 = 1e-12;

/// Converged levels of one parity sector inside a scaled-energy window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumWindow {
    pub levels: Vec<f64>,
    pub label: ParityLabel,
    pub j: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
}

impl SpectrumWindow {
    pub fn from_solution(sol: &EigenSolution, sector: usize, eps_lo: f64, eps_hi: f64) -> Self {
        let levels = (0..sol.len())
            .filter(|&k| sol.sector[k] == sector && sol.converged[k])
            .filter(|&k| (eps_lo..=eps_hi).contains(&sol.scaled_energy(k)))
            .map(|k| sol.energies[k])
            .collect();
        Self {
            levels,
            label: sol.layouts[sector].label,
            j: sol.params.j,
            eps_lo,
            eps_hi,
        }
    }

    /// One window per parity sector, in sector order.
    pub fn per_sector(sol: &EigenSolution, eps_lo: f64, eps_hi: f64) -> Vec<Self> {
        (0..sol.layouts.len())
            .map(|s| Self::from_solution(sol, s, eps_lo, eps_hi))
            .collect()
    }
}

/// Ratios with the tag of the spacing sequence each came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub values: Vec<f64>,
    pub tags: Vec<u32>,
    /// Near-degenerate spacings removed before forming ratios.
    pub dropped: usize,
    /// Spacings examined, including dropped ones.
    pub spacings: usize,
}

impl RatioSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// True when more than 0.1% of the spacings were dropped as degenerate.
    pub fn degeneracy_warning(&self) -> bool {
        self.dropped * 1000 > self.spacings
    }

    /// Concatenates samples; each ratio keeps its own tag, so sequences are never merged.
    pub fn pool(samples: &[RatioSample]) -> RatioSample {
        let mut out = RatioSample::default();
        for s in samples {
            out.values.extend_from_slice(&s.values);
            out.tags.extend_from_slice(&s.tags);
            out.dropped += s.dropped;
            out.spacings += s.spacings;
        }
        out
    }
}

/// r_k = min(s_k, s_{k−1}) / max(s_k, s_{k−1}) over one ascending level sequence.
pub fn ratios_of_levels(levels: &[f64], tag: u32) -> Result<RatioSample> {
    if levels.len() < 3 {
        return Err(Error::Insufficient(format!("{} levels, need at least 3", levels.len())));
    }
    let n = levels.len();
    let mean_spacing = (levels[n - 1] - levels[0]) / (n - 1) as f64;
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    if spacings.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::InvalidInput("levels must be finite and ascending".into()));
    }
    let kept: Vec<f64> = spacings
        .iter()
        .copied()
        .filter(|&s| s > DEGENERACY_TOL * mean_spacing)
        .collect();
    if kept.len() < 2 {
        return Err(Error::Insufficient("fewer than two non-degenerate spacings".into()));
    }
    let values: Vec<f64> = kept.windows(2).map(|w| w[0].min(w[1]) / w[0].max(w[1])).collect();
    Ok(RatioSample {
        tags: vec![tag; values.len()],
        values,
        dropped: spacings.len() - kept.len(),
        spacings: spacings.len(),
    })
}

pub fn ratios(window: &SpectrumWindow) -> Result<RatioSample> {
    ratios_of_levels(&window.levels, u32::from(window.label.0))
}

/// r_c = (⟨r⟩ − ⟨r⟩_P) / (⟨r⟩_GOE − ⟨r⟩_P).
pub fn normalized_ratio(mean_r: f64) -> f64 {
    (mean_r - POISSON_MEAN) / (GOE_MEAN - POISSON_MEAN)
}

fn check_unit(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("ratio {r} outside [0, 1]")))
    }
}

pub fn pdf_poisson_r(r: f64) -> Result<f64> {
    check_unit(r)?;
    Ok(2.0 / ((1.0 + r) * (1.0 + r)))
}

pub fn pdf_goe_r(r: f64) -> Result<f64> {
    check_unit(r)?;
    let u = 1.0 + r + r * r;
    Ok(6.75 * (r + r * r) / (u * u * u.sqrt()))
}

pub fn cdf_poisson_r(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    2.0 * r / (1.0 + r)
}

/// Closed-form antiderivative of the GOE ratio density.
pub fn cdf_goe_r(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    let u = 1.0 + r + r * r;
    1.0 + (r * r * r + 1.5 * r * r - 1.5 * r - 1.0) / (u * u.sqrt())
}

/// Continuous piecewise-linear CDF through (x_(i), (i + ½)/n), pinned to 0 at r = 0 and 1 at
/// r = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let knot = |i: usize| (i as f64 + 0.5) / n as f64;
        let k = self.sorted.partition_point(|&v| v <= x);
        let (x0, y0, x1, y1) = match k {
            0 => (0.0, 0.0, self.sorted[0], knot(0)),
            k if k == n => (self.sorted[n - 1], knot(n - 1), 1.0, 1.0),
            k => (self.sorted[k - 1], knot(k - 1), self.sorted[k], knot(k)),
        };
        if x1 <= x0 {
            return y1;
        }
        (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub a2: f64,
    /// Reference CDF values pushed into (0, 1) to keep the logarithms finite.
    pub clamped: usize,
}

/// A² = −n − (1/n) Σ (2i − 1)[ln F(x_(i)) + ln(1 − F(x_(n+1−i)))].
pub fn anderson_darling(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<AndersonDarling> {
    let n = values.len();
    if n < 20 {
        return Err(Error::Insufficient(format!("{n} values, need at least 20")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let eps = 1e-15;
    let mut clamped = 0;
    let u: Vec<f64> = sorted
        .iter()
        .map(|&x| {
            let f = cdf(x);
            if f < eps || f > 1.0 - eps {
                clamped += 1;
            }
            f.clamp(eps, 1.0 - eps)
        })
        .collect();
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (u[i].ln() + (1.0 - u[n - 1 - i]).ln()))
        .sum();
    Ok(AndersonDarling {
        a2: -(n as f64) - s / n as f64,
        clamped,
    })
}
