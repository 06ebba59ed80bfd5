//! Regular / mixed / chaotic classification of eigenstates by their overlap index, the
//! mixed-eigenstate fraction over system-size ensembles, and its power-law decay.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Moments ν = 1..=4 of the overlap index are tracked per state.
pub const MOMENTS: usize = 4;
/// Bound intervals at least this wide form the region the exponents are averaged over.
pub const LARGE_DELTA_M: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationBounds {
    pub m_minus: f64,
    pub m_plus: f64,
}

impl ClassificationBounds {
    pub fn new(m_minus: f64, m_plus: f64) -> Result<Self> {
        if !(-1.0 < m_minus && m_minus < m_plus && m_plus < 1.0) {
            return Err(Error::InvalidInput(format!("bounds need −1 < M₋ < M₊ < 1, got ({m_minus}, {m_plus})")));
        }
        Ok(Self { m_minus, m_plus })
    }

    pub fn one_photon() -> Self {
        Self { m_minus: -0.8, m_plus: 0.7 }
    }

    pub fn two_photon() -> Self {
        Self { m_minus: -0.8, m_plus: 0.85 }
    }

    pub fn for_coupling(f: u8) -> Self {
        if f == 1 {
            Self::one_photon()
        } else {
            Self::two_photon()
        }
    }

    pub fn width(&self) -> f64 {
        self.m_plus - self.m_minus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateClass {
    Regular,
    Mixed,
    Chaotic,
}

/// Regular below M₋, chaotic above M₊, mixed on the closed interval between.
pub fn classify_one(m: f64, bounds: &ClassificationBounds) -> StateClass {
    if m < bounds.m_minus {
        StateClass::Regular
    } else if m > bounds.m_plus {
        StateClass::Chaotic
    } else {
        StateClass::Mixed
    }
}

pub fn classify(m: &[f64], bounds: &ClassificationBounds) -> Vec<StateClass> {
    m.iter().map(|&x| classify_one(x, bounds)).collect()
}

/// η = N_ΔM / N_Δε.
pub fn mixed_fraction(labels: &[StateClass], window_count: usize) -> Result<f64> {
    if window_count == 0 {
        return Err(Error::Insufficient("empty energy window".into()));
    }
    let mixed = labels.iter().filter(|&&c| c == StateClass::Mixed).count();
    if mixed > window_count {
        return Err(Error::InvalidInput(format!("{mixed} mixed labels exceed window count {window_count}")));
    }
    Ok(mixed as f64 / window_count as f64)
}

/// Per-state indices of one ensemble member, with the member's system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub j: f64,
    pub k: usize,
    pub epsilon_k: f64,
    pub parity: u8,
    /// M_1..M_4; NaN where undefined.
    pub m: [f64; MOMENTS],
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub j: f64,
    pub records: Vec<StateRecord>,
    /// Converged states in the window over all sectors.
    pub window_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<f64>,
    pub records: Vec<StateRecord>,
    pub window_count: usize,
    /// System sizes dropped for having no converged states in the window.
    pub excluded: Vec<f64>,
}

impl Ensemble {
    /// Mean system size of the contributing members.
    pub fn mean_j(&self) -> f64 {
        self.members.iter().sum::<f64>() / self.members.len() as f64
    }

    pub fn overlap_indices(&self, nu: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.m[nu - 1]).collect()
    }
}

/// Pools members into one statistical window; the result does not depend on member order.
pub fn ensemble_assemble(members: &[Member]) -> Result<Ensemble> {
    let mut sorted: Vec<&Member> = members.iter().collect();
    sorted.sort_by(|a, b| a.j.total_cmp(&b.j));
    if sorted.windows(2).any(|w| w[0].j == w[1].j) {
        return Err(Error::InvalidInput("ensemble members must have distinct j".into()));
    }
    let mut out = Ensemble {
        members: Vec::new(),
        records: Vec::new(),
        window_count: 0,
        excluded: Vec::new(),
    };
    for m in sorted {
        if m.window_count == 0 {
            out.excluded.push(m.j);
            continue;
        }
        if m.records.len() > m.window_count {
            return Err(Error::InvalidInput(format!("member j = {} has more records than window states", m.j)));
        }
        out.members.push(m.j);
        out.window_count += m.window_count;
        let mut recs = m.records.clone();
        recs.sort_by_key(|r| r.k);
        out.records.extend(recs);
    }
    if out.members.is_empty() {
        return Err(Error::Insufficient("no ensemble member has converged states in the window".into()));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub j: f64,
    pub n_mixed: usize,
    pub n_total: usize,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub xi: f64,
    /// RMS residual in ln η.
    pub residual: f64,
    pub points_used: usize,
    /// System sizes whose η = 0 could not enter the log fit.
    pub dropped: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedFractionSeries {
    pub nu: usize,
    pub bounds: ClassificationBounds,
    pub points: Vec<SeriesPoint>,
    pub fit: Option<PowerLawFit>,
}

/// η_ν per ensemble (at the ensemble's mean j), with a power-law fit when enough points
/// are non-zero.
pub fn mixed_fraction_series(ensembles: &[Ensemble], nu: usize, bounds: &ClassificationBounds) -> Result<MixedFractionSeries> {
    if !(1..=MOMENTS).contains(&nu) {
        return Err(Error::InvalidInput(format!("moment {nu} outside 1..={MOMENTS}")));
    }
    let points = ensembles
        .iter()
        .map(|e| {
            let labels = classify(&e.overlap_indices(nu), bounds);
            let n_mixed = labels.iter().filter(|&&c| c == StateClass::Mixed).count();
            Ok(SeriesPoint {
                j: e.mean_j(),
                n_mixed,
                n_total: e.window_count,
                eta: mixed_fraction(&labels, e.window_count)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = power_law_fit(&points.iter().map(|p| (p.j, p.eta)).collect::<Vec<_>>()).ok();
    Ok(MixedFractionSeries {
        nu,
        bounds: *bounds,
        points,
        fit,
    })
}

/// Least squares for ln η = ln A − ξ ln j over the points with η > 0 (at least three).
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let dropped: Vec<f64> = points.iter().filter(|p| !(p.1 > 0.0)).map(|p| p.0).collect();
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(j, eta)| (j.ln(), eta.ln()))
        .collect();
    if used.len() < 3 {
        return Err(Error::Insufficient(format!("{} points with η > 0, need 3", used.len())));
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all points share one system size".into()));
    }
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (used.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PowerLawFit {
        a: intercept.exp(),
        xi: -slope,
        residual,
        points_used: used.len(),
        dropped,
    })
}

/// Decay exponent through two points, ξ = −ln(η₂/η₁)/ln(j₂/j₁).
pub fn two_point_exponent((j1, eta1): (f64, f64), (j2, eta2): (f64, f64)) -> Result<f64> {
    if !(eta1 > 0.0 && eta2 > 0.0) || j1 == j2 {
        return Err(Error::Insufficient("two distinct sizes with η > 0 required".into()));
    }
    Ok(-(eta2 / eta1).ln() / (j2 / j1).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub m_minus: f64,
    pub m_plus: f64,
    pub delta_m: f64,
    pub xi: Option<f64>,
    pub large: bool,
    /// Why `xi` is missing.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScan {
    pub nu: usize,
    pub points: Vec<ScanPoint>,
    /// Mean ξ over every bound with a fit.
    pub mean_all: Option<f64>,
    /// Mean ξ over bounds with ΔM ≥ [`LARGE_DELTA_M`].
    pub mean_large: Option<f64>,
}

/// ξ_ν as the lower bound moves through `m_minus_values` with M₊ fixed.
pub fn boundary_scan(ensembles: &[Ensemble], nu: usize, m_plus: f64, m_minus_values: &[f64]) -> Result<BoundaryScan> {
    let mut points = Vec::with_capacity(m_minus_values.len());
    for &m_minus in m_minus_values {
        let bounds = ClassificationBounds::new(m_minus, m_plus)?;
        let series = mixed_fraction_series(ensembles, nu, &bounds)?;
        let (xi, skipped) = match power_law_fit(&series.points.iter().map(|p| (p.j, p.eta)).collect::<Vec<_>>()) {
            Ok(f) => (Some(f.xi), None),
            Err(e) => (None, Some(e.to_string())),
        };
        points.push(ScanPoint {
            m_minus,
            m_plus,
            delta_m: bounds.width(),
            xi,
            large: bounds.width() >= LARGE_DELTA_M,
            skipped,
        });
    }
    let mean = |pred: &dyn Fn(&ScanPoint) -> bool| {
        let v: Vec<f64> = points.iter().filter(|p| pred(p)).filter_map(|p| p.xi).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mean_all = mean(&|_| true);
    let mean_large = mean(&|p| p.large);
    Ok(BoundaryScan {
        nu,
        points,
        mean_all,
        mean_large,
    })
}

/// Evenly spaced lower bounds from `lo` (inclusive) towards `hi` (exclusive).
pub fn bound_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step - 1e-9).ceil().max(0.0) as usize;
    (0..n).map(|i| lo + i as f64 * step).collect()
}
