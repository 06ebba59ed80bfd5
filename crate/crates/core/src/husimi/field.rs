use super::{log_husimi, CoherentPoint, FockState};
use crate::classical::{bosonic_root_qplus, ClassicalityGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// States further than this from the grid energy (scaled units) are flagged.
pub const SECTION_WINDOW: f64 = 0.1;

/// Poincaré–Husimi function of one state on the lattice of a [`ClassicalityGrid`].
///
/// `values` holds Q̃¹/peak per cell (zero off the section); Q̃¹ = peak · values with
/// ln(peak) = `log_peak`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HusimiField {
    pub state: usize,
    pub epsilon_k: f64,
    pub epsilon: f64,
    pub log_peak: f64,
    pub values: Vec<f64>,
    /// |ε_k − ε| exceeds [`SECTION_WINDOW`].
    pub off_window: bool,
}

impl HusimiField {
    /// Q̃^ν relative to peak^ν, pointwise the ν-th power of the ν = 1 values.
    pub fn moment(&self, nu: u32) -> Vec<f64> {
        self.values.iter().map(|v| v.powi(nu as i32)).collect()
    }

    /// ln B_ν, with B_ν = Σ Q̃^ν · cell area over accessible cells.
    pub fn log_norm(&self, nu: u32, grid: &ClassicalityGrid) -> f64 {
        let s: f64 = (0..grid.len())
            .filter(|&c| grid.accessible[c])
            .map(|c| self.values[c].powi(nu as i32))
            .sum();
        nu as f64 * self.log_peak + (s * grid.cell_area()).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapIndexRecord {
    pub state: usize,
    pub nu: u32,
    pub m: f64,
}

/// Fields of `states` (with scaled energies `epsilon_k`) on the section q = q₊, p = 0 at the
/// grid energy.
pub fn poincare_husimi(states: &[FockState], epsilon_k: &[f64], grid: &ClassicalityGrid) -> Result<Vec<HusimiField>> {
    if states.len() != epsilon_k.len() {
        return Err(Error::InvalidInput("one energy per state required".into()));
    }
    let mut cells = Vec::new();
    let mut points = Vec::new();
    for c in (0..grid.len()).filter(|&c| grid.accessible[c]) {
        let (qa, pa) = grid.point(c);
        let Some(q) = bosonic_root_qplus(grid.epsilon, qa, pa, &grid.params) else { continue };
        cells.push(c);
        points.push(CoherentPoint::new(q, 0.0, qa, pa)?);
    }
    let logs = log_husimi(states, &points)?;
    Ok(logs
        .into_iter()
        .enumerate()
        .map(|(s, l)| {
            let peak = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut values = vec![0.0; grid.len()];
            for (&c, v) in cells.iter().zip(&l) {
                values[c] = (v - peak).exp();
            }
            HusimiField {
                state: s,
                epsilon_k: epsilon_k[s],
                epsilon: grid.epsilon,
                log_peak: peak,
                values,
                off_window: (epsilon_k[s] - grid.epsilon).abs() > SECTION_WINDOW,
            }
        })
        .collect())
}

/// M_ν = Σ Q̃^ν χ / Σ Q̃^ν over cells with χ ≠ 0; `None` when the field has no weight there.
pub fn overlap_index_of(values: &[f64], chi: &[i8], nu: u32) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (&v, &x) in values.iter().zip(chi) {
        if x != 0 {
            let w = v.powi(nu as i32);
            num += w * f64::from(x);
            den += w;
        }
    }
    (den > 0.0).then(|| (num / den).clamp(-1.0, 1.0))
}

pub fn overlap_index(field: &HusimiField, grid: &ClassicalityGrid, nu: u32) -> Result<OverlapIndexRecord> {
    if field.values.len() != grid.len() || field.epsilon != grid.epsilon {
        return Err(Error::InvalidInput("field and grid do not share lattice and energy".into()));
    }
    let m = overlap_index_of(&field.values, &grid.chi, nu)
        .ok_or_else(|| Error::Insufficient(format!("state {} has no weight on the section", field.state)))?;
    Ok(OverlapIndexRecord {
        state: field.state,
        nu,
        m,
    })
}
