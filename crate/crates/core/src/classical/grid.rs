use super::lyapunov::{max_lyapunov, LyapunovConfig};
use super::{bosonic_root_qplus, shell_weight, theta, ClassicalState};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cells whose Θ falls below this are treated as inaccessible.
const THETA_MIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub resolution: usize,
    pub lyapunov: LyapunovConfig,
    /// Overrides the default max(10/T, 0.005).
    pub threshold: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 201,
            lyapunov: LyapunovConfig::default(),
            threshold: None,
        }
    }
}

impl GridConfig {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or_else(|| self.lyapunov.threshold())
    }
}

/// Regular lattice over [−2, 2]² on the atomic plane; cell index = iQ · resolution + iP.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalityGrid {
    pub epsilon: f64,
    pub params: ModelParams,
    pub config: GridConfig,
    pub accessible: Vec<bool>,
    /// Shell density w(Q, P); zero off the shell.
    pub weight: Vec<f64>,
    /// NaN where not computed.
    pub lyapunov: Vec<f64>,
    /// +1 chaotic, −1 regular, 0 inaccessible or failed.
    pub chi: Vec<i8>,
    /// Chaotic component id (by descending weight), −1 elsewhere.
    pub component: Vec<i32>,
    /// Accessible cells whose orbit integration failed; excluded from every fraction.
    pub failed: usize,
}

impl ClassicalityGrid {
    pub fn resolution(&self) -> usize {
        self.config.resolution
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        4.0 / (self.resolution() - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        lattice(self.resolution(), i)
    }

    /// (Q, P) of a cell.
    pub fn point(&self, cell: usize) -> (f64, f64) {
        let r = self.resolution();
        (self.coordinate(cell / r), self.coordinate(cell % r))
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Accessible cells with a defined χ.
    pub fn classified(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&c| self.chi[c] != 0)
    }
}

fn lattice(res: usize, i: usize) -> f64 {
    -2.0 + 4.0 * i as f64 / (res - 1) as f64
}

pub fn classicality_grid(epsilon: f64, params: &ModelParams, cfg: &GridConfig) -> Result<ClassicalityGrid> {
    let res = cfg.resolution;
    if res < 3 {
        return Err(Error::InvalidInput(format!("grid resolution {res} < 3")));
    }
    let thr = cfg.threshold();
    let cells: Vec<(bool, f64, f64, bool)> = (0..res * res)
        .into_par_iter()
        .map(|cell| {
            let (qa, pa) = (lattice(res, cell / res), lattice(res, cell % res));
            let th = theta(qa, pa).unwrap_or(0.0);
            let root = bosonic_root_qplus(epsilon, qa, pa, params).filter(|_| th >= THETA_MIN);
            let Some(q) = root else {
                return (false, 0.0, f64::NAN, false);
            };
            let w = shell_weight(qa, pa, epsilon, params);
            match max_lyapunov(&ClassicalState::new(q, 0.0, qa, pa), params, &cfg.lyapunov) {
                Ok(lam) => (true, w, lam, false),
                Err(_) => (true, w, f64::NAN, true),
            }
        })
        .collect();
    let accessible: Vec<bool> = cells.iter().map(|c| c.0).collect();
    if !accessible.iter().any(|&a| a) {
        return Err(Error::EmptyShell { epsilon });
    }
    let chi: Vec<i8> = cells
        .iter()
        .map(|&(acc, _, lam, failed)| match (acc && !failed, lam > thr) {
            (false, _) => 0,
            (true, true) => 1,
            (true, false) => -1,
        })
        .collect();
    let weight: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let component = label_components(res, &chi, &weight);
    Ok(ClassicalityGrid {
        epsilon,
        params: *params,
        config: *cfg,
        accessible,
        weight,
        lyapunov: cells.iter().map(|c| c.2).collect(),
        chi,
        component,
        failed: cells.iter().filter(|c| c.3).count(),
    })
}

/// 4-neighbour connected components of χ = +1 cells, numbered by descending total weight.
fn label_components(res: usize, chi: &[i8], weight: &[f64]) -> Vec<i32> {
    let mut label = vec![-1i32; chi.len()];
    let mut groups: Vec<(f64, usize, Vec<usize>)> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..chi.len() {
        if chi[start] != 1 || label[start] >= 0 {
            continue;
        }
        let id = groups.len() as i32;
        let mut members = Vec::new();
        let mut total = 0.0;
        label[start] = id;
        stack.push(start);
        while let Some(c) = stack.pop() {
            members.push(c);
            total += weight[c];
            let (i, j) = (c / res, c % res);
            let mut visit = |n: usize| {
                if chi[n] == 1 && label[n] < 0 {
                    label[n] = id;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(c - res);
            }
            if i + 1 < res {
                visit(c + res);
            }
            if j > 0 {
                visit(c - 1);
            }
            if j + 1 < res {
                visit(c + 1);
            }
        }
        groups.push((total, start, members));
    }
    groups.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (id, g) in groups.iter().enumerate() {
        for &c in &g.2 {
            label[c] = id as i32;
        }
    }
    label
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosFraction {
    pub total: f64,
    /// Per-component fractions in component-id order; they sum to `total`.
    pub components: Vec<f64>,
}

/// Shell-weighted fraction of the accessible atomic plane with χ = +1.
pub fn chaos_fraction(grid: &ClassicalityGrid) -> Result<ChaosFraction> {
    let denom: f64 = grid.classified().map(|c| grid.weight[c]).sum();
    if denom <= 0.0 {
        return Err(Error::EmptyShell { epsilon: grid.epsilon });
    }
    let n_comp = grid.component.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    let mut components = vec![0.0; n_comp];
    for c in grid.classified() {
        if grid.chi[c] == 1 {
            components[grid.component[c] as usize] += grid.weight[c];
        }
    }
    for v in &mut components {
        *v /= denom;
    }
    Ok(ChaosFraction {
        total: components.iter().fold(0.0, |a, b| a + b),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(chi: Vec<i8>, res: usize) -> ClassicalityGrid {
        let weight: Vec<f64> = chi.iter().map(|&c| if c == 0 { 0.0 } else { 1.0 }).collect();
        let component = label_components(res, &chi, &weight);
        ClassicalityGrid {
            epsilon: 0.0,
            params: ModelParams::one_photon(10.0),
            config: GridConfig {
                resolution: res,
                ..Default::default()
            },
            accessible: chi.iter().map(|&c| c != 0).collect(),
            weight,
            lyapunov: vec![0.0; res * res],
            chi,
            component,
            failed: 0,
        }
    }

    #[test]
    fn components_are_four_connected_and_sorted() {
        #[rustfmt::skip]
        let chi = vec![
            1, 1, -1, 1,
            1, -1, 1, -1,
            -1, -1, -1, 1,
            1, 1, 1, 1,
        ];
        let g = synthetic(chi, 4);
        let cf = chaos_fraction(&g).unwrap();
        // components: bottom row + right column (5 cells), top-left (3), (0,3) alone, (1,2) alone
        assert_eq!(cf.components.len(), 4);
        assert!((cf.components[0] - 5.0 / 16.0).abs() < 1e-15);
        assert!((cf.components[1] - 3.0 / 16.0).abs() < 1e-15);
        assert!((cf.total - 10.0 / 16.0).abs() < 1e-15);
        assert_eq!(g.component[15], 0);
        assert_eq!(g.component[0], 1);
    }

    #[test]
    fn regular_grid_has_zero_fraction() {
        let g = synthetic(vec![-1; 9], 3);
        let cf = chaos_fraction(&g).unwrap();
        assert_eq!(cf.total, 0.0);
        assert!(cf.components.is_empty());
        assert!(chaos_fraction(&synthetic(vec![0; 9], 3)).is_err());
    }

    #[test]
    fn coarse_grid_access_and_symmetry() {
        let p = ModelParams::one_photon(10.0);
        let cfg = GridConfig {
            resolution: 9,
            lyapunov: LyapunovConfig {
                t_total: 200.0,
                ..Default::default()
            },
            threshold: None,
        };
        let g = classicality_grid(-0.9, &p, &cfg).unwrap();
        let r = cfg.resolution;
        for c in 0..g.len() {
            let mirror = (c / r) * r + (r - 1 - c % r);
            assert_eq!(g.accessible[c], g.accessible[mirror]);
            let (qa, pa) = g.point(c);
            assert_eq!(g.accessible[c], bosonic_root_qplus(-0.9, qa, pa, &p).is_some() && theta(qa, pa).unwrap_or(0.0) >= THETA_MIN);
        }
        assert!(classicality_grid(-1.5, &p, &cfg).is_err());
    }
}
