use super::{csv_bytes, grid_key, grid_rel, json_bytes, num};
use crate::cache::{load_grid, save_grid};
use crate::error::{CliError, CliResult};
use crate::pipeline::StageContext;
use dicke_core::classical::{
    bosonic_root_qplus, chaos_fraction, classicality_grid, poincare_section, ClassicalState, ClassicalityGrid, Tolerance,
};
use dicke_core::model::classical_photon_bound;
use rayon::prelude::*;
use serde::Serialize;

/// Components below this fraction of the shell are lattice-scale specks, reported but not
/// counted as separate chaotic regions.
pub const SIGNIFICANT_COMPONENT: f64 = 0.01;

#[derive(Serialize)]
pub struct GridSummary {
    pub epsilon: f64,
    pub mu_c: f64,
    pub components: Vec<f64>,
    pub significant_components: Vec<f64>,
    pub threshold: f64,
    pub resolution: usize,
    pub failed_cells: usize,
}

fn grid_table(g: &ClassicalityGrid) -> Vec<u8> {
    let p = &g.params;
    let mut out = format!(
        "# epsilon={},omega={},omega0={},gamma={},f={},t_total={},renorm={},threshold={},resolution={}\n",
        g.epsilon,
        p.omega,
        p.omega0,
        p.gamma,
        p.f,
        g.config.lyapunov.t_total,
        g.config.lyapunov.renorm,
        g.config.threshold(),
        g.resolution()
    )
    .into_bytes();
    let rows = (0..g.len()).map(|c| {
        let (qa, pa) = g.point(c);
        vec![
            num(qa),
            num(pa),
            g.accessible[c].to_string(),
            num(g.lyapunov[c]),
            g.chi[c].to_string(),
            g.component[c].to_string(),
            num(g.weight[c]),
        ]
    });
    out.extend(csv_bytes(&["Q", "P", "accessible", "lambda", "chi", "component_id", "weight"], rows));
    out
}

/// Orbits launched from evenly spaced classified cells of the grid.
fn poincare_table(ctx: &StageContext, g: &ClassicalityGrid) -> CliResult<Vec<u8>> {
    let c = &ctx.cfg.classical;
    let cells: Vec<usize> = g.classified().collect();
    let n = c.poincare_orbits.min(cells.len());
    let tol = Tolerance {
        rtol: c.rtol,
        atol: c.atol,
    };
    let orbits = (0..n)
        .into_par_iter()
        .map(|i| {
            let cell = cells[(2 * i + 1) * cells.len() / (2 * n)];
            let (qa, pa) = g.point(cell);
            let q = bosonic_root_qplus(g.epsilon, qa, pa, &g.params).expect("classified cells lie on the shell");
            let x0 = ClassicalState::new(q, 0.0, qa, pa);
            poincare_section(&x0, &g.params, c.poincare_crossings, 50.0 * c.poincare_crossings as f64, tol)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows = orbits.iter().enumerate().flat_map(|(id, s)| {
        s.atomic()
            .enumerate()
            .map(move |(k, (qa, pa))| vec![id.to_string(), k.to_string(), num(qa), num(pa)])
    });
    Ok(csv_bytes(&["orbit_id", "crossing_index", "Q", "P"], rows))
}

pub fn run(ctx: &mut StageContext) -> CliResult<()> {
    let cfg = ctx.cfg;
    let params = cfg.model.params()?;
    for &eps in &cfg.classical.energies {
        if classical_photon_bound(&params, eps).is_none() {
            return Err(CliError::Config(format!("epsilon = {eps} lies below the classical ground-state energy")));
        }
        let key = grid_key(cfg, eps)?;
        let rel = grid_rel(&key);
        let cached = if ctx.resume { load_grid(&ctx.path(&rel), &key)? } else { None };
        let grid = match cached {
            Some(g) => g,
            None => {
                let g = classicality_grid(eps, &params, &key.grid)?;
                ctx.ensure_dir(super::GRID_CACHE)?;
                save_grid(&ctx.path(&rel), &key, &g)?;
                g
            }
        };
        ctx.register(&rel);
        let cf = chaos_fraction(&grid)?;
        let summary = GridSummary {
            epsilon: eps,
            mu_c: cf.total,
            significant_components: cf.components.iter().copied().filter(|&w| w >= SIGNIFICANT_COMPONENT).collect(),
            components: cf.components,
            threshold: grid.config.threshold(),
            resolution: grid.resolution(),
            failed_cells: grid.failed,
        };
        ctx.write(&format!("classical/grid_eps{eps}.csv"), &grid_table(&grid))?;
        ctx.write(&format!("classical/summary_eps{eps}.json"), &json_bytes(&summary))?;
        let poincare = poincare_table(ctx, &grid)?;
        ctx.write(&format!("classical/poincare_eps{eps}.csv"), &poincare)?;
    }
    Ok(())
}
