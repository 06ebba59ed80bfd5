use super::{compatible_energy, csv_bytes, eigen_key, husimi_dir, husimi_sizes, json_bytes, num, opt, require_grid, require_window};
use crate::error::{CliError, CliResult};
use crate::pipeline::StageContext;
use dicke_core::classical::ClassicalityGrid;
use dicke_core::husimi::{
    delocalization_thresholds, overlap_index_of, poincare_husimi, shell_localization, FockState, HusimiField,
};
use dicke_core::mixed::MOMENTS;
use dicke_core::model::EigenSolution;
use rayon::prelude::*;
use serde::Serialize;

/// States whose section fields are held in memory at once.
const FIELD_BATCH: usize = 32;

pub const STATES_FILE: &str = "states.csv";
pub const STATES_HEADER: [&str; 10] = ["k", "eps_k", "parity", "M_1", "M_2", "M_3", "M_4", "L1", "L2", "converged"];

struct Row {
    m: [f64; MOMENTS],
    l1: Option<f64>,
    l2: Option<f64>,
}

#[derive(Serialize)]
struct FieldSidecar {
    k: usize,
    nu: u32,
    epsilon_k: f64,
    #[serde(rename = "M")]
    m: Option<f64>,
    #[serde(rename = "L1")]
    l1: Option<f64>,
    #[serde(rename = "L2")]
    l2: Option<f64>,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "ln_B")]
    ln_b: f64,
    grid_epsilon: f64,
}

fn moments(field: &HusimiField, grid: &ClassicalityGrid, wanted: &[u32]) -> [f64; MOMENTS] {
    let mut m = [f64::NAN; MOMENTS];
    for &nu in wanted {
        m[nu as usize - 1] = overlap_index_of(&field.values, &grid.chi, nu).unwrap_or(f64::NAN);
    }
    m
}

fn window_states(sol: &EigenSolution, delta: f64) -> Vec<FockState> {
    (0..sol.len()).into_par_iter().map(|k| FockState::from_solution(sol, k, delta)).collect()
}

pub fn run(ctx: &mut StageContext) -> CliResult<()> {
    let cfg = ctx.cfg;
    let hc = &cfg.husimi;
    let eps = compatible_energy(cfg, hc.window).ok_or_else(|| {
        CliError::Config(format!(
            "no classical energy within the half-width of the husimi window [{}, {}]",
            hc.window[0], hc.window[1]
        ))
    })?;
    let grid = require_grid(ctx, eps)?;
    for j in husimi_sizes(cfg)? {
        let sol = require_window(ctx, &eigen_key(cfg, j, hc.window[0], hc.window[1], false)?)?;
        let states = window_states(&sol, cfg.basis.delta);
        let eps_k = sol.scaled_energies();
        let mut rows: Vec<Row> = Vec::with_capacity(sol.len());
        for start in (0..sol.len()).step_by(FIELD_BATCH) {
            let end = (start + FIELD_BATCH).min(sol.len());
            let fields = poincare_husimi(&states[start..end], &eps_k[start..end], &grid)?;
            rows.extend(fields.iter().map(|f| Row {
                m: moments(f, &grid, &hc.moments),
                l1: None,
                l2: None,
            }));
        }
        if hc.localization {
            let loc = (0..sol.len())
                .into_par_iter()
                .map(|k| shell_localization(&states[k], k, eps_k[k], &sol.params, hc.shell_samples, cfg.run.seed.wrapping_add(k as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            for (row, l) in rows.iter_mut().zip(loc) {
                row.l1 = Some(l.l1);
                row.l2 = Some(l.l2);
            }
        }
        let dir = husimi_dir(j);
        let table = (0..sol.len()).map(|k| {
            let r = &rows[k];
            let mut v = vec![k.to_string(), num(eps_k[k]), sol.parity[k].0.to_string()];
            v.extend(r.m.iter().map(|&x| num(x)));
            v.extend([opt(r.l1), opt(r.l2), sol.converged[k].to_string()]);
            v
        });
        ctx.write(&format!("{dir}/{STATES_FILE}"), &csv_bytes(&STATES_HEADER, table))?;
        if hc.threshold_ensemble > 0 {
            let t = delocalization_thresholds(&sol, eps, hc.threshold_ensemble, hc.shell_samples, cfg.run.seed, cfg.basis.delta)?;
            ctx.write(&format!("{dir}/thresholds.json"), &json_bytes(&t))?;
        }
        if j == cfg.model.j {
            for &k in hc.export_states.iter().filter(|&&k| k < sol.len()) {
                let field = &poincare_husimi(std::slice::from_ref(&states[k]), &eps_k[k..=k], &grid)?[0];
                for &nu in &hc.moments {
                    let scale = (f64::from(nu) * field.log_peak).exp();
                    let values = field.moment(nu);
                    let cells = (0..grid.len()).filter(|&c| grid.accessible[c]).map(|c| {
                        let (qa, pa) = grid.point(c);
                        vec![num(qa), num(pa), num(scale * values[c])]
                    });
                    ctx.write(&format!("{dir}/field_k{k}_nu{nu}.csv"), &csv_bytes(&["Q", "P", "value"], cells))?;
                    let ln_b = field.log_norm(nu, &grid);
                    let side = FieldSidecar {
                        k,
                        nu,
                        epsilon_k: eps_k[k],
                        m: Some(rows[k].m[nu as usize - 1]).filter(|m| !m.is_nan()),
                        l1: rows[k].l1,
                        l2: rows[k].l2,
                        b: ln_b.exp(),
                        ln_b,
                        grid_epsilon: eps,
                    };
                    ctx.write(&format!("{dir}/field_k{k}_nu{nu}.json"), &json_bytes(&side))?;
                }
            }
        }
    }
    Ok(())
}
