use super::husimi::{STATES_FILE, STATES_HEADER};
use super::{csv_bytes, husimi_dir, json_bytes, num, opt};
use crate::error::{CliError, CliResult};
use crate::pipeline::StageContext;
use dicke_core::mixed::{
    boundary_scan, bound_range, ensemble_assemble, mixed_fraction_series, two_point_exponent, Ensemble, Member,
    PowerLawFit, StateRecord, MOMENTS,
};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct TwoPoint {
    j1: f64,
    j2: f64,
    xi: Option<f64>,
}

#[derive(Serialize)]
struct MomentFit {
    nu: usize,
    fit: Option<PowerLawFit>,
    /// Exponents between consecutive ensembles.
    two_point: Vec<TwoPoint>,
}

fn parse_field(path: &Path, s: &str) -> CliResult<f64> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| CliError::Corrupt {
        path: path.display().to_string(),
        reason: format!("not a number: {s:?}"),
    })
}

/// Converged-state records of one member's per-state table.
pub fn read_member(path: &Path, j: f64) -> CliResult<Member> {
    let corrupt = |reason: String| CliError::Corrupt {
        path: path.display().to_string(),
        reason,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| corrupt(e.to_string()))?;
    let header = rd.headers().map_err(|e| corrupt(e.to_string()))?.clone();
    if header.iter().ne(STATES_HEADER) {
        return Err(corrupt("unexpected columns".into()));
    }
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| corrupt(e.to_string()))?;
        if &row[9] != "true" {
            continue;
        }
        let mut m = [f64::NAN; MOMENTS];
        for (nu, slot) in m.iter_mut().enumerate() {
            *slot = parse_field(path, &row[3 + nu])?;
        }
        let l = |i: usize| parse_field(path, &row[i]).map(|v| (!v.is_nan()).then_some(v));
        records.push(StateRecord {
            j,
            k: row[0].parse().map_err(|_| corrupt("bad state index".into()))?,
            epsilon_k: parse_field(path, &row[1])?,
            parity: row[2].parse().map_err(|_| corrupt("bad parity".into()))?,
            m,
            l1: l(7)?,
            l2: l(8)?,
        });
    }
    Ok(Member {
        j,
        window_count: records.len(),
        records,
    })
}

pub fn run(ctx: &mut StageContext) -> CliResult<()> {
    let cfg = ctx.cfg;
    let groups = cfg.mixed.ensemble_members()?;
    let missing: Vec<String> = groups
        .iter()
        .flatten()
        .map(|&j| ctx.path(&format!("{}/{STATES_FILE}", husimi_dir(j))))
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Missing(format!(
            "per-state tables for {} ensemble member(s); run the husimi stage: {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    let ensembles = groups
        .iter()
        .map(|js| {
            let members = js
                .iter()
                .map(|&j| read_member(&ctx.path(&format!("{}/{STATES_FILE}", husimi_dir(j))), j))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(ensemble_assemble(&members)?)
        })
        .collect::<CliResult<Vec<Ensemble>>>()?;
    let bounds = cfg.mixed.bounds()?;
    let scan_values = bound_range(cfg.mixed.scan_lo, cfg.mixed.scan_hi + 0.5 * cfg.mixed.scan_step, cfg.mixed.scan_step);
    let (mut series_rows, mut scan_rows, mut fits) = (Vec::new(), Vec::new(), Vec::new());
    for &nu in &cfg.husimi.moments {
        let nu = nu as usize;
        let series = mixed_fraction_series(&ensembles, nu, &bounds)?;
        for p in &series.points {
            series_rows.push(vec![nu.to_string(), num(p.j), p.n_mixed.to_string(), p.n_total.to_string(), num(p.eta)]);
        }
        let two_point = series
            .points
            .windows(2)
            .map(|w| TwoPoint {
                j1: w[0].j,
                j2: w[1].j,
                xi: two_point_exponent((w[0].j, w[0].eta), (w[1].j, w[1].eta)).ok(),
            })
            .collect();
        fits.push(MomentFit {
            nu,
            fit: series.fit,
            two_point,
        });
        let scan = boundary_scan(&ensembles, nu, bounds.m_plus, &scan_values)?;
        for p in &scan.points {
            scan_rows.push(vec![
                nu.to_string(),
                num(p.m_minus),
                num(p.m_plus),
                num(p.delta_m),
                opt(p.xi),
                p.large.to_string(),
                p.skipped.clone().unwrap_or_default(),
            ]);
        }
    }
    ctx.write("mixed/series.csv", &csv_bytes(&["nu", "j", "N_mixed", "N_total", "eta"], series_rows))?;
    ctx.write("mixed/fits.json", &json_bytes(&fits))?;
    ctx.write(
        "mixed/scan.csv",
        &csv_bytes(&["nu", "m_minus", "m_plus", "delta_m", "xi", "large", "skipped"], scan_rows),
    )?;
    Ok(())
}
