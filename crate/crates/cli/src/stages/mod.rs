pub mod classical;
pub mod husimi;
pub mod mixed;
pub mod spectrum;
pub mod stats;

use crate::cache::{load_eigen, load_grid, EigenKey, GridKey};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::StageContext;
use dicke_core::classical::ClassicalityGrid;
use dicke_core::model::EigenSolution;

pub const EIGEN_CACHE: &str = "cache/eigen";
pub const GRID_CACHE: &str = "cache/grid";

pub fn eigen_key(cfg: &RunConfig, j: f64, eps_lo: f64, eps_hi: f64, values_only: bool) -> CliResult<EigenKey> {
    Ok(EigenKey {
        params: cfg.model.params_at(j)?,
        basis: cfg.basis.kind,
        n_max: cfg.basis.n_max,
        eps_lo,
        eps_hi,
        delta: cfg.basis.delta,
        values_only,
    })
}

pub fn grid_key(cfg: &RunConfig, epsilon: f64) -> CliResult<GridKey> {
    Ok(GridKey {
        params: cfg.model.params()?,
        epsilon,
        grid: cfg.classical.grid(),
    })
}

pub fn rel(dir: &str, file: &str) -> String {
    format!("{dir}/{file}")
}

pub fn eigen_rel(key: &EigenKey) -> String {
    rel(EIGEN_CACHE, &format!("{}.dcke", key.digest()))
}

pub fn grid_rel(key: &GridKey) -> String {
    rel(GRID_CACHE, &format!("{}.json", key.digest()))
}

/// A cached window produced by the spectrum stage.
pub fn require_window(ctx: &StageContext, key: &EigenKey) -> CliResult<EigenSolution> {
    let path = ctx.path(&eigen_rel(key));
    load_eigen(&path, key)?.ok_or_else(|| {
        CliError::Missing(format!(
            "no eigenpair cache for j = {}, window [{}, {}] ({}); run the spectrum stage",
            key.params.j,
            key.eps_lo,
            key.eps_hi,
            path.display()
        ))
    })
}

/// The configured classical energy nearest to the window centre, if it lies within the
/// window's half-width.
pub fn compatible_energy(cfg: &RunConfig, window: [f64; 2]) -> Option<f64> {
    let centre = 0.5 * (window[0] + window[1]);
    let half = 0.5 * (window[1] - window[0]);
    cfg.classical
        .energies
        .iter()
        .copied()
        .filter(|e| (e - centre).abs() <= half + 1e-12)
        .min_by(|a, b| (a - centre).abs().total_cmp(&(b - centre).abs()))
}

pub fn require_grid(ctx: &StageContext, epsilon: f64) -> CliResult<ClassicalityGrid> {
    let key = grid_key(ctx.cfg, epsilon)?;
    let path = ctx.path(&grid_rel(&key));
    load_grid(&path, &key)?.ok_or_else(|| {
        CliError::Missing(format!(
            "no classicality grid at epsilon = {epsilon} ({}); run the classical stage",
            path.display()
        ))
    })
}

/// File-name fragment for a scaled-energy window.
pub fn window_tag(w: [f64; 2]) -> String {
    format!("eps{}_{}", w[0], w[1])
}

/// Shortest round-trip decimal; empty for NaN.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(value).expect("artifact serializes");
    b.push(b'\n');
    b
}

/// Every system size the husimi stage covers: the ensemble members and the model's j.
pub fn husimi_sizes(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let mut js: Vec<f64> = cfg.mixed.ensemble_members()?.into_iter().flatten().collect();
    js.push(cfg.model.j);
    js.sort_by(f64::total_cmp);
    js.dedup();
    Ok(js)
}

pub fn husimi_dir(j: f64) -> String {
    format!("husimi/j{j}")
}
