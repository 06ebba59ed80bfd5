use super::{compatible_energy, csv_bytes, eigen_key, json_bytes, num, require_window, window_tag};
use crate::cache::load_grid;
use crate::error::CliResult;
use crate::pipeline::StageContext;
use dicke_core::classical::chaos_fraction;
use dicke_core::model::EigenSolution;
use dicke_core::spectral::{
    anderson_darling, cdf_goe_r, cdf_poisson_r, normalized_ratio, ratios, surrogate_mixed_sample, EmpiricalCdf,
    MixtureSpec, RatioSample, SpectrumWindow,
};
use serde::Serialize;

/// Windows with fewer ratios are skipped.
pub const MIN_RATIOS: usize = 20;

#[derive(Serialize)]
pub struct SectorCount {
    pub parity: u8,
    pub levels: usize,
    pub ratios: usize,
}

#[derive(Serialize)]
pub struct WindowStats {
    pub j: f64,
    pub window: [f64; 2],
    pub n: usize,
    pub mean_r: f64,
    pub r_c: f64,
    #[serde(rename = "A2_poisson")]
    pub a2_poisson: f64,
    #[serde(rename = "A2_goe")]
    pub a2_goe: f64,
    #[serde(rename = "A2_surrogate")]
    pub a2_surrogate: Option<f64>,
    pub mixture: Option<MixtureSpec>,
    /// "config", "classical grid" or null.
    pub mixture_source: Option<String>,
    pub sectors: Vec<SectorCount>,
    pub dropped_spacings: usize,
    pub degeneracy_warning: bool,
}

#[derive(Serialize, Default)]
struct Report {
    skipped_windows: Vec<String>,
    skipped_profile_points: Vec<f64>,
}

/// Ratios of every parity sector in the window, pooled without merging sequences.
pub fn pooled_ratios(sol: &EigenSolution, lo: f64, hi: f64) -> (RatioSample, Vec<SectorCount>) {
    let mut samples = Vec::new();
    let mut counts = Vec::new();
    for w in SpectrumWindow::per_sector(sol, lo, hi) {
        let s = ratios(&w).unwrap_or_default();
        counts.push(SectorCount {
            parity: w.label.0,
            levels: w.levels.len(),
            ratios: s.len(),
        });
        samples.push(s);
    }
    (RatioSample::pool(&samples), counts)
}

fn mixture_for(ctx: &StageContext, w: [f64; 2]) -> CliResult<Option<(MixtureSpec, String)>> {
    if let Some(m) = ctx.cfg.stats.mixtures.iter().find(|m| m.window == w) {
        return Ok(Some((MixtureSpec::new(m.regular, m.chaotic.clone())?, "config".into())));
    }
    let Some(eps) = compatible_energy(ctx.cfg, w) else {
        return Ok(None);
    };
    let key = super::grid_key(ctx.cfg, eps)?;
    let Some(grid) = load_grid(&ctx.path(&super::grid_rel(&key)), &key)? else {
        return Ok(None);
    };
    let cf = chaos_fraction(&grid)?;
    Ok(Some((MixtureSpec::new(1.0 - cf.total, cf.components)?, "classical grid".into())))
}

fn histogram(values: &[f64], bins: usize) -> Vec<u8> {
    let mut counts = vec![0usize; bins];
    for &r in values {
        counts[((r * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let width = 1.0 / bins as f64;
    let n = values.len() as f64;
    let rows = counts.iter().enumerate().map(|(b, &c)| {
        vec![
            num(b as f64 * width),
            num((b + 1) as f64 * width),
            c.to_string(),
            num(c as f64 / (n * width)),
        ]
    });
    csv_bytes(&["bin_left", "bin_right", "count", "density"], rows)
}

pub fn window_stats(ctx: &StageContext, sol: &EigenSolution, w: [f64; 2]) -> CliResult<Option<WindowStats>> {
    let (sample, sectors) = pooled_ratios(sol, w[0], w[1]);
    if sample.len() < MIN_RATIOS {
        return Ok(None);
    }
    let mixture = mixture_for(ctx, w)?;
    let a2_surrogate = match &mixture {
        Some((spec, _)) => {
            let reference = surrogate_mixed_sample(spec, ctx.cfg.stats.surrogate_levels, ctx.cfg.run.seed)?;
            let cdf = EmpiricalCdf::new(&reference.values);
            Some(anderson_darling(&sample.values, |x| cdf.eval(x))?.a2)
        }
        None => None,
    };
    let mean_r = sample.mean();
    Ok(Some(WindowStats {
        j: sol.params.j,
        window: w,
        n: sample.len(),
        mean_r,
        r_c: normalized_ratio(mean_r),
        a2_poisson: anderson_darling(&sample.values, cdf_poisson_r)?.a2,
        a2_goe: anderson_darling(&sample.values, cdf_goe_r)?.a2,
        a2_surrogate,
        mixture_source: mixture.as_ref().map(|m| m.1.clone()),
        mixture: mixture.map(|m| m.0),
        sectors,
        dropped_spacings: sample.dropped,
        degeneracy_warning: sample.degeneracy_warning(),
    }))
}

pub fn run(ctx: &mut StageContext) -> CliResult<()> {
    let cfg = ctx.cfg;
    let mut report = Report::default();
    for &w in &cfg.stats.windows {
        let sol = require_window(ctx, &eigen_key(cfg, cfg.model.j, w[0], w[1], true)?)?;
        let (sample, _) = pooled_ratios(&sol, w[0], w[1]);
        let Some(stats) = window_stats(ctx, &sol, w)? else {
            report
                .skipped_windows
                .push(format!("[{}, {}]: {} ratios, need {MIN_RATIOS}", w[0], w[1], sample.len()));
            continue;
        };
        let tag = window_tag(w);
        ctx.write(&format!("stats/hist_{tag}.csv"), &histogram(&sample.values, cfg.stats.bins))?;
        ctx.write(&format!("stats/stats_{tag}.json"), &json_bytes(&stats))?;
    }
    if let Some(p) = &cfg.stats.profile {
        let sol = require_window(ctx, &eigen_key(cfg, p.j, p.eps_lo - p.half_width, p.eps_hi + p.half_width, true)?)?;
        let steps = ((p.eps_hi - p.eps_lo) / p.step + 1e-9).floor() as usize;
        let mut rows = Vec::new();
        for i in 0..=steps {
            let c = p.eps_lo + i as f64 * p.step;
            let (s, _) = pooled_ratios(&sol, c - p.half_width, c + p.half_width);
            if s.len() < MIN_RATIOS {
                report.skipped_profile_points.push(c);
                continue;
            }
            rows.push(vec![num(c), s.len().to_string(), num(s.mean()), num(normalized_ratio(s.mean()))]);
        }
        ctx.write(&format!("stats/profile_j{}.csv", p.j), &csv_bytes(&["epsilon", "n", "mean_r", "r_c"], rows))?;
    }
    ctx.write("stats/report.json", &json_bytes(&report))?;
    Ok(())
}
