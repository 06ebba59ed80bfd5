//! Window eigenpairs: value-only caches for the statistics windows and the profile, full
//! caches for the Husimi window at every system size, and a spectrum table per window.

use super::{csv_bytes, eigen_key, eigen_rel, husimi_sizes, num, window_tag};
use crate::cache::{load_eigen, save_eigen, EigenKey};
use crate::config::BasisChoice;
use crate::error::{CliError, CliResult};
use crate::pipeline::StageContext;
use dicke_core::model::{
    build_efficient_hamiltonian, build_fock_hamiltonian, convergence_mask, diagonalize_window, initial_truncation,
    solve_converged_window, EigenSolution,
};

/// Largest basis (bosons × spin states) a single solve may use.
pub const BASIS_BUDGET: usize = 3_000_000;

fn check_budget(key: &EigenKey, n_max: usize) -> CliResult<()> {
    let dim = (n_max + 1) * key.params.spin_dim();
    if dim > BASIS_BUDGET {
        return Err(CliError::Budget(format!(
            "j = {} window [{}, {}] needs about {dim} basis states (n_max = {n_max}), above the budget of \
             {BASIS_BUDGET}; narrow the window, lower j, or set basis.n_max explicitly",
            key.params.j, key.eps_lo, key.eps_hi
        )));
    }
    Ok(())
}

pub fn solve(key: &EigenKey) -> CliResult<EigenSolution> {
    let p = &key.params;
    let (lo, hi) = (key.eps_lo * p.j, key.eps_hi * p.j);
    let sol = match (key.basis, key.n_max) {
        (BasisChoice::Fock, None) => {
            // the cutoff may grow by up to a factor of about 6 before giving up
            check_budget(key, initial_truncation(p, key.eps_hi))?;
            solve_converged_window(p, key.eps_lo, key.eps_hi, key.delta, None)?.solution
        }
        (kind, Some(n)) => {
            check_budget(key, n)?;
            let h = match kind {
                BasisChoice::Fock => build_fock_hamiltonian(p, n)?,
                BasisChoice::Efficient => build_efficient_hamiltonian(p, n)?,
            };
            let mut sol = diagonalize_window(&h, lo, hi)?;
            sol.converged = convergence_mask(&sol, key.delta);
            sol
        }
        (BasisChoice::Efficient, None) => return Err(CliError::Config("the efficient basis needs basis.n_max".into())),
    };
    Ok(sol)
}

/// Loads the cache for `key` when resuming, otherwise solves and writes it.
fn cached_solve(ctx: &mut StageContext, key: &EigenKey) -> CliResult<EigenSolution> {
    let rel = eigen_rel(key);
    let path = ctx.path(&rel);
    if ctx.resume {
        if let Some(sol) = load_eigen(&path, key)? {
            ctx.register(&rel);
            return Ok(sol);
        }
    }
    let sol = solve(key)?;
    ctx.ensure_dir(super::EIGEN_CACHE)?;
    save_eigen(&path, key, &sol)?;
    ctx.register(&rel);
    Ok(sol)
}

fn spectrum_table(sol: &EigenSolution) -> Vec<u8> {
    let rows = (0..sol.len()).filter(|&k| sol.converged[k]).map(|k| {
        vec![
            k.to_string(),
            num(sol.energies[k]),
            num(sol.scaled_energy(k)),
            sol.parity[k].0.to_string(),
            "true".into(),
        ]
    });
    csv_bytes(&["k", "E", "epsilon", "parity", "converged"], rows)
}

pub fn run(ctx: &mut StageContext) -> CliResult<()> {
    let cfg = ctx.cfg;
    let j = cfg.model.j;
    for &w in &cfg.spectrum.windows {
        let sol = cached_solve(ctx, &eigen_key(cfg, j, w[0], w[1], true)?)?;
        ctx.write(&format!("spectrum/j{j}_{}.csv", window_tag(w)), &spectrum_table(&sol))?;
    }
    let hw = cfg.husimi.window;
    for js in husimi_sizes(cfg)? {
        let sol = cached_solve(ctx, &eigen_key(cfg, js, hw[0], hw[1], false)?)?;
        ctx.write(&format!("spectrum/j{js}_{}.csv", window_tag(hw)), &spectrum_table(&sol))?;
    }
    if let Some(p) = &cfg.stats.profile {
        cached_solve(ctx, &eigen_key(cfg, p.j, p.eps_lo - p.half_width, p.eps_hi + p.half_width, true)?)?;
    }
    Ok(())
}
