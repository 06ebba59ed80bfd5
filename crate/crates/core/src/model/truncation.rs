use super::{build_fock_hamiltonian, convergence_mask, diagonalize_window, EigenSolution, ModelParams};
use crate::error::{Error, Result};

/// Largest q² + p² reachable on the classical shell at scaled energy `epsilon`, or `None`
/// below the ground-state energy.
pub fn classical_photon_bound(params: &ModelParams, epsilon: f64) -> Option<f64> {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let steps = 4000;
    let mut best: Option<f64> = None;
    for i in 0..=steps {
        let rho = 2.0 * i as f64 / steps as f64;
        let s = rho * (1.0 - rho * rho / 4.0).max(0.0).sqrt();
        let c = 0.5 * w0 * rho * rho - w0;
        let r2 = if params.f == 1 {
            let disc = 4.0 * g * g * s * s - 2.0 * w * (c - epsilon);
            if disc < 0.0 {
                continue;
            }
            let r = (2.0 * g * s + disc.sqrt()) / w;
            r * r
        } else {
            if epsilon < c {
                continue;
            }
            (epsilon - c) / (0.5 * w - g * s)
        };
        best = Some(best.map_or(r2, |b: f64| b.max(r2)));
    }
    best
}

/// Starting boson cutoff for a window topping out at `epsilon_hi`: the classical photon
/// number plus eight Poisson widths.
pub fn initial_truncation(params: &ModelParams, epsilon_hi: f64) -> usize {
    let r2 = classical_photon_bound(params, epsilon_hi).unwrap_or(0.0);
    let n_cl = params.j * r2 / 2.0;
    let f = params.f as usize;
    ((n_cl + 8.0 * n_cl.sqrt() + 20.0).ceil() as usize).max(2 * f)
}

#[derive(Clone, Debug)]
pub struct WindowSolve {
    pub solution: EigenSolution,
    pub n_max: usize,
    /// (n_max, converged count, window count) per attempt.
    pub history: Vec<(usize, usize, usize)>,
}

/// Eigenpairs in the scaled window `[eps_lo, eps_hi]`, growing the Fock cutoff by 25% until
/// every window state passes the tail criterion or the converged count stops changing.
pub fn solve_converged_window(
    params: &ModelParams,
    eps_lo: f64,
    eps_hi: f64,
    delta: f64,
    start: Option<usize>,
) -> Result<WindowSolve> {
    if !(eps_lo < eps_hi) {
        return Err(Error::InvalidInput(format!("empty window [{eps_lo}, {eps_hi}]")));
    }
    let mut n_max = start.unwrap_or_else(|| initial_truncation(params, eps_hi));
    let mut history = Vec::new();
    let mut previous: Option<usize> = None;
    for _ in 0..8 {
        let h = build_fock_hamiltonian(params, n_max)?;
        let mut sol = diagonalize_window(&h, eps_lo * params.j, eps_hi * params.j)?;
        sol.converged = convergence_mask(&sol, delta);
        let ok = sol.converged.iter().filter(|&&c| c).count();
        history.push((n_max, ok, sol.len()));
        if ok == sol.len() || previous == Some(ok) {
            return Ok(WindowSolve {
                solution: sol,
                n_max,
                history,
            });
        }
        previous = Some(ok);
        n_max += (n_max + 3) / 4;
    }
    Err(Error::Insufficient(format!(
        "window [{eps_lo}, {eps_hi}] did not converge; attempts {history:?}"
    )))
}
