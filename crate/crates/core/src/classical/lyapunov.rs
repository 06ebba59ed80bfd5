use super::integrator::{Gbs, Tolerance};
use super::{extended_rhs, ClassicalState};
use crate::error::Result;
use crate::model::ModelParams;
use serde::{Deserialize, Serialize};

/// Benettin protocol: tangent vector renormalized every `renorm` time units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConfig {
    pub t_total: f64,
    pub renorm: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            t_total: 5000.0,
            renorm: 1.0,
            rtol: 1e-9,
            atol: 1e-9,
        }
    }
}

impl LyapunovConfig {
    /// Chaos threshold, max(10/T, 0.005).
    pub fn threshold(&self) -> f64 {
        (10.0 / self.t_total).max(0.005)
    }
}

/// Finite-time maximal Lyapunov exponent.
///
/// The maximal exponent of a Hamiltonian flow is non-negative; a negative finite-time sum
/// (bounded oscillation of the tangent norm) is reported as 0.
pub fn max_lyapunov(x0: &ClassicalState, params: &ModelParams, cfg: &LyapunovConfig) -> Result<f64> {
    let f = |y: &[f64; 8]| extended_rhs(y, params);
    let mut stepper = Gbs::<8>::new(Tolerance { rtol: cfg.rtol, atol: cfg.atol }, 0.05);
    let x = x0.to_array();
    let mut y = [x[0], x[1], x[2], x[3], 0.5, 0.5, 0.5, 0.5];
    let mut t = 0.0;
    let mut log_sum = 0.0;
    // The tangent flow is linear, so the log-growth sum does not depend on where the
    // renormalizations fall: they happen at the first step boundary past each multiple of
    // `renorm`, and steps are only clipped at `t_total`.
    let mut next_renorm = cfg.renorm;
    while t < cfg.t_total {
        t = stepper.advance(&f, t, &mut y, cfg.t_total)?;
        if t >= next_renorm || t == cfg.t_total {
            let norm = y[4..].iter().map(|v| v * v).sum::<f64>().sqrt();
            log_sum += norm.ln();
            for v in &mut y[4..] {
                *v /= norm;
            }
            while next_renorm <= t {
                next_renorm += cfg.renorm;
            }
        }
    }
    Ok((log_sum / t).max(0.0))
}
