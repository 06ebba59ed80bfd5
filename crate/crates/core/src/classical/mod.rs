//! Classical limit of the Dicke models on the coherent-state phase space.
//!
//! Bosonic pair (q, p) and atomic pair (Q, P) live on ℝ² × disk(2), with
//! Θ = √(1 − (Q² + P²)/4). The scaled energy is
//! h = ω/2 (q² + p²) + ω0/2 (Q² + P²) − ω0 + (2γ/f)(q^f − (f−1) p^f) Q Θ.

mod grid;
mod integrator;
mod lyapunov;
mod section;

pub use grid::{chaos_fraction, classicality_grid, ChaosFraction, ClassicalityGrid, GridConfig};
pub use integrator::{Gbs, Tolerance};
pub use lyapunov::{max_lyapunov, LyapunovConfig};
pub use section::{integrate_trajectory, poincare_section, SectionPoints, Trajectory};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use serde::{Deserialize, Serialize};

/// Point of the classical phase space.
#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
    pub Q: f64,
    pub P: f64,
}

impl ClassicalState {
    #[allow(non_snake_case)]
    pub fn new(q: f64, p: f64, Q: f64, P: f64) -> Self {
        Self { q, p, Q, P }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q, self.p, self.Q, self.P]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn atomic_radius2(&self) -> f64 {
        self.Q * self.Q + self.P * self.P
    }
}

/// Θ(Q, P), or `None` outside the closed disk.
#[allow(non_snake_case)]
pub fn theta(Q: f64, P: f64) -> Option<f64> {
    let t2 = 1.0 - (Q * Q + P * P) / 4.0;
    (t2 >= 0.0).then(|| t2.sqrt())
}

/// Bosonic coupling factor F = (2γ/f)(q^f − (f−1)p^f) and its first and second derivatives.
struct Boson {
    f: f64,
    fq: f64,
    fp: f64,
    fqq: f64,
    fpp: f64,
}

fn boson(params: &ModelParams, q: f64, p: f64) -> Boson {
    let g = params.gamma;
    if params.f == 1 {
        Boson {
            f: 2.0 * g * q,
            fq: 2.0 * g,
            fp: 0.0,
            fqq: 0.0,
            fpp: 0.0,
        }
    } else {
        Boson {
            f: g * (q * q - p * p),
            fq: 2.0 * g * q,
            fp: -2.0 * g * p,
            fqq: 2.0 * g,
            fpp: -2.0 * g,
        }
    }
}

/// Atomic factor S = QΘ with derivatives; requires Θ > 0 for anything beyond `s`.
#[allow(non_snake_case)]
struct Atom {
    s: f64,
    sQ: f64,
    sP: f64,
    sQQ: f64,
    sPP: f64,
    sQP: f64,
}

#[allow(non_snake_case)]
fn atom(Q: f64, P: f64, th: f64) -> Atom {
    let inv = 1.0 / th;
    let inv3 = inv * inv * inv / 16.0;
    let thQ = -0.25 * Q * inv;
    let thP = -0.25 * P * inv;
    let thQQ = -0.25 * inv - Q * Q * inv3;
    let thPP = -0.25 * inv - P * P * inv3;
    let thQP = -Q * P * inv3;
    Atom {
        s: Q * th,
        sQ: th + Q * thQ,
        sP: Q * thP,
        sQQ: 2.0 * thQ + Q * thQQ,
        sPP: Q * thPP,
        sQP: thP + Q * thQP,
    }
}

pub fn classical_hamiltonian(x: &ClassicalState, params: &ModelParams) -> Result<f64> {
    let th = theta(x.Q, x.P)
        .ok_or_else(|| Error::InvalidInput(format!("Q² + P² = {} exceeds 4", x.atomic_radius2())))?;
    Ok(energy_unchecked(params, &x.to_array(), th))
}

fn energy_unchecked(params: &ModelParams, x: &[f64], th: f64) -> f64 {
    let (w, w0) = (params.omega, params.omega0);
    let [q, p, qa, pa] = [x[0], x[1], x[2], x[3]];
    let b = boson(params, q, p);
    0.5 * w * (q * q + p * p) + 0.5 * w0 * (qa * qa + pa * pa) - w0 + b.f * qa * th
}

/// Hamilton's equations; `None` on or outside the disk boundary.
pub fn equations_of_motion(x: &[f64], params: &ModelParams) -> Option<[f64; 4]> {
    let th = theta(x[2], x[3]).filter(|&t| t > 0.0)?;
    let (w, w0) = (params.omega, params.omega0);
    let b = boson(params, x[0], x[1]);
    let a = atom(x[2], x[3], th);
    Some([
        w * x[1] + b.fp * a.s,
        -(w * x[0] + b.fq * a.s),
        w0 * x[3] + b.f * a.sP,
        -(w0 * x[2] + b.f * a.sQ),
    ])
}

/// Hessian of h in the order (q, p, Q, P).
pub fn hessian(x: &[f64], params: &ModelParams) -> Option<[[f64; 4]; 4]> {
    let th = theta(x[2], x[3]).filter(|&t| t > 0.0)?;
    let (w, w0) = (params.omega, params.omega0);
    let b = boson(params, x[0], x[1]);
    let a = atom(x[2], x[3], th);
    let hqq = w + b.fqq * a.s;
    let hpp = w + b.fpp * a.s;
    let (hq_q, hq_p) = (b.fq * a.sQ, b.fq * a.sP);
    let (hp_q, hp_p) = (b.fp * a.sQ, b.fp * a.sP);
    let h_qq = w0 + b.f * a.sQQ;
    let h_pp = w0 + b.f * a.sPP;
    let h_qp = b.f * a.sQP;
    Some([
        [hqq, 0.0, hq_q, hq_p],
        [0.0, hpp, hp_q, hp_p],
        [hq_q, hp_q, h_qq, h_qp],
        [hq_p, hp_p, h_qp, h_pp],
    ])
}

/// Flow plus tangent dynamics: y = (x, δx), δẋ = J ∇²h δx.
pub fn extended_rhs(y: &[f64; 8], params: &ModelParams) -> Option<[f64; 8]> {
    let th = theta(y[2], y[3]).filter(|&t| t > 0.0)?;
    let (w, w0) = (params.omega, params.omega0);
    let b = boson(params, y[0], y[1]);
    let a = atom(y[2], y[3], th);
    let d = &y[4..];
    let (hq_q, hq_p) = (b.fq * a.sQ, b.fq * a.sP);
    let (hp_q, hp_p) = (b.fp * a.sQ, b.fp * a.sP);
    let h_qp = b.f * a.sQP;
    let gq = (w + b.fqq * a.s) * d[0] + hq_q * d[2] + hq_p * d[3];
    let gp = (w + b.fpp * a.s) * d[1] + hp_q * d[2] + hp_p * d[3];
    let g_q = hq_q * d[0] + hp_q * d[1] + (w0 + b.f * a.sQQ) * d[2] + h_qp * d[3];
    let g_p = hq_p * d[0] + hp_p * d[1] + h_qp * d[2] + (w0 + b.f * a.sPP) * d[3];
    Some([
        w * y[1] + b.fp * a.s,
        -(w * y[0] + b.fq * a.s),
        w0 * y[3] + b.f * a.sP,
        -(w0 * y[2] + b.f * a.sQ),
        gp,
        -gq,
        g_p,
        -g_q,
    ])
}

/// Larger root q₊ of h(q, 0; Q, P) = ε.
#[allow(non_snake_case)]
pub fn bosonic_root_qplus(epsilon: f64, Q: f64, P: f64, params: &ModelParams) -> Option<f64> {
    let th = theta(Q, P)?;
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let s = Q * th;
    let c = 0.5 * w0 * (Q * Q + P * P) - w0 - epsilon;
    if params.f == 1 {
        // (ω/2)q² + 2γS q + c = 0
        let disc = 4.0 * g * g * s * s - 2.0 * w * c;
        (disc >= 0.0).then(|| (-2.0 * g * s + disc.sqrt()) / w)
    } else {
        let a = 0.5 * w + g * s;
        (-c >= 0.0).then(|| (-c / a).sqrt())
    }
}

/// The (q, p) level set h = ε at fixed (Q, P): the ellipse q = q_center + q_semi cos θ,
/// p = p_semi sin θ, on which δ(h − ε) dq dp = weight dθ / 2π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellConic {
    pub q_center: f64,
    pub q_semi: f64,
    pub p_semi: f64,
    pub weight: f64,
}

impl ShellConic {
    pub fn point(&self, angle: f64) -> (f64, f64) {
        (self.q_center + self.q_semi * angle.cos(), self.p_semi * angle.sin())
    }
}

#[allow(non_snake_case)]
pub fn shell_conic(epsilon: f64, Q: f64, P: f64, params: &ModelParams) -> Option<ShellConic> {
    let th = theta(Q, P)?;
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let s = Q * th;
    let c = 0.5 * w0 * (Q * Q + P * P) - w0 - epsilon;
    // h − ε = a (q − q_center)² + b p² − r
    let (a, b, q_center, r) = if params.f == 1 {
        let q_center = -2.0 * g * s / w;
        (0.5 * w, 0.5 * w, q_center, 2.0 * g * g * s * s / w - c)
    } else {
        (0.5 * w + g * s, 0.5 * w - g * s, 0.0, -c)
    };
    (r >= 0.0).then(|| ShellConic {
        q_center,
        q_semi: (r / a).sqrt(),
        p_semi: (r / b).sqrt(),
        weight: std::f64::consts::PI / (a * b).sqrt(),
    })
}

/// Density of the energy shell projected on the atomic plane, ∫dq dp δ(h − ε).
#[allow(non_snake_case)]
pub fn shell_weight(Q: f64, P: f64, epsilon: f64, params: &ModelParams) -> f64 {
    shell_conic(epsilon, Q, P, params).map_or(0.0, |c| c.weight)
}
