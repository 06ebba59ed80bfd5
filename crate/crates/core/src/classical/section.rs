use super::integrator::{Gbs, Tolerance};
use super::{classical_hamiltonian, equations_of_motion, ClassicalState};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub samples: Vec<ClassicalState>,
    pub steps: usize,
    pub rejected: usize,
    pub max_drift: f64,
    /// Set when the stepper underflowed (orbit pinned against the disk edge) before the end.
    pub truncated: bool,
}

fn rhs(params: &ModelParams) -> impl Fn(&[f64; 4]) -> Option<[f64; 4]> + '_ {
    move |x: &[f64; 4]| equations_of_motion(x, params)
}

/// Integrates for time `t_total` (negative runs backwards), storing every accepted step.
pub fn integrate_trajectory(
    x0: &ClassicalState,
    params: &ModelParams,
    t_total: f64,
    tol: Tolerance,
) -> Result<Trajectory> {
    let epsilon = classical_hamiltonian(x0, params)?;
    let f = rhs(params);
    let mut stepper = Gbs::<4>::new(tol, 0.05);
    let mut y = x0.to_array();
    let mut t = 0.0;
    let mut out = Trajectory {
        epsilon,
        times: vec![0.0],
        samples: vec![*x0],
        steps: 0,
        rejected: 0,
        max_drift: 0.0,
        truncated: false,
    };
    while t != t_total {
        match stepper.advance(&f, t, &mut y, t_total) {
            Ok(tn) => t = tn,
            Err(Error::StepUnderflow { .. }) => {
                out.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let x = ClassicalState::from_slice(&y);
        let drift = (classical_hamiltonian(&x, params)? - epsilon).abs();
        out.max_drift = out.max_drift.max(drift);
        out.times.push(t);
        out.samples.push(x);
    }
    out.steps = stepper.accepted;
    out.rejected = stepper.rejected;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionPoints {
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Full phase-space points at the crossings; |p| ≤ 1e−10.
    pub points: Vec<ClassicalState>,
    /// False when `t_max` ran out (or the orbit failed) before `n_crossings` were found.
    pub complete: bool,
}

impl SectionPoints {
    pub fn atomic(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().map(|x| (x.Q, x.P))
    }
}

const SECTION_TOL: f64 = 1e-10;

/// Crossings of p = 0 on the q₊ branch, where ṗ = −∂h/∂q < 0, so p falls through zero.
pub fn poincare_section(
    x0: &ClassicalState,
    params: &ModelParams,
    n_crossings: usize,
    t_max: f64,
    tol: Tolerance,
) -> Result<SectionPoints> {
    let epsilon = classical_hamiltonian(x0, params)?;
    let f = rhs(params);
    let mut stepper = Gbs::<4>::new(tol, 0.05);
    let mut y = x0.to_array();
    let mut t = 0.0;
    let mut out = SectionPoints {
        epsilon,
        times: Vec::new(),
        points: Vec::new(),
        complete: false,
    };
    while out.points.len() < n_crossings && t < t_max {
        let y0 = y;
        let t0 = t;
        match stepper.advance(&f, t, &mut y, t_max) {
            Ok(tn) => t = tn,
            Err(Error::StepUnderflow { .. }) => return Ok(out),
            Err(e) => return Err(e),
        }
        if y0[1] > 0.0 && y[1] <= 0.0 {
            let (tau, yc) = refine_crossing(&mut stepper, &f, &y0, t - t0, y[1])?;
            out.times.push(t0 + tau);
            out.points.push(ClassicalState::from_slice(&yc));
        }
    }
    out.complete = out.points.len() >= n_crossings;
    Ok(out)
}

/// Illinois false position on the step fraction until |p| ≤ 1e−10.
fn refine_crossing<F>(
    stepper: &mut Gbs<4>,
    f: &F,
    y0: &[f64; 4],
    h: f64,
    p_end: f64,
) -> Result<(f64, [f64; 4])>
where
    F: Fn(&[f64; 4]) -> Option<[f64; 4]>,
{
    let f0 = f(y0).ok_or(Error::StepUnderflow { t: 0.0 })?;
    let (mut a, mut ga) = (0.0, y0[1]);
    let (mut b, mut gb) = (h, p_end);
    let mut best = (h, [0.0; 4], f64::INFINITY);
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (b - gb * (b - a) / (gb - ga)).clamp(a.min(b), a.max(b));
        let yc = stepper
            .fixed_step(f, y0, &f0, c)
            .ok_or(Error::StepUnderflow { t: c })?;
        let gc = yc[1];
        if gc.abs() < best.2 {
            best = (c, yc, gc.abs());
        }
        if gc.abs() <= SECTION_TOL {
            return Ok((c, yc));
        }
        if gc > 0.0 {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Insufficient(format!(
        "section crossing not resolved: |p| = {:e}",
        best.2
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::bosonic_root_qplus;

    #[test]
    fn uncoupled_orbit_is_harmonic() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 10.0, 1).unwrap();
        let x0 = ClassicalState::new(1.0, 0.0, 0.3, 0.0);
        let tr = integrate_trajectory(&x0, &p, 100.0, Tolerance::uniform(1e-13)).unwrap();
        let (t, x) = (*tr.times.last().unwrap(), tr.samples.last().unwrap());
        assert_eq!(t, 100.0);
        assert!((x.q - t.cos()).abs() < 1e-8);
        assert!((x.Q - 0.3 * t.cos()).abs() < 1e-8);
    }

    #[test]
    fn uncoupled_section_is_a_circle() {
        let p = ModelParams::new(1.0, 1.3, 0.0, 10.0, 1).unwrap();
        let x0 = ClassicalState::new(1.0, 0.0, 0.5, 0.2);
        let s = poincare_section(&x0, &p, 20, 1e4, Tolerance::uniform(1e-12)).unwrap();
        assert!(s.complete);
        let r2 = 0.25 + 0.04;
        for (q, pp) in s.atomic() {
            assert!((q * q + pp * pp - r2).abs() < 1e-9);
        }
        assert!(s.points.iter().all(|x| x.p.abs() <= 1e-10 && x.q > 0.0));
    }

    #[test]
    fn crossings_reproduce_from_restart() {
        let p = ModelParams::one_photon(10.0);
        let q = bosonic_root_qplus(-0.5, 0.4, 0.1, &p).unwrap();
        let x0 = ClassicalState::new(q, 0.0, 0.4, 0.1);
        let tol = Tolerance::uniform(1e-12);
        let s = poincare_section(&x0, &p, 8, 1e4, tol).unwrap();
        let restart = poincare_section(&s.points[2], &p, 5, 1e4, tol).unwrap();
        for (a, b) in s.points[3..].iter().zip(&restart.points) {
            assert!((a.Q - b.Q).abs() < 1e-7 && (a.P - b.P).abs() < 1e-7, "{a:?} vs {b:?}");
        }
    }
}
