//! Adaptive Gragg–Bulirsch–Stoer extrapolation with order and step-size control.
//!
//! Row k of the tableau runs the modified midpoint rule with `SEQ[k]` substeps; the
//! Aitken–Neville recursion in h² raises the order by two per column. The error of column k
//! is the difference between its last two entries.

use crate::error::{Error, Result};

const SEQ: [usize; 9] = [2, 4, 6, 8, 10, 12, 14, 16, 18];
const ROWS: usize = SEQ.len();

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { rtol: tol, atol: tol }
    }
}

/// Stepper state carried between calls: current step proposal and target row.
#[derive(Clone, Debug)]
pub struct Gbs<const N: usize> {
    pub tol: Tolerance,
    h: f64,
    k_target: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    work: [f64; ROWS],
}

impl<const N: usize> Gbs<N> {
    pub fn new(tol: Tolerance, h0: f64) -> Self {
        let mut work = [0.0; ROWS];
        let mut acc = 1.0;
        for (k, w) in work.iter_mut().enumerate() {
            acc += (SEQ[k] - 1) as f64;
            *w = acc;
        }
        Self {
            tol,
            h: h0,
            k_target: 4,
            accepted: 0,
            rejected: 0,
            evaluations: 0,
            work,
        }
    }

    /// Proposed magnitude of the next step.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Advances `y` from `t` towards `t_end` by one accepted step and returns the new time.
    /// The step never overshoots `t_end`; backward integration uses `t_end < t`.
    pub fn advance<F>(&mut self, rhs: &F, t: f64, y: &mut [f64; N], t_end: f64) -> Result<f64>
    where
        F: Fn(&[f64; N]) -> Option<[f64; N]>,
    {
        let dir = if t_end >= t { 1.0 } else { -1.0 };
        let remaining = (t_end - t).abs();
        let f0 = rhs(y).ok_or(Error::StepUnderflow { t })?;
        self.evaluations += 1;
        loop {
            let clipped = self.h >= remaining;
            let h = if clipped { remaining } else { self.h };
            if clipped && remaining <= 1e-14 * t.abs().max(1.0) {
                for i in 0..N {
                    y[i] += dir * remaining * f0[i];
                }
                return Ok(t_end);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            let trial = self.attempt(rhs, y, &f0, dir * h);
            // Accepted states must stay inside the domain of `rhs`.
            let trial = trial.filter(|(y_new, _, _)| {
                self.evaluations += 1;
                rhs(y_new).is_some()
            });
            match trial {
                Some((y_new, k, h_next)) => {
                    *y = y_new;
                    self.accepted += 1;
                    // A step shortened only to land on t_end says nothing about the safe size.
                    if !clipped || h_next < self.h {
                        self.h = h_next;
                    }
                    self.k_target = k;
                    return Ok(if clipped { t_end } else { t + dir * h });
                }
                None => {
                    self.rejected += 1;
                    self.h = h * 0.5_f64.min(self.h / h);
                }
            }
        }
    }

    /// State after a single extrapolated step of size `h` at the full tableau depth, without
    /// error control. Used to refine events inside an accepted step.
    pub fn fixed_step<F>(&mut self, rhs: &F, y: &[f64; N], f0: &[f64; N], h: f64) -> Option<[f64; N]>
    where
        F: Fn(&[f64; N]) -> Option<[f64; N]>,
    {
        let k = (self.k_target + 1).min(ROWS - 1);
        let mut table = [[0.0; N]; ROWS];
        for row in 0..=k {
            let t = self.midpoint(rhs, y, f0, h, SEQ[row])?;
            extrapolate(&mut table, row, t);
        }
        Some(table[k])
    }

    fn midpoint<F>(&mut self, rhs: &F, y: &[f64; N], f0: &[f64; N], h: f64, n: usize) -> Option<[f64; N]>
    where
        F: Fn(&[f64; N]) -> Option<[f64; N]>,
    {
        let sub = h / n as f64;
        let mut z0 = *y;
        let mut z1 = [0.0; N];
        for i in 0..N {
            z1[i] = y[i] + sub * f0[i];
        }
        for _ in 1..n {
            let d = rhs(&z1)?;
            self.evaluations += 1;
            for i in 0..N {
                let next = z0[i] + 2.0 * sub * d[i];
                z0[i] = z1[i];
                z1[i] = next;
            }
        }
        Some(z1)
    }

    /// One trial step. Returns (new state, row used, next step size) on acceptance.
    fn attempt<F>(&mut self, rhs: &F, y: &[f64; N], f0: &[f64; N], h: f64) -> Option<([f64; N], usize, f64)>
    where
        F: Fn(&[f64; N]) -> Option<[f64; N]>,
    {
        let habs = h.abs();
        let k_last = self.k_target + 1;
        let mut table = [[0.0; N]; ROWS];
        let mut prev_diag = [0.0; N];
        let mut h_opt = [0.0; ROWS];
        for row in 0..=k_last {
            let Some(t) = self.midpoint(rhs, y, f0, h, SEQ[row]) else {
                // Left the domain: shrink hard.
                self.h = habs * 0.25;
                return None;
            };
            extrapolate(&mut table, row, t);
            let diag = table[row];
            if row == 0 {
                prev_diag = diag;
                continue;
            }
            let err = self.error_norm(y, &diag, &prev_diag);
            prev_diag = diag;
            if !err.is_finite() {
                self.h = habs * 0.25;
                return None;
            }
            let expo = 1.0 / (2 * row + 1) as f64;
            let fac = (0.94 * (0.65 / err.max(1e-300)).powf(expo)).clamp(0.02, 4.0);
            h_opt[row] = habs * fac;
            if row + 1 >= self.k_target && err <= 1.0 {
                let next = self.choose_next(row, &h_opt);
                return Some((diag, next.0, next.1));
            }
            if row == k_last {
                self.h = h_opt[row.min(self.k_target)].min(0.7 * habs);
                return None;
            }
        }
        None
    }

    fn error_norm(&self, y: &[f64; N], a: &[f64; N], b: &[f64; N]) -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(a[i].abs());
            let e = (a[i] - b[i]) / scale;
            s += e * e;
        }
        (s / N as f64).sqrt()
    }

    /// Target row for the next step after accepting at `row`, minimizing work per unit time.
    fn choose_next(&self, row: usize, h_opt: &[f64; ROWS]) -> (usize, f64) {
        let w = |k: usize| self.work[k] / h_opt[k];
        if row >= 3 && w(row - 1) < 0.8 * w(row) {
            return (row - 1, h_opt[row - 1]);
        }
        if row < ROWS - 2 && (row < 2 || w(row) < 0.9 * w(row - 1)) {
            return (row + 1, h_opt[row] * self.work[row + 1] / self.work[row]);
        }
        (row.clamp(2, ROWS - 2), h_opt[row])
    }
}

/// Overwrites the previous tableau row T[row−1][0..row] in place with row `row` seeded by `t`.
fn extrapolate<const N: usize>(table: &mut [[f64; N]; ROWS], row: usize, t: [f64; N]) {
    let mut cur = t;
    for l in 1..=row {
        let ratio = SEQ[row] as f64 / SEQ[row - l] as f64;
        let inv = 1.0 / (ratio * ratio - 1.0);
        let below = table[l - 1];
        table[l - 1] = cur;
        for i in 0..N {
            cur[i] += (cur[i] - below[i]) * inv;
        }
    }
    table[row] = cur;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate<const N: usize, F>(rhs: &F, y0: [f64; N], t_end: f64, tol: f64) -> ([f64; N], Gbs<N>)
    where
        F: Fn(&[f64; N]) -> Option<[f64; N]>,
    {
        let mut g = Gbs::new(Tolerance::uniform(tol), 0.1);
        let mut y = y0;
        let mut t = 0.0;
        while t != t_end {
            t = g.advance(rhs, t, &mut y, t_end).unwrap();
        }
        (y, g)
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let rhs = |y: &[f64; 2]| Some([y[1], -y[0]]);
        let (y, g) = integrate(&rhs, [1.0, 0.0], 50.0, 1e-12);
        assert!((y[0] - 50f64.cos()).abs() < 1e-9, "{}", y[0] - 50f64.cos());
        assert!((y[1] + 50f64.sin()).abs() < 1e-9);
        assert!(g.accepted < 400, "{} steps", g.accepted);
    }

    #[test]
    fn exponential_growth_and_backward_run() {
        let rhs = |y: &[f64; 1]| Some([y[0]]);
        let (y, _) = integrate(&rhs, [1.0], 5.0, 1e-12);
        assert!((y[0] / 5f64.exp() - 1.0).abs() < 1e-10);
        let (back, _) = integrate(&rhs, y, -5.0, 1e-12);
        assert!((back[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn extrapolation_table_matches_neville() {
        // A quantity with T(h) = 1 + h² + h⁴ is recovered exactly after two columns.
        let mut table = [[0.0; 1]; ROWS];
        for row in 0..3 {
            let h = 1.0 / SEQ[row] as f64;
            extrapolate(&mut table, row, [1.0 + h * h + h.powi(4)]);
        }
        assert!((table[2][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn domain_exit_is_reported() {
        // y' = 1/√(1 − y) blows up at y = 1; the stepper must not return NaN states.
        let rhs = |y: &[f64; 1]| (y[0] < 1.0).then(|| [1.0 / (1.0 - y[0]).sqrt()]);
        let mut g = Gbs::new(Tolerance::uniform(1e-10), 0.1);
        let mut y = [0.0];
        let mut t = 0.0;
        let mut failed = false;
        for _ in 0..10_000 {
            match g.advance(&rhs, t, &mut y, 10.0) {
                Ok(tn) => t = tn,
                Err(Error::StepUnderflow { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
            assert!(y[0] < 1.0);
        }
        assert!(failed);
    }
}
