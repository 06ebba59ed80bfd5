//! Thin safe wrappers over the LAPACK routines used for the symmetric eigenproblems.
//!
//! Dense matrices are column-major. Symmetric band matrices use LAPACK lower band
//! storage: element `(i, j)` with `j <= i <= j + kd` lives at `ab[(i - j) + j * (kd + 1)]`.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::os::raw::c_char;

const LOWER: c_char = b'L' as c_char;

fn lapack_err(routine: &'static str, info: i32) -> Error {
    Error::Lapack {
        routine,
        sector: usize::MAX,
        info,
    }
}

/// Full eigendecomposition of a dense symmetric matrix (lower triangle referenced).
/// Returns ascending eigenvalues and column-major eigenvectors.
pub fn dense_sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut a = a.to_vec();
    let ni = n as i32;
    let mut m = 0i32;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n * n];
    let mut isuppz = vec![0i32; 2 * n];
    let mut info = 0i32;
    let mut lwork_q = [0.0f64];
    let mut liwork_q = [0i32];
    let jobz = b'V' as c_char;
    let range = b'A' as c_char;
    // SAFETY: all buffers are sized per the dsyevr contract; the first call is a workspace query.
    unsafe {
        lapack_sys::dsyevr_(
            &jobz, &range, &LOWER, &ni, a.as_mut_ptr(), &ni, &0.0, &0.0, &0, &0, &0.0, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ni, isuppz.as_mut_ptr(), lwork_q.as_mut_ptr(), &-1,
            liwork_q.as_mut_ptr(), &-1, &mut info,
        );
    }
    if info != 0 {
        return Err(lapack_err("dsyevr", info));
    }
    let lwork = lwork_q[0] as i32;
    let liwork = liwork_q[0];
    let mut work = vec![0.0; lwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::dsyevr_(
            &jobz, &range, &LOWER, &ni, a.as_mut_ptr(), &ni, &0.0, &0.0, &0, &0, &0.0, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ni, isuppz.as_mut_ptr(), work.as_mut_ptr(), &lwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 || m as usize != n {
        return Err(lapack_err("dsyevr", info));
    }
    Ok((w, z))
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`,
/// ascending.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1));
    let mut d = d.to_vec();
    let mut e = e.to_vec();
    e.push(0.0);
    let ni = n as i32;
    let mut info = 0i32;
    // SAFETY: d has n entries and e at least n − 1.
    unsafe {
        lapack_sys::dsterf_(&ni, d.as_mut_ptr(), e.as_mut_ptr(), &mut info);
    }
    if info != 0 {
        return Err(lapack_err("dsterf", info));
    }
    Ok(d)
}

/// Symmetric band matrix in lower band storage.
#[derive(Clone, Debug)]
pub struct SymBand {
    pub n: usize,
    pub kd: usize,
    pub ab: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            ab: vec![0.0; (kd + 1) * n],
        }
    }

    #[inline]
    pub fn ldab(&self) -> usize {
        self.kd + 1
    }

    /// Entry `(i, j)`; symmetric access, zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.kd {
            0.0
        } else {
            self.ab[(r - c) + c * self.ldab()]
        }
    }

    /// Sets `(i, j)` with `i >= j` inside the band.
    #[inline]
    pub fn set_lower(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j <= self.kd);
        let ld = self.ldab();
        self.ab[(i - j) + j * ld] = v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let ld = self.ldab();
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            let col = &self.ab[c * ld..(c + 1) * ld];
            y[c] += col[0] * x[c];
            let top = (self.kd).min(self.n - 1 - c);
            let mut acc = 0.0;
            for d in 1..=top {
                let a = col[d];
                y[c + d] += a * x[c];
                acc += a * x[c + d];
            }
            y[c] += acc;
        }
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        let ld = self.ldab();
        for c in 0..self.n {
            rows[c] += self.ab[c * ld].abs();
            for d in 1..=self.kd.min(self.n - 1 - c) {
                let a = self.ab[d + c * ld].abs();
                rows[c] += a;
                rows[c + d] += a;
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for c in 0..n {
            for d in 0..=self.kd.min(n - 1 - c) {
                let v = self.ab[d + c * self.ldab()];
                a[(c + d) + c * n] = v;
                a[c + (c + d) * n] = v;
            }
        }
        a
    }

    /// Eigenvalues in the half-open interval `(lo, hi]`, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let n = self.n;
        if n == 0 {
            return Ok(Vec::new());
        }
        let ni = n as i32;
        let kdi = self.kd as i32;
        let ldi = self.ldab() as i32;
        let mut ab = self.ab.clone();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n.max(2) - 1];
        let mut q = [0.0f64];
        let mut work = vec![0.0; n];
        let mut info = 0i32;
        let vect = b'N' as c_char;
        // SAFETY: band buffer is (kd+1) x n; d, e, work sized per dsbtrd.
        unsafe {
            lapack_sys::dsbtrd_(
                &vect, &LOWER, &ni, &kdi, ab.as_mut_ptr(), &ldi, d.as_mut_ptr(), e.as_mut_ptr(),
                q.as_mut_ptr(), &1, work.as_mut_ptr(), &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dsbtrd", info));
        }
        let mut m = 0i32;
        let mut nsplit = 0i32;
        let mut w = vec![0.0; n];
        let mut iblock = vec![0i32; n];
        let mut isplit = vec![0i32; n];
        let mut work = vec![0.0; 4 * n];
        let mut iwork = vec![0i32; 3 * n];
        let range = b'V' as c_char;
        let order = b'E' as c_char;
        // SAFETY: sized per dstebz; abstol 0 selects the default (machine-precision) tolerance.
        unsafe {
            lapack_sys::dstebz_(
                &range, &order, &ni, &lo, &hi, &0, &0, &0.0, d.as_ptr(), e.as_ptr(), &mut m,
                &mut nsplit, w.as_mut_ptr(), iblock.as_mut_ptr(), isplit.as_mut_ptr(),
                work.as_mut_ptr(), iwork.as_mut_ptr(), &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dstebz", info));
        }
        w.truncate(m as usize);
        Ok(w)
    }

    /// LU factorization of `A - shift I` in general band storage.
    pub fn shifted_lu(&self, shift: f64) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kd;
        let ldg = 3 * kl + 1;
        let mut g = vec![0.0; ldg * n];
        let ld = self.ldab();
        for c in 0..n {
            for d in 0..=kl.min(n - 1 - c) {
                let v = self.ab[d + c * ld] - if d == 0 { shift } else { 0.0 };
                // (c+d, c) below the diagonal and (c, c+d) above it.
                g[(2 * kl + d) + c * ldg] = v;
                if d > 0 {
                    g[(2 * kl - d) + (c + d) * ldg] = v;
                }
            }
        }
        let mut ipiv = vec![0i32; n];
        let ni = n as i32;
        let kli = kl as i32;
        let ldgi = ldg as i32;
        let mut info = 0i32;
        // SAFETY: general band buffer has 2*kl+ku+1 rows as dgbtrf requires.
        unsafe {
            lapack_sys::dgbtrf_(&ni, &ni, &kli, &kli, g.as_mut_ptr(), &ldgi, ipiv.as_mut_ptr(), &mut info);
        }
        if info < 0 {
            return Err(lapack_err("dgbtrf", info));
        }
        Ok(BandLu {
            n,
            kl,
            g,
            ipiv,
            singular: info > 0,
        })
    }

    /// Eigenpairs with eigenvalue in `(lo, hi]` by bisection on the tridiagonal reduction
    /// followed by shifted inverse iteration on the band matrix.
    pub fn eigenpairs_in(&self, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let values = self.eigenvalues_in(lo, hi)?;
        let vectors = self.inverse_iteration(&values)?;
        Ok((values, vectors))
    }

    /// Eigenvectors for known ascending eigenvalues. Near-degenerate members are kept
    /// mutually orthogonal.
    pub fn inverse_iteration(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        let norm = self.norm_inf().max(1.0);
        let eps = f64::EPSILON;
        let cluster_gap = 1e-4 * norm;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_e16e);
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0usize;
        let mut ax = vec![0.0; n];
        for (k, &lambda) in values.iter().enumerate() {
            while values[cluster_start] < lambda - cluster_gap {
                cluster_start += 1;
            }
            let mut shift = lambda + 10.0 * eps * norm;
            let mut lu = self.shifted_lu(shift)?;
            if lu.singular {
                shift = lambda + 1e3 * eps * norm;
                lu = self.shifted_lu(shift)?;
            }
            let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            normalize(&mut x);
            let mut best = f64::INFINITY;
            for it in 0..8 {
                lu.solve(&mut x)?;
                for prev in &out[cluster_start..k] {
                    orthogonalize(&mut x, prev);
                }
                for prev in &out[cluster_start..k] {
                    orthogonalize(&mut x, prev);
                }
                normalize(&mut x);
                self.matvec(&x, &mut ax);
                let res = ax
                    .iter()
                    .zip(&x)
                    .map(|(a, v)| (a - lambda * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                // Stop once the residual sits at rounding level or stops improving.
                let done = it >= 1 && (res <= 1e-13 * norm || res > 0.5 * best);
                best = best.min(res);
                if done {
                    break;
                }
            }
            if !(best <= 1e-8 * lambda.abs().max(1.0)) {
                return Err(Error::EigenvectorNotConverged {
                    sector: usize::MAX,
                    energy: lambda,
                    residual: best,
                });
            }
            out.push(x);
        }
        Ok(out)
    }
}

/// LU factors of a shifted band matrix.
pub struct BandLu {
    n: usize,
    kl: usize,
    g: Vec<f64>,
    ipiv: Vec<i32>,
    pub singular: bool,
}

impl BandLu {
    pub fn solve(&self, x: &mut [f64]) -> Result<()> {
        let ni = self.n as i32;
        let kli = self.kl as i32;
        let ldgi = (3 * self.kl + 1) as i32;
        let mut info = 0i32;
        let trans = b'N' as c_char;
        // SAFETY: factors come from dgbtrf with identical dimensions.
        unsafe {
            lapack_sys::dgbtrs_(
                &trans, &ni, &kli, &kli, &1, self.g.as_ptr(), &ldgi, self.ipiv.as_ptr(),
                x.as_mut_ptr(), &ni, &mut info,
            );
        }
        if info != 0 {
            return Err(lapack_err("dgbtrs", info));
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn normalize(x: &mut [f64]) {
    let nrm = dot(x, x).sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

fn orthogonalize(x: &mut [f64], q: &[f64]) {
    let p = dot(x, q);
    x.iter_mut().zip(q).for_each(|(v, qi)| *v -= p * qi);
}
