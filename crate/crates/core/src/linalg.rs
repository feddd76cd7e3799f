//! Sparse matrices and Krylov solvers.
//!
//! Systems here come in two flavours: symmetric positive (semi)definite in a
//! weighted inner product (viscous Gram operator, Korn pencil), solved with
//! preconditioned CG, and mildly nonsymmetric (pressure Poisson and director
//! diffusion closures), solved with preconditioned BiCGStab. Dot products run
//! through [`crate::par::sum_indexed`], so iteration histories are
//! deterministic across thread counts.

use crate::error::{Error, Result};
use crate::par;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

/// Triplet builder for [`Csr`]; duplicate entries are summed.
#[derive(Debug, Default)]
pub struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, triplets: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    pub fn build(mut self) -> Csr {
        self.triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_idx: Vec<usize> = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(self.triplets.len());
        for &(r, c, v) in &self.triplets {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

impl Csr {
    /// y = A x
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        let row_ptr = &self.row_ptr;
        let col_idx = &self.col_idx;
        let values = &self.values;
        par::for_each_chunk_mut(y, |start, chunk| {
            for (k, yk) in chunk.iter_mut().enumerate() {
                let r = start + k;
                let mut s = 0.0;
                for p in row_ptr[r]..row_ptr[r + 1] {
                    s += values[p] * x[col_idx[p]];
                }
                *yk = s;
            }
        });
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let nnz = self.col_idx.len();
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = counts;
        for r in 0..self.nrows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                let slot = next[c];
                next[c] += 1;
                col_idx[slot] = r;
                values[slot] = self.values[p];
            }
        }
        Csr { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Diagonal entries (zero where absent).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for r in 0..d.len() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[p] == r {
                    d[r] += self.values[p];
                }
            }
        }
        d
    }
}

/// Weighted dot product with deterministic reduction order.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    par::sum_indexed(a.len(), |i| w[i] * a[i] * b[i])
}

/// Plain dot product with deterministic reduction order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_indexed(a.len(), |i| a[i] * b[i])
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    par::for_each_chunk_mut(y, |start, chunk| {
        for (k, v) in chunk.iter_mut().enumerate() {
            *v += alpha * x[start + k];
        }
    });
}

/// Statistics from a linear solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Abstract operator for matrix-free solves.
pub trait LinearOp {
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn dim(&self) -> usize;
}

impl LinearOp for Csr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul(x, y)
    }
    fn dim(&self) -> usize {
        self.nrows
    }
}

/// Preconditioned conjugate gradient for operators symmetric positive
/// (semi)definite in the `w`-weighted inner product. `diag` is a Jacobi
/// preconditioner (entries of the operator diagonal); `x` carries the initial
/// guess and receives the solution.
pub fn cg<A: LinearOp>(
    a: &A,
    w: &[f64],
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iters: usize,
    name: &'static str,
) -> Result<SolveStats> {
    let n = a.dim();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    a.apply(x, &mut r);
    par::for_each_chunk_mut(&mut r, |start, chunk| {
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = b[start + k] - *v;
        }
    });
    let bnorm = wdot(w, b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rnorm = wdot(w, &r, &r).sqrt();
    if rnorm <= rel_tol * bnorm {
        return Ok(SolveStats { iterations: 0, residual: rnorm / bnorm });
    }
    apply_jacobi(&mut z, &r, diag);
    p.copy_from_slice(&z);
    let mut rz = wdot(w, &r, &z);
    for it in 1..=max_iters {
        a.apply(&p, &mut ap);
        let pap = wdot(w, &p, &ap);
        if pap <= 0.0 {
            // semidefinite breakdown: accept current iterate if converged
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rnorm = wdot(w, &r, &r).sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(SolveStats { iterations: it, residual: rnorm / bnorm });
        }
        apply_jacobi(&mut z, &r, diag);
        let rz_new = wdot(w, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::for_each_chunk_mut(&mut p, |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v = z[start + k] + beta * *v;
            }
        });
    }
    if rnorm <= rel_tol * bnorm {
        Ok(SolveStats { iterations: max_iters, residual: rnorm / bnorm })
    } else {
        Err(Error::NonConvergence { which: name, iters: max_iters, residual: rnorm / bnorm })
    }
}

/// Preconditioned BiCGStab; tolerates mild nonsymmetry. Inner products are
/// `w`-weighted for scale consistency with [`cg`].
#[allow(clippy::too_many_arguments)]
pub fn bicgstab<A: LinearOp>(
    a: &A,
    w: &[f64],
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iters: usize,
    name: &'static str,
) -> Result<SolveStats> {
    let n = a.dim();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    par::for_each_chunk_mut(&mut r, |start, chunk| {
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = b[start + k] - *v;
        }
    });
    let bnorm = wdot(w, b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rnorm = wdot(w, &r, &r).sqrt();
    if rnorm <= rel_tol * bnorm {
        return Ok(SolveStats { iterations: 0, residual: rnorm / bnorm });
    }

    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 1..=max_iters {
        let rho_new = wdot(w, &r0, &r);
        if rho_new.abs() < f64::MIN_POSITIVE {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        par::for_each_chunk_mut(&mut p, |start, chunk| {
            for (k, pv) in chunk.iter_mut().enumerate() {
                let i = start + k;
                *pv = r[i] + beta * (*pv - omega * v[i]);
            }
        });
        apply_jacobi(&mut ph, &p, diag);
        a.apply(&ph, &mut v);
        let r0v = wdot(w, &r0, &v);
        if r0v.abs() < f64::MIN_POSITIVE {
            break;
        }
        alpha = rho / r0v;
        par::for_each_chunk_mut(&mut s, |start, chunk| {
            for (k, sv) in chunk.iter_mut().enumerate() {
                let i = start + k;
                *sv = r[i] - alpha * v[i];
            }
        });
        let snorm = wdot(w, &s, &s).sqrt();
        if snorm <= rel_tol * bnorm {
            axpy(alpha, &ph, x);
            return Ok(SolveStats { iterations: it, residual: snorm / bnorm });
        }
        apply_jacobi(&mut sh, &s, diag);
        a.apply(&sh, &mut t);
        let tt = wdot(w, &t, &t);
        if tt < f64::MIN_POSITIVE {
            break;
        }
        omega = wdot(w, &t, &s) / tt;
        par::for_each_chunk_mut(x, |start, chunk| {
            for (k, xv) in chunk.iter_mut().enumerate() {
                let i = start + k;
                *xv += alpha * ph[i] + omega * sh[i];
            }
        });
        par::for_each_chunk_mut(&mut r, |start, chunk| {
            for (k, rv) in chunk.iter_mut().enumerate() {
                let i = start + k;
                *rv = s[i] - omega * t[i];
            }
        });
        rnorm = wdot(w, &r, &r).sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(SolveStats { iterations: it, residual: rnorm / bnorm });
        }
        if omega.abs() < f64::MIN_POSITIVE {
            break;
        }
    }
    if rnorm <= rel_tol * bnorm {
        Ok(SolveStats { iterations: max_iters, residual: rnorm / bnorm })
    } else {
        Err(Error::NonConvergence { which: name, iters: max_iters, residual: rnorm / bnorm })
    }
}

fn apply_jacobi(z: &mut [f64], r: &[f64], diag: &[f64]) {
    par::for_each_chunk_mut(z, |start, chunk| {
        for (k, v) in chunk.iter_mut().enumerate() {
            let i = start + k;
            let d = diag[i];
            *v = if d.abs() > f64::MIN_POSITIVE { r[i] / d } else { r[i] };
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut b = CsrBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i > 0 {
                b.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn csr_builder_sums_duplicates() {
        let mut b = CsrBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 0, 5.0);
        let m = b.build();
        let mut y = vec![0.0; 2];
        m.mul(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 5.0]);
    }

    #[test]
    fn cg_solves_spd() {
        let n = 64;
        let a = laplace_1d(n);
        let w = vec![1.0; n];
        let diag = a.diagonal();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let stats = cg(&a, &w, &diag, &b, &mut x, 1e-12, 1000, "test").unwrap();
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
        assert!(stats.iterations <= n);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let n = 50;
        let mut bld = CsrBuilder::new(n, n);
        for i in 0..n {
            bld.push(i, i, 3.0);
            if i > 0 {
                bld.push(i, i - 1, -1.3);
            }
            if i + 1 < n {
                bld.push(i, i + 1, -0.7);
            }
        }
        let a = bld.build();
        let w = vec![1.0; n];
        let diag = a.diagonal();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64).cos()).collect();
        let mut x = vec![0.0; n];
        bicgstab(&a, &w, &diag, &b, &mut x, 1e-13, 1000, "test").unwrap();
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let a = laplace_1d(8);
        let att = a.transpose().transpose();
        assert_eq!(a.row_ptr, att.row_ptr);
        assert_eq!(a.col_idx, att.col_idx);
        assert_eq!(a.values, att.values);
    }
}
