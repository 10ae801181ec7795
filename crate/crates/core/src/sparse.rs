//! Sparse symmetric matrices and a Jacobi-preconditioned conjugate gradient solver.

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Builds a CSR matrix from triplets, summing duplicates. Triplets are
/// consumed in the given order, so identical input gives identical sums.
pub fn csr_from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(n, n);
    for &(i, j, v) in triplets {
        coo.push(i, j, v);
    }
    CsrMatrix::from(&coo)
}

/// `y = A x`, rows in parallel (each row is summed sequentially).
pub fn spmv(a: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let row = a.row(i);
        *yi = row.col_indices().iter().zip(row.values()).map(|(&j, &v)| v * x[j]).sum();
    });
    y
}

pub fn diagonal(a: &CsrMatrix<f64>) -> Vec<f64> {
    (0..a.nrows()).map(|i| a.get_entry(i, i).map_or(0.0, |e| e.into_value())).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// Iteration cap; `None` means ten times the dimension.
    pub max_iter: Option<usize>,
    /// Project constants out of the iterate and the preconditioned residual
    /// (for systems whose kernel is the constant vector).
    pub remove_constant: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: None, remove_constant: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned CG for a symmetric positive (semi)definite `a`, starting from zero.
pub fn pcg(a: &CsrMatrix<f64>, b: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, CgOutcome)> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Invalid(format!("matrix {}x{} vs rhs {n}", a.nrows(), a.ncols())));
    }
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, CgOutcome { iterations: 0, rel_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = diagonal(a).iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let precondition = |r: &[f64]| {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        if opts.remove_constant {
            remove_mean(&mut z);
        }
        z
    };
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let cap = opts.max_iter.unwrap_or(10 * n).max(1);
    let mut rel = 1.0;
    for it in 1..=cap {
        let ap = spmv(a, &p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotConverged { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        if opts.remove_constant {
            remove_mean(&mut x);
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= opts.rel_tol {
            // recompute the true residual to guard against drift
            let ax = spmv(a, &x);
            let true_rel = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
            if true_rel <= opts.rel_tol * 10.0 {
                return Ok((x, CgOutcome { iterations: it, rel_residual: true_rel }));
            }
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(Error::NotConverged { iterations: cap, residual: rel })
}
