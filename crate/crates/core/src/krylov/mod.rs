//! Krylov solvers and polynomial smoothers working on abstract linear operators.

mod chebyshev;
mod gmres;
mod methods;

pub use chebyshev::{estimate_eigen_range, Chebyshev, POWER_ITERATIONS};
pub use gmres::fgmres;
pub use methods::{bicgstab, cg, minres};

use rayon::prelude::*;

/// A linear (or, for preconditioners, possibly nonlinear) map `x ↦ y`.
pub trait LinearOperator: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Wraps a closure as an operator.
pub struct FnOp<F: Fn(&[f64], &mut [f64]) + Sync> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOperator for FnOp<F> {
    fn size(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn size(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

impl LinearOperator for crate::sparse::Csr {
    fn size(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// Stopping rule of an iterative method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// Stop when the residual norm drops below `tol`; more than `max_iter`
    /// iterations is a failure.
    Tolerance { tol: f64, max_iter: usize },
    /// Run exactly this many iterations (used inside smoothers).
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig { tol: 1e-6, max_iter: 500, restart: 60 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Residual norm before the first iteration and after each iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl SolveStats {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

const PAR_CHUNK: usize = 8192;

/// Dot product with a fixed reduction order (independent of thread count).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 * PAR_CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let parts: Vec<f64> = a
        .par_chunks(PAR_CHUNK)
        .zip(b.par_chunks(PAR_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() < 2 * PAR_CHUNK {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    } else {
        y.par_chunks_mut(PAR_CHUNK)
            .zip(x.par_chunks(PAR_CHUNK))
            .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi += alpha * xi));
    }
}

/// `r = b - A x` (no product for a zero `x`)
pub fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
    if x.iter().all(|&e| e == 0.0) {
        r.copy_from_slice(b);
        return;
    }
    op.apply(x, r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
}
