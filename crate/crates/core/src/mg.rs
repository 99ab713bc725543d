//! Geometric multigrid for the stage saddle-point systems and for the
//! vector-valued mesh extension problem.
//!
//! The saddle-point smoother is the block-triangular approximation
//!
//! ```text
//! q = Ŝ⁻¹ (B Â⁻¹ f - g),   v = Â⁻¹ (f - Bᵀ q)
//! ```
//!
//! with `Â⁻¹` a Chebyshev polynomial in `diag(A)⁻¹ A` and `Ŝ⁻¹` a fixed number
//! of MINRES (symmetric stage) or BiCGStab (Oseen stage) iterations on
//! `S = B Â⁻¹ Bᵀ`, preconditioned by a Chebyshev polynomial in
//! `diag(B diag(A)⁻¹ Bᵀ)⁻¹ S`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::Result;
use crate::fem::{BlockOperator, Discretization};
use crate::krylov::{bicgstab, fgmres, minres, Chebyshev, FnOp, KrylovConfig, LinearOperator, SolveStats, Stop};
use crate::sparse::BandedLu;

impl LinearOperator for BlockOperator {
    fn size(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        BlockOperator::apply(self, x, y)
    }
}

struct VelocityBlock<'a>(&'a BlockOperator);

impl LinearOperator for VelocityBlock<'_> {
    fn size(&self) -> usize {
        self.0.n_velocity()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_a(x, y)
    }
}

/// Orders and counts of the block smoother.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmootherParams {
    /// Chebyshev degree of `Â⁻¹`.
    pub k_a: usize,
    /// Smoothing steps before and after the coarse correction.
    pub m: usize,
    /// V-cycles per preconditioner application.
    pub n: usize,
    /// Chebyshev degree of the Schur preconditioner.
    pub k_s: usize,
    /// Inner Krylov iterations of `Ŝ⁻¹`.
    pub n_s: usize,
}

impl SmootherParams {
    pub const P_DEFAULT: SmootherParams = SmootherParams { k_a: 4, m: 2, n: 1, k_s: 2, n_s: 1 };
    pub const C_DEFAULT: SmootherParams = SmootherParams { k_a: 6, m: 2, n: 1, k_s: 2, n_s: 1 };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerSolver {
    Minres,
    BiCgStab,
}

/// Counts how often each inner Schur solver ran.
#[derive(Debug, Default)]
pub struct InnerCounters {
    pub minres: AtomicUsize,
    pub bicgstab: AtomicUsize,
}

/// One level of a multigrid hierarchy: an operator with a smoother.
pub trait Smoother: Sync {
    fn operator(&self) -> &BlockOperator;
    /// Approximate solution of `op c = r`.
    fn smooth(&self, r: &[f64], c: &mut [f64]);
}

pub struct BlockSmoother {
    pub op: BlockOperator,
    cheb_a: Chebyshev,
    cheb_s: Chebyshev,
    pub inner: InnerSolver,
    params: SmootherParams,
    counters: Arc<InnerCounters>,
}

impl BlockSmoother {
    pub fn new(op: BlockOperator, params: SmootherParams, counters: Arc<InnerCounters>) -> BlockSmoother {
        let diag_a = op.diagonal_a();
        let cheb_a = Chebyshev::with_estimate(&VelocityBlock(&op), &diag_a, params.k_a);
        let schur_diag = op.schur_diagonal(&diag_a);
        let inner = if op.is_symmetric() { InnerSolver::Minres } else { InnerSolver::BiCgStab };
        let mut s = BlockSmoother {
            cheb_s: Chebyshev::new(&schur_diag, 1.0, 1.0, 1),
            op,
            cheb_a,
            inner,
            params,
            counters,
        };
        if params.k_s > 1 {
            // a single Jacobi step only rescales the inner Krylov iterates,
            // so the spectral estimate matters for higher degrees only
            let cheb = Chebyshev::with_estimate(&SchurOp(&s), &schur_diag, params.k_s);
            s.cheb_s = cheb;
        }
        s
    }

    fn a_inv(&self, f: &[f64], x: &mut [f64]) {
        self.cheb_a.apply(&VelocityBlock(&self.op), f, x);
    }

    fn schur(&self, q: &[f64], y: &mut [f64]) {
        let nv = self.op.n_velocity();
        let mut t = vec![0.0; nv];
        let mut u = vec![0.0; nv];
        self.op.apply_bt(q, &mut t);
        self.a_inv(&t, &mut u);
        self.op.apply_b(&u, y);
        for (k, &m) in self.op.pressure_constrained().iter().enumerate() {
            if m {
                y[k] = q[k];
            }
        }
    }
}

struct SchurOp<'a>(&'a BlockSmoother);

impl LinearOperator for SchurOp<'_> {
    fn size(&self) -> usize {
        self.0.op.n_pressure()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.schur(x, y)
    }
}

impl Smoother for BlockSmoother {
    fn operator(&self) -> &BlockOperator {
        &self.op
    }

    fn smooth(&self, r: &[f64], c: &mut [f64]) {
        let nv = self.op.n_velocity();
        let np = self.op.n_pressure();
        let (f, g) = r.split_at(nv);
        let mut y = vec![0.0; nv];
        self.a_inv(f, &mut y);
        let mut rhs = vec![0.0; np];
        self.op.apply_b(&y, &mut rhs);
        let pmask = self.op.pressure_constrained();
        for k in 0..np {
            rhs[k] = if pmask[k] { 0.0 } else { rhs[k] - g[k] };
        }
        let mut q = vec![0.0; np];
        let schur = SchurOp(self);
        let prec = FnOp { n: np, f: |b: &[f64], x: &mut [f64]| self.cheb_s.apply(&schur, b, x) };
        let stop = Stop::Fixed(self.params.n_s);
        // fixed-count inner iterations cannot fail
        let _ = match self.inner {
            InnerSolver::Minres => {
                self.counters.minres.fetch_add(1, Ordering::Relaxed);
                minres(&schur, &prec, &rhs, &mut q, stop)
            }
            InnerSolver::BiCgStab => {
                self.counters.bicgstab.fetch_add(1, Ordering::Relaxed);
                bicgstab(&schur, &prec, &rhs, &mut q, stop)
            }
        };
        for k in 0..np {
            if pmask[k] {
                q[k] = g[k];
            }
        }
        let mut t = vec![0.0; nv];
        self.op.apply_bt(&q, &mut t);
        for k in 0..nv {
            t[k] = f[k] - t[k];
        }
        let (cv, cp) = c.split_at_mut(nv);
        self.a_inv(&t, cv);
        cp.copy_from_slice(&q);
    }
}

/// Chebyshev smoother of a velocity-only operator.
pub struct ChebyshevSmoother {
    pub op: BlockOperator,
    cheb: Chebyshev,
}

impl ChebyshevSmoother {
    pub fn new(op: BlockOperator, order: usize) -> ChebyshevSmoother {
        let diag = op.diagonal_a();
        let cheb = Chebyshev::with_estimate(&VelocityBlock(&op), &diag, order);
        ChebyshevSmoother { op, cheb }
    }
}

impl Smoother for ChebyshevSmoother {
    fn operator(&self) -> &BlockOperator {
        &self.op
    }
    fn smooth(&self, r: &[f64], c: &mut [f64]) {
        self.cheb.apply(&VelocityBlock(&self.op), r, c)
    }
}

/// V-cycle preconditioner with a banded LU solve on the coarsest level.
pub struct Multigrid<S: Smoother> {
    disc: Arc<Discretization>,
    coarse_op: BlockOperator,
    coarse: BandedLu,
    /// Smoothers of levels `1..`.
    levels: Vec<S>,
    pub smoothing_steps: usize,
    pub cycles: usize,
}

impl<S: Smoother> Multigrid<S> {
    /// `ops[0]` is the coarsest operator; `make` turns every finer operator
    /// into a smoother.
    pub fn new(
        disc: Arc<Discretization>,
        mut ops: Vec<BlockOperator>,
        smoothing_steps: usize,
        cycles: usize,
        make: impl Fn(BlockOperator) -> S + Sync,
    ) -> Result<Multigrid<S>> {
        let finer: Vec<BlockOperator> = ops.drain(1..).collect();
        let coarse_op = ops.pop().expect("at least one level");
        let coarse = BandedLu::factor(&coarse_op.assemble()?)?;
        let levels = finer.into_iter().map(make).collect();
        Ok(Multigrid { disc, coarse_op, coarse, levels, smoothing_steps, cycles })
    }

    pub fn finest_operator(&self) -> &BlockOperator {
        self.levels.last().map(|s| s.operator()).unwrap_or(&self.coarse_op)
    }

    pub fn level_smoother(&self, level: usize) -> Option<&S> {
        level.checked_sub(1).and_then(|l| self.levels.get(l))
    }

    fn op(&self, level: usize) -> &BlockOperator {
        if level == 0 {
            &self.coarse_op
        } else {
            self.levels[level - 1].operator()
        }
    }

    fn residual(op: &BlockOperator, b: &[f64], x: &[f64], r: &mut [f64]) {
        op.apply(x, r);
        for i in 0..r.len() {
            r[i] = b[i] - r[i];
        }
    }

    fn vcycle(&self, level: usize, b: &[f64]) -> Vec<f64> {
        if level == 0 {
            return self.coarse.solve(b);
        }
        let sm = &self.levels[level - 1];
        let op = sm.operator();
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut c = vec![0.0; n];
        for _ in 0..self.smoothing_steps {
            sm.smooth(&r, &mut c);
            x.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
            Self::residual(op, b, &x, &mut r);
        }
        let coarse_op = self.op(level - 1);
        let mut rc = vec![0.0; coarse_op.n()];
        let tr = &self.disc.transfers[level - 1];
        tr.restrict(&r, &mut rc, op.with_pressure);
        for (k, &m) in coarse_op.constrained.iter().enumerate() {
            if m {
                rc[k] = 0.0;
            }
        }
        let ec = self.vcycle(level - 1, &rc);
        let mut e = vec![0.0; n];
        tr.prolongate(&ec, &mut e, op.with_pressure);
        for k in 0..n {
            if !op.constrained[k] {
                x[k] += e[k];
            }
        }
        for _ in 0..self.smoothing_steps {
            Self::residual(op, b, &x, &mut r);
            sm.smooth(&r, &mut c);
            x.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        }
        x
    }
}

impl<S: Smoother> LinearOperator for Multigrid<S> {
    fn size(&self) -> usize {
        self.finest_operator().n()
    }
    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let top = self.levels.len();
        let first = self.vcycle(top, b);
        x.copy_from_slice(&first);
        let op = self.op(top);
        let mut r = vec![0.0; b.len()];
        for _ in 1..self.cycles {
            Self::residual(op, b, x, &mut r);
            let e = self.vcycle(top, &r);
            x.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
        }
    }
}

/// Block multigrid for a stage: one smoother per level above the coarsest.
pub fn stage_multigrid(
    disc: Arc<Discretization>,
    ops: Vec<BlockOperator>,
    params: SmootherParams,
    counters: Arc<InnerCounters>,
) -> Result<Multigrid<BlockSmoother>> {
    Multigrid::new(disc, ops, params.m, params.n, |op| BlockSmoother::new(op, params, counters.clone()))
}

/// Solves `M x = rhs` where the constrained entries of `x` hold the boundary
/// values on entry and the remaining entries the initial guess. Returns the
/// FGMRES statistics of the correction solve.
pub fn solve_with_data<P: LinearOperator>(op: &BlockOperator, prec: &P, rhs: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> Result<SolveStats> {
    let n = op.n();
    let mut r = vec![0.0; n];
    op.apply_raw(x, &mut r);
    for k in 0..n {
        r[k] = if op.constrained[k] { 0.0 } else { rhs[k] - r[k] };
    }
    let mut d = vec![0.0; n];
    let stats = fgmres(op, prec, &r, &mut d, cfg)?;
    x.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    Ok(stats)
}
