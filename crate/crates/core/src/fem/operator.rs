//! Matrix-free evaluation of the generalized Oseen/Stokes block operator
//!
//! ```text
//! a(v, φ) = ∫ c v·φ + ν ε(v):ε(φ) + ((∇v) a)·φ + (s·∇v)·(s·∇φ)
//! b(v, q) = ∫ (∇·v) q
//! M = [A  Bᵀ]
//!     [B  0 ]
//! ```
//!
//! with quadrature-point coefficients `c`, `ν`, `a`, `s`. Constrained entries
//! are eliminated symmetrically: inputs are zeroed there and the outputs on
//! constrained rows copy the input (identity block).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FsiError, Result};
use crate::fem::basis::{tables, NQ};
use crate::fem::geometry::CellGeometry;
use crate::fem::space::DofMap;
use crate::sparse::Csr;

const CHUNK: usize = 256;
const LOCAL: usize = 22;

/// Largest system the explicit assembly oracle will build.
pub const ASSEMBLY_LIMIT: usize = 100_000;

/// Coefficients of the velocity block at every quadrature point (`9 * cell + q`).
#[derive(Clone, Debug, Default)]
pub struct QpCoefficients {
    /// Reaction coefficient multiplying `v·φ`.
    pub reaction: Vec<f64>,
    /// Coefficient multiplying `ε(v):ε(φ)`.
    pub visc: Vec<f64>,
    /// Advecting field `a` of the convection term `((∇v) a)·φ`.
    pub conv: Option<Vec<[f64; 2]>>,
    /// Streamline field `s` of the term `(s·∇v)·(s·∇φ)`.
    pub stab: Option<Vec<[f64; 2]>>,
}

impl QpCoefficients {
    pub fn uniform(n_cells: usize, reaction: f64, visc: f64) -> QpCoefficients {
        QpCoefficients {
            reaction: vec![reaction; n_cells * NQ],
            visc: vec![visc; n_cells * NQ],
            conv: None,
            stab: None,
        }
    }

    /// True when the velocity block is symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.conv.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub dofs: Arc<DofMap>,
    pub geom: Arc<CellGeometry>,
    pub coeff: QpCoefficients,
    pub with_pressure: bool,
    /// Cells contributing to the integrals.
    pub cells: Vec<usize>,
    /// Eliminated entries of the block vector.
    pub constrained: Vec<bool>,
}

struct Io<'a> {
    xv: Option<&'a [f64]>,
    xp: Option<&'a [f64]>,
    want_v: bool,
    want_p: bool,
    use_a: bool,
    masked: bool,
}

impl BlockOperator {
    pub fn new(
        dofs: Arc<DofMap>,
        geom: Arc<CellGeometry>,
        coeff: QpCoefficients,
        with_pressure: bool,
        cells: Option<Vec<usize>>,
        constrained: Vec<bool>,
    ) -> Result<BlockOperator> {
        let nc = dofs.q2_cells.len();
        let n = if with_pressure { dofs.n_total() } else { dofs.n_velocity() };
        if constrained.len() != n {
            return Err(FsiError::DimensionMismatch { expected: n, got: constrained.len() });
        }
        if coeff.reaction.len() != nc * NQ || coeff.visc.len() != nc * NQ {
            return Err(FsiError::DimensionMismatch { expected: nc * NQ, got: coeff.visc.len() });
        }
        Ok(BlockOperator {
            cells: cells.unwrap_or_else(|| (0..nc).collect()),
            dofs,
            geom,
            coeff,
            with_pressure,
            constrained,
        })
    }

    pub fn n(&self) -> usize {
        if self.with_pressure {
            self.dofs.n_total()
        } else {
            self.dofs.n_velocity()
        }
    }

    pub fn n_velocity(&self) -> usize {
        self.dofs.n_velocity()
    }

    pub fn n_pressure(&self) -> usize {
        if self.with_pressure {
            self.dofs.n_q1
        } else {
            0
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.coeff.is_symmetric()
    }

    fn velocity_mask(&self) -> &[bool] {
        &self.constrained[..self.n_velocity()]
    }

    fn pressure_mask(&self) -> &[bool] {
        &self.constrained[self.n_velocity()..]
    }

    fn cell_kernel(&self, c: usize, io: &Io, out: &mut [f64]) {
        let t = tables();
        let d = &self.dofs;
        let n2 = d.n_q2;
        let vmask = self.velocity_mask();
        let nodes = &d.q2_cells[c];
        let mut vx = [0.0; 9];
        let mut vy = [0.0; 9];
        if let Some(x) = io.xv {
            for i in 0..9 {
                let k = nodes[i];
                vx[i] = if io.masked && vmask[k] { 0.0 } else { x[k] };
                vy[i] = if io.masked && vmask[n2 + k] { 0.0 } else { x[n2 + k] };
            }
        }
        let mut p = [0.0; 4];
        if let Some(x) = io.xp {
            let pmask = self.pressure_mask();
            for (i, &k) in d.q1_cells[c].iter().enumerate() {
                p[i] = if io.masked && pmask[k] { 0.0 } else { x[k] };
            }
        }
        let do_a = io.use_a && io.xv.is_some() && io.want_v;
        let do_bt = io.xp.is_some() && io.want_v;
        let do_b = io.xv.is_some() && io.want_p;
        let (ov, op) = out.split_at_mut(18);
        for q in 0..NQ {
            let id = c * NQ + q;
            let w = self.geom.jxw[id];
            let g = self.geom.q2_grads(c, q);
            let n = &t.q2[q];
            let mut val = [0.0; 2];
            let mut gr = [[0.0; 2]; 2];
            if io.xv.is_some() {
                for i in 0..9 {
                    val[0] += n[i] * vx[i];
                    val[1] += n[i] * vy[i];
                    gr[0][0] += vx[i] * g[i][0];
                    gr[0][1] += vx[i] * g[i][1];
                    gr[1][0] += vy[i] * g[i][0];
                    gr[1][1] += vy[i] * g[i][1];
                }
            }
            let mut fv = [0.0; 2];
            let mut ff = [[0.0; 2]; 2];
            if do_a {
                let r = self.coeff.reaction[id];
                let nu = self.coeff.visc[id];
                fv = [r * val[0], r * val[1]];
                let off = 0.5 * nu * (gr[0][1] + gr[1][0]);
                ff = [[nu * gr[0][0], off], [off, nu * gr[1][1]]];
                if let Some(a) = &self.coeff.conv {
                    let a = a[id];
                    fv[0] += gr[0][0] * a[0] + gr[0][1] * a[1];
                    fv[1] += gr[1][0] * a[0] + gr[1][1] * a[1];
                }
                if let Some(s) = &self.coeff.stab {
                    let s = s[id];
                    let gs = [gr[0][0] * s[0] + gr[0][1] * s[1], gr[1][0] * s[0] + gr[1][1] * s[1]];
                    for a in 0..2 {
                        for b in 0..2 {
                            ff[a][b] += gs[a] * s[b];
                        }
                    }
                }
            }
            if do_bt {
                let pv: f64 = (0..4).map(|k| t.q1[q][k] * p[k]).sum();
                ff[0][0] += pv;
                ff[1][1] += pv;
            }
            if do_a || do_bt {
                for a in 0..2 {
                    fv[a] *= w;
                    ff[a][0] *= w;
                    ff[a][1] *= w;
                }
                for i in 0..9 {
                    ov[i] += fv[0] * n[i] + ff[0][0] * g[i][0] + ff[0][1] * g[i][1];
                    ov[9 + i] += fv[1] * n[i] + ff[1][0] * g[i][0] + ff[1][1] * g[i][1];
                }
            }
            if do_b {
                let fq = w * (gr[0][0] + gr[1][1]);
                for k in 0..4 {
                    op[k] += fq * t.q1[q][k];
                }
            }
        }
    }

    fn run(&self, io: Io, yv: Option<&mut [f64]>, yp: Option<&mut [f64]>) {
        let bufs: Vec<Vec<f64>> = self
            .cells
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut buf = vec![0.0; chunk.len() * LOCAL];
                for (ci, &c) in chunk.iter().enumerate() {
                    self.cell_kernel(c, &io, &mut buf[ci * LOCAL..(ci + 1) * LOCAL]);
                }
                buf
            })
            .collect();
        let n2 = self.dofs.n_q2;
        let mut yv = yv;
        let mut yp = yp;
        if let Some(y) = yv.as_deref_mut() {
            y.iter_mut().for_each(|e| *e = 0.0);
        }
        if let Some(y) = yp.as_deref_mut() {
            y.iter_mut().for_each(|e| *e = 0.0);
        }
        for (chunk, buf) in self.cells.chunks(CHUNK).zip(&bufs) {
            for (ci, &c) in chunk.iter().enumerate() {
                let l = &buf[ci * LOCAL..(ci + 1) * LOCAL];
                if let Some(y) = yv.as_deref_mut() {
                    for (i, &k) in self.dofs.q2_cells[c].iter().enumerate() {
                        y[k] += l[i];
                        y[n2 + k] += l[9 + i];
                    }
                }
                if let Some(y) = yp.as_deref_mut() {
                    for (i, &k) in self.dofs.q1_cells[c].iter().enumerate() {
                        y[k] += l[18 + i];
                    }
                }
            }
        }
    }

    /// Full block product `y = M x` including constraint rows.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_impl(x, y, true);
    }

    /// Product with the operator before elimination: no entry of `x` is
    /// zeroed and every row holds its integral. Used for boundary-data residuals.
    pub fn apply_raw(&self, x: &[f64], y: &mut [f64]) {
        self.apply_impl(x, y, false);
    }

    fn apply_impl(&self, x: &[f64], y: &mut [f64], eliminate: bool) {
        let nv = self.n_velocity();
        let io = Io {
            xv: Some(&x[..nv]),
            xp: if self.with_pressure { Some(&x[nv..]) } else { None },
            want_v: true,
            want_p: self.with_pressure,
            use_a: true,
            masked: eliminate,
        };
        let (yv, yp) = y.split_at_mut(nv);
        self.run(io, Some(yv), if self.with_pressure { Some(yp) } else { None });
        if eliminate {
            for (k, &m) in self.constrained.iter().enumerate() {
                if m {
                    y[k] = x[k];
                }
            }
        }
    }

    /// Velocity block only: `y = A v`.
    pub fn apply_a(&self, v: &[f64], y: &mut [f64]) {
        let io = Io { xv: Some(v), xp: None, want_v: true, want_p: false, use_a: true, masked: true };
        self.run(io, Some(y), None);
        for (k, &m) in self.velocity_mask().iter().enumerate() {
            if m {
                y[k] = v[k];
            }
        }
    }

    /// Divergence block: `y = B v` (zero on pinned pressure rows).
    pub fn apply_b(&self, v: &[f64], y: &mut [f64]) {
        let io = Io { xv: Some(v), xp: None, want_v: false, want_p: true, use_a: false, masked: true };
        self.run(io, None, Some(y));
        for (k, &m) in self.pressure_mask().iter().enumerate() {
            if m {
                y[k] = 0.0;
            }
        }
    }

    /// Gradient block: `y = Bᵀ p` (zero on constrained velocity rows).
    pub fn apply_bt(&self, p: &[f64], y: &mut [f64]) {
        let io = Io { xv: None, xp: Some(p), want_v: true, want_p: false, use_a: false, masked: true };
        self.run(io, Some(y), None);
        for (k, &m) in self.velocity_mask().iter().enumerate() {
            if m {
                y[k] = 0.0;
            }
        }
    }

    /// Exact diagonal of the velocity block (1 on constrained entries).
    pub fn diagonal_a(&self) -> Vec<f64> {
        let t = tables();
        let n2 = self.dofs.n_q2;
        let locals: Vec<[f64; 18]> = self
            .cells
            .par_iter()
            .map(|&c| {
                let mut l = [0.0; 18];
                for q in 0..NQ {
                    let id = c * NQ + q;
                    let w = self.geom.jxw[id];
                    let g = self.geom.q2_grads(c, q);
                    let (r, nu) = (self.coeff.reaction[id], self.coeff.visc[id]);
                    for i in 0..9 {
                        let n = t.q2[q][i];
                        let gg = g[i][0] * g[i][0] + g[i][1] * g[i][1];
                        let mut common = r * n * n;
                        if let Some(a) = &self.coeff.conv {
                            common += n * (a[id][0] * g[i][0] + a[id][1] * g[i][1]);
                        }
                        if let Some(s) = &self.coeff.stab {
                            let sg = s[id][0] * g[i][0] + s[id][1] * g[i][1];
                            common += sg * sg;
                        }
                        for a in 0..2 {
                            l[9 * a + i] += w * (common + 0.5 * nu * (gg + g[i][a] * g[i][a]));
                        }
                    }
                }
                l
            })
            .collect();
        let mut diag = vec![0.0; self.n_velocity()];
        for (&c, l) in self.cells.iter().zip(&locals) {
            for (i, &k) in self.dofs.q2_cells[c].iter().enumerate() {
                diag[k] += l[i];
                diag[n2 + k] += l[9 + i];
            }
        }
        for (k, &m) in self.velocity_mask().iter().enumerate() {
            if m || diag[k] == 0.0 {
                diag[k] = 1.0;
            }
        }
        diag
    }

    /// Explicit local matrix of cell `c`, rows and columns ordered
    /// `[x-comp nodes 0..9 | y-comp nodes 0..9 | pressure nodes 0..4]`.
    /// Written from the bilinear forms independently of the matrix-free kernel.
    pub fn local_matrix(&self, c: usize) -> [[f64; LOCAL]; LOCAL] {
        let t = tables();
        let mut m = [[0.0; LOCAL]; LOCAL];
        for q in 0..NQ {
            let id = c * NQ + q;
            let w = self.geom.jxw[id];
            let g = self.geom.q2_grads(c, q);
            let n = t.q2[q];
            let (r, nu) = (self.coeff.reaction[id], self.coeff.visc[id]);
            for i in 0..9 {
                for j in 0..9 {
                    let dot = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    let mut same = r * n[i] * n[j] + 0.5 * nu * dot;
                    if let Some(a) = &self.coeff.conv {
                        same += n[i] * (a[id][0] * g[j][0] + a[id][1] * g[j][1]);
                    }
                    if let Some(s) = &self.coeff.stab {
                        let si = s[id][0] * g[i][0] + s[id][1] * g[i][1];
                        let sj = s[id][0] * g[j][0] + s[id][1] * g[j][1];
                        same += si * sj;
                    }
                    for a in 0..2 {
                        for b in 0..2 {
                            let mut e = 0.5 * nu * g[j][a] * g[i][b];
                            if a == b {
                                e += same;
                            }
                            m[9 * a + i][9 * b + j] += w * e;
                        }
                    }
                }
                if self.with_pressure {
                    for k in 0..4 {
                        let mk = t.q1[q][k];
                        for b in 0..2 {
                            m[18 + k][9 * b + i] += w * mk * g[i][b];
                            m[9 * b + i][18 + k] += w * mk * g[i][b];
                        }
                    }
                }
            }
        }
        m
    }

    fn local_indices(&self, c: usize) -> [usize; LOCAL] {
        let d = &self.dofs;
        let mut idx = [usize::MAX; LOCAL];
        for (i, &k) in d.q2_cells[c].iter().enumerate() {
            idx[i] = k;
            idx[9 + i] = d.n_q2 + k;
        }
        if self.with_pressure {
            for (i, &k) in d.q1_cells[c].iter().enumerate() {
                idx[18 + i] = d.n_velocity() + k;
            }
        }
        idx
    }

    /// Sparse matrix of the same operator, constraints included.
    pub fn assemble(&self) -> Result<Csr> {
        let n = self.n();
        if n > ASSEMBLY_LIMIT {
            return Err(FsiError::TooLarge { dofs: n, limit: ASSEMBLY_LIMIT });
        }
        let nl = if self.with_pressure { LOCAL } else { 18 };
        let mut trip = Vec::with_capacity(self.cells.len() * nl * nl);
        for &c in &self.cells {
            let m = self.local_matrix(c);
            let idx = self.local_indices(c);
            for a in 0..nl {
                if self.constrained[idx[a]] {
                    continue;
                }
                for b in 0..nl {
                    if !self.constrained[idx[b]] && m[a][b] != 0.0 {
                        trip.push((idx[a], idx[b], m[a][b]));
                    }
                }
            }
        }
        for (k, &m) in self.constrained.iter().enumerate() {
            if m {
                trip.push((k, k, 1.0));
            }
        }
        Ok(Csr::from_triplets(n, n, &trip))
    }

    /// Divergence block `B` as a sparse matrix (constrained columns and pinned
    /// rows removed).
    pub fn assemble_b(&self) -> Csr {
        let t = tables();
        let d = &self.dofs;
        let vmask = self.velocity_mask();
        let pmask = self.pressure_mask();
        let mut trip = Vec::with_capacity(self.cells.len() * 72);
        for &c in &self.cells {
            let mut loc = [[0.0; 18]; 4];
            for q in 0..NQ {
                let w = self.geom.jxw[c * NQ + q];
                let g = self.geom.q2_grads(c, q);
                for k in 0..4 {
                    for i in 0..9 {
                        loc[k][i] += w * t.q1[q][k] * g[i][0];
                        loc[k][9 + i] += w * t.q1[q][k] * g[i][1];
                    }
                }
            }
            for (k, &pk) in d.q1_cells[c].iter().enumerate() {
                if pmask[pk] {
                    continue;
                }
                for (i, &vi) in d.q2_cells[c].iter().enumerate() {
                    for b in 0..2 {
                        let col = b * d.n_q2 + vi;
                        if !vmask[col] {
                            trip.push((pk, col, loc[k][9 * b + i]));
                        }
                    }
                }
            }
        }
        Csr::from_triplets(d.n_q1, d.n_velocity(), &trip)
    }

    /// Diagonal of `B diag(A)⁻¹ Bᵀ` (1 on pinned pressure entries).
    pub fn schur_diagonal(&self, diag_a: &[f64]) -> Vec<f64> {
        let b = self.assemble_b();
        let pmask = self.pressure_mask();
        (0..b.nrows)
            .map(|r| {
                let s: f64 = (b.indptr[r]..b.indptr[r + 1])
                    .map(|k| b.values[k] * b.values[k] / diag_a[b.indices[k]])
                    .sum();
                if pmask[r] || s == 0.0 {
                    1.0
                } else {
                    s
                }
            })
            .collect()
    }

    pub fn velocity_constrained(&self) -> &[bool] {
        self.velocity_mask()
    }

    pub fn pressure_constrained(&self) -> &[bool] {
        self.pressure_mask()
    }
}
