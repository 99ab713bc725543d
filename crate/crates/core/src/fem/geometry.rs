//! Quadrature-point geometry of the mapped configuration `x = x̂ + u#(x̂)`.

use rayon::prelude::*;

use crate::error::{FsiError, Result};
use crate::fem::basis::{tables, NQ};
use crate::fem::space::DofMap;
use crate::mesh::{bilinear_jacobian, bilinear_point, Mesh};

/// Per-cell, per-quadrature-point Jacobian data, indexed `9 * cell + q`.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    /// Inverse Jacobian `dξ/dx` stored row-major `[ξ0/x0, ξ0/x1, ξ1/x0, ξ1/x1]`.
    pub jinv: Vec<[f64; 4]>,
    pub det: Vec<f64>,
    /// Quadrature weight times `det`.
    pub jxw: Vec<f64>,
    /// Mapped quadrature-point positions.
    pub x: Vec<[f64; 2]>,
    pub min_det: f64,
}

impl CellGeometry {
    /// Geometry of the reference mesh displaced by the vector Q2 field `disp`.
    pub fn new(mesh: &Mesh, dofs: &DofMap, disp: Option<&[f64]>) -> Result<CellGeometry> {
        let t = tables();
        let nc = mesh.num_cells();
        let n2 = dofs.n_q2;
        let per_cell: Vec<[([f64; 4], f64, f64, [f64; 2]); NQ]> = (0..nc)
            .into_par_iter()
            .map(|c| {
                let p = mesh.cell_points(c);
                let mut ux = [0.0; 9];
                let mut uy = [0.0; 9];
                if let Some(u) = disp {
                    for (i, &k) in dofs.q2_cells[c].iter().enumerate() {
                        ux[i] = u[k];
                        uy[i] = u[n2 + k];
                    }
                }
                let mut out = [([0.0; 4], 0.0, 0.0, [0.0; 2]); NQ];
                for q in 0..NQ {
                    let xi = t.points[q];
                    let mut j = bilinear_jacobian(&p, xi);
                    let mut x = bilinear_point(&p, xi);
                    for i in 0..9 {
                        let g = t.q2_grad[q][i];
                        j[0][0] += ux[i] * g[0];
                        j[0][1] += ux[i] * g[1];
                        j[1][0] += uy[i] * g[0];
                        j[1][1] += uy[i] * g[1];
                        x[0] += ux[i] * t.q2[q][i];
                        x[1] += uy[i] * t.q2[q][i];
                    }
                    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                    let inv = [j[1][1] / det, -j[0][1] / det, -j[1][0] / det, j[0][0] / det];
                    out[q] = (inv, det, det * t.weights[q], x);
                }
                out
            })
            .collect();
        let mut g = CellGeometry {
            jinv: Vec::with_capacity(nc * NQ),
            det: Vec::with_capacity(nc * NQ),
            jxw: Vec::with_capacity(nc * NQ),
            x: Vec::with_capacity(nc * NQ),
            min_det: f64::INFINITY,
        };
        let mut worst = (0usize, f64::INFINITY);
        for (c, cell) in per_cell.iter().enumerate() {
            for &(inv, det, jxw, x) in cell {
                if !(det > 0.0) && !(det >= worst.1) {
                    worst = (c, det);
                }
                g.min_det = g.min_det.min(det);
                g.jinv.push(inv);
                g.det.push(det);
                g.jxw.push(jxw);
                g.x.push(x);
            }
        }
        if !(worst.1 > 0.0) {
            return Err(FsiError::MeshTangled { cell: worst.0, det: worst.1 });
        }
        Ok(g)
    }

    pub fn num_cells(&self) -> usize {
        self.det.len() / NQ
    }

    /// Physical gradients of the nine Q2 shape functions at `(cell, q)`.
    #[inline]
    pub fn q2_grads(&self, c: usize, q: usize) -> [[f64; 2]; 9] {
        let t = tables();
        let a = self.jinv[c * NQ + q];
        let mut g = [[0.0; 2]; 9];
        for i in 0..9 {
            let d = t.q2_grad[q][i];
            g[i] = [d[0] * a[0] + d[1] * a[2], d[0] * a[1] + d[1] * a[3]];
        }
        g
    }

    /// Physical gradients of the four Q1 shape functions at `(cell, q)`.
    #[inline]
    pub fn q1_grads(&self, c: usize, q: usize) -> [[f64; 2]; 4] {
        let t = tables();
        let a = self.jinv[c * NQ + q];
        let mut g = [[0.0; 2]; 4];
        for i in 0..4 {
            let d = t.q1_grad[q][i];
            g[i] = [d[0] * a[0] + d[1] * a[2], d[0] * a[1] + d[1] * a[3]];
        }
        g
    }

    /// Values of a vector Q2 field at the quadrature points of cell `c`.
    pub fn vector_values(&self, dofs: &DofMap, field: &[f64], c: usize) -> [[f64; 2]; NQ] {
        let t = tables();
        let n2 = dofs.n_q2;
        let mut out = [[0.0; 2]; NQ];
        for (i, &k) in dofs.q2_cells[c].iter().enumerate() {
            let (fx, fy) = (field[k], field[n2 + k]);
            for q in 0..NQ {
                out[q][0] += t.q2[q][i] * fx;
                out[q][1] += t.q2[q][i] * fy;
            }
        }
        out
    }

    /// Physical gradients `G[a][b] = ∂f_a/∂x_b` of a vector Q2 field at the
    /// quadrature points of cell `c`.
    pub fn vector_grads(&self, dofs: &DofMap, field: &[f64], c: usize) -> [[[f64; 2]; 2]; NQ] {
        let n2 = dofs.n_q2;
        let cell = &dofs.q2_cells[c];
        let mut out = [[[0.0; 2]; 2]; NQ];
        for q in 0..NQ {
            let g = self.q2_grads(c, q);
            for i in 0..9 {
                let (fx, fy) = (field[cell[i]], field[n2 + cell[i]]);
                out[q][0][0] += fx * g[i][0];
                out[q][0][1] += fx * g[i][1];
                out[q][1][0] += fy * g[i][0];
                out[q][1][1] += fy * g[i][1];
            }
        }
        out
    }

    /// Values of a Q1 field at the quadrature points of cell `c`.
    pub fn q1_values(&self, dofs: &DofMap, field: &[f64], c: usize) -> [f64; NQ] {
        let t = tables();
        let mut out = [0.0; NQ];
        for (i, &k) in dofs.q1_cells[c].iter().enumerate() {
            for q in 0..NQ {
                out[q] += t.q1[q][i] * field[k];
            }
        }
        out
    }
}
