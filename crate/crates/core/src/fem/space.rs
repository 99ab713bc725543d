//! Degree-of-freedom numbering for Q2 (velocity-type) and Q1 (pressure)
//! fields and the inter-level transfer operators.
//!
//! Scalar Q2 nodes are numbered vertices, then edges, then cells, so node `k`
//! of a level coincides with vertex `k` of the next finer level. Vector fields
//! are stored component-blocked: `[x-components | y-components]`, and block
//! states append the pressure: `[v_x | v_y | p]`.

use crate::fem::basis::{q1_shape, q2_shape};
use crate::mesh::{bilinear_point, BoundaryTag, Mesh, Subdomain, CHILD_OFFSETS};
use crate::sparse::Csr;

/// Local Q2 node index `(i + 3j)` of each cell vertex, counterclockwise.
pub const Q2_VERTEX_NODES: [usize; 4] = [0, 2, 8, 6];
/// Local Q2 node index of the midpoint of each local edge.
pub const Q2_EDGE_NODES: [usize; 4] = [1, 5, 7, 3];

#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_q2: usize,
    pub n_q1: usize,
    pub q2_cells: Vec<[usize; 9]>,
    pub q1_cells: Vec<[usize; 4]>,
    /// Reference coordinates of the Q2 nodes.
    pub q2_points: Vec<[f64; 2]>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> DofMap {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let nc = mesh.num_cells();
        let mut q2_cells = Vec::with_capacity(nc);
        for c in 0..nc {
            let mut l = [0usize; 9];
            for k in 0..4 {
                l[Q2_VERTEX_NODES[k]] = mesh.cells[c][k];
                l[Q2_EDGE_NODES[k]] = nv + mesh.cell_edges[c][k];
            }
            l[4] = nv + ne + c;
            q2_cells.push(l);
        }
        let mut q2_points = mesh.vertices.clone();
        q2_points.extend((0..ne).map(|e| mesh.edge_midpoint(e)));
        q2_points.extend((0..nc).map(|c| bilinear_point(&mesh.cell_points(c), [0.5, 0.5])));
        DofMap { n_q2: nv + ne + nc, n_q1: nv, q2_cells, q1_cells: mesh.cells.clone(), q2_points }
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_q2
    }

    pub fn n_total(&self) -> usize {
        2 * self.n_q2 + self.n_q1
    }

    /// Scalar Q2 nodes lying on boundary edges with any of the given tags.
    pub fn boundary_nodes(&self, mesh: &Mesh, tags: &[BoundaryTag]) -> Vec<usize> {
        let nv = mesh.num_vertices();
        let mut flag = vec![false; self.n_q2];
        for e in 0..mesh.num_edges() {
            if let Some(t) = mesh.edge_tag[e] {
                if tags.contains(&t) {
                    let [a, b] = mesh.edges[e];
                    flag[a] = true;
                    flag[b] = true;
                    flag[nv + e] = true;
                }
            }
        }
        (0..self.n_q2).filter(|&k| flag[k]).collect()
    }

    /// Marks scalar Q2 nodes belonging to at least one cell of the subdomain.
    pub fn subdomain_nodes(&self, mesh: &Mesh, tag: Subdomain) -> Vec<bool> {
        let mut flag = vec![false; self.n_q2];
        for c in 0..mesh.num_cells() {
            if mesh.subdomain[c] == tag {
                for &k in &self.q2_cells[c] {
                    flag[k] = true;
                }
            }
        }
        flag
    }

    /// Marks Q1 nodes belonging to at least one cell of the subdomain.
    pub fn subdomain_q1_nodes(&self, mesh: &Mesh, tag: Subdomain) -> Vec<bool> {
        let mut flag = vec![false; self.n_q1];
        for c in 0..mesh.num_cells() {
            if mesh.subdomain[c] == tag {
                for &k in &self.q1_cells[c] {
                    flag[k] = true;
                }
            }
        }
        flag
    }

    /// Nodal interpolation of a vector function into a component-blocked Q2 field.
    pub fn interpolate_vector(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.n_q2];
        for (k, &p) in self.q2_points.iter().enumerate() {
            let v = f(p);
            out[k] = v[0];
            out[self.n_q2 + k] = v[1];
        }
        out
    }

    /// Nodal interpolation of a scalar function into a Q1 field.
    pub fn interpolate_q1(&self, mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        mesh.vertices.iter().map(|&p| f(p)).collect()
    }

    /// Value of a vector Q2 field at parametric point `xi` of cell `c`.
    pub fn eval_vector(&self, field: &[f64], c: usize, xi: [f64; 2]) -> [f64; 2] {
        let (n, _) = q2_shape(xi);
        let mut v = [0.0; 2];
        for (i, &k) in self.q2_cells[c].iter().enumerate() {
            v[0] += n[i] * field[k];
            v[1] += n[i] * field[self.n_q2 + k];
        }
        v
    }

    /// Value of a Q1 field at parametric point `xi` of cell `c`.
    pub fn eval_q1(&self, field: &[f64], c: usize, xi: [f64; 2]) -> f64 {
        let (n, _) = q1_shape(xi);
        self.q1_cells[c].iter().enumerate().map(|(i, &k)| n[i] * field[k]).sum()
    }
}

/// Prolongation matrices from a coarse level to the next finer one. The
/// transfer is defined in parametric coordinates, so it is exact for nested
/// spaces and ignores the small perturbation introduced by boundary snapping.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub q2: Csr,
    pub q2_t: Csr,
    pub q1: Csr,
    pub q1_t: Csr,
}

fn push_row(trip: &mut Vec<(usize, usize, f64)>, row: usize, cols: &[usize], w: &[f64]) {
    for (&c, &v) in cols.iter().zip(w) {
        if v.abs() > 1e-14 {
            trip.push((row, c, v));
        }
    }
}

impl Transfer {
    pub fn new(coarse: &DofMap, fine: &DofMap) -> Transfer {
        let nc = coarse.q2_cells.len();
        let mut seen2 = vec![false; fine.n_q2];
        let mut seen1 = vec![false; fine.n_q1];
        let (mut t2, mut t1) = (Vec::new(), Vec::new());
        for c in 0..nc {
            for (k, off) in CHILD_OFFSETS.iter().enumerate() {
                let f = 4 * c + k;
                for j in 0..3 {
                    for i in 0..3 {
                        let node = fine.q2_cells[f][i + 3 * j];
                        if seen2[node] {
                            continue;
                        }
                        seen2[node] = true;
                        let xi = [off[0] + 0.25 * i as f64, off[1] + 0.25 * j as f64];
                        push_row(&mut t2, node, &coarse.q2_cells[c], &q2_shape(xi).0);
                    }
                }
                for (v, corner) in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]].iter().enumerate() {
                    let node = fine.q1_cells[f][v];
                    if seen1[node] {
                        continue;
                    }
                    seen1[node] = true;
                    let xi = [off[0] + 0.5 * corner[0], off[1] + 0.5 * corner[1]];
                    push_row(&mut t1, node, &coarse.q1_cells[c], &q1_shape(xi).0);
                }
            }
        }
        let q2 = Csr::from_triplets(fine.n_q2, coarse.n_q2, &t2);
        let q1 = Csr::from_triplets(fine.n_q1, coarse.n_q1, &t1);
        Transfer { q2_t: q2.transpose(), q1_t: q1.transpose(), q2, q1 }
    }

    /// Prolongate a block vector `[v_x | v_y | p]` (pressure optional).
    pub fn prolongate(&self, coarse: &[f64], fine: &mut [f64], with_pressure: bool) {
        let (nc, nf) = (self.q2.ncols, self.q2.nrows);
        self.q2.matvec(&coarse[..nc], &mut fine[..nf]);
        self.q2.matvec(&coarse[nc..2 * nc], &mut fine[nf..2 * nf]);
        if with_pressure {
            self.q1.matvec(&coarse[2 * nc..], &mut fine[2 * nf..]);
        }
    }

    /// Transpose of [`Transfer::prolongate`].
    pub fn restrict(&self, fine: &[f64], coarse: &mut [f64], with_pressure: bool) {
        let (nc, nf) = (self.q2.ncols, self.q2.nrows);
        self.q2_t.matvec(&fine[..nf], &mut coarse[..nc]);
        self.q2_t.matvec(&fine[nf..2 * nf], &mut coarse[nc..2 * nc]);
        if with_pressure {
            self.q1_t.matvec(&fine[2 * nf..], &mut coarse[2 * nc..]);
        }
    }
}

/// Injection of a component-blocked vector Q2 field onto the next coarser level.
pub fn inject_vector(fine: &[f64], n_fine: usize, n_coarse: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n_coarse);
    out.extend_from_slice(&fine[..n_coarse]);
    out.extend_from_slice(&fine[n_fine..n_fine + n_coarse]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_turek_coarse, GeometryParams, MeshHierarchy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_on_unit_square() {
        let m = Mesh::unit_square(1).unwrap();
        let d = DofMap::new(&m);
        assert_eq!((d.n_q2, d.n_q1), (9, 4));
        let d = DofMap::new(&m.refine().unwrap());
        assert_eq!(d.n_velocity(), 50);
    }

    #[test]
    fn q2_nodes_sit_at_their_points() {
        let m = Mesh::rectangle(3, 2, [0.0, 0.0], [1.5, 1.0], |_| false).unwrap();
        let d = DofMap::new(&m);
        for c in 0..m.num_cells() {
            let p = m.cell_points(c);
            for j in 0..3 {
                for i in 0..3 {
                    let x = bilinear_point(&p, [i as f64 / 2.0, j as f64 / 2.0]);
                    let y = d.q2_points[d.q2_cells[c][i + 3 * j]];
                    assert!((x[0] - y[0]).abs() + (x[1] - y[1]).abs() < 1e-14);
                }
            }
        }
    }

    fn check_transfer(h: &MeshHierarchy) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in 1..h.num_levels() {
            let dc = DofMap::new(&h.levels[l - 1]);
            let df = DofMap::new(&h.levels[l]);
            let t = Transfer::new(&dc, &df);
            let x: Vec<f64> = (0..dc.n_total()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let y: Vec<f64> = (0..df.n_total()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mut px = vec![0.0; df.n_total()];
            let mut ry = vec![0.0; dc.n_total()];
            t.prolongate(&x, &mut px, true);
            t.restrict(&y, &mut ry, true);
            let a: f64 = px.iter().zip(&y).map(|(a, b)| a * b).sum();
            let b: f64 = x.iter().zip(&ry).map(|(a, b)| a * b).sum();
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            // constants and linears are reproduced
            let lin = |p: [f64; 2]| [1.0 + 2.0 * p[0] - p[1], -0.5 + p[1]];
            let xc = dc.interpolate_vector(lin);
            let mut xf = vec![0.0; df.n_velocity()];
            t.prolongate(&xc, &mut xf, false);
            let exact = df.interpolate_vector(lin);
            let snapped = h.levels[l].tagged_vertices(BoundaryTag::Cylinder).len();
            if snapped == 0 {
                for (a, b) in xf.iter().zip(&exact) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            // injection is the left inverse of prolongation
            let back = inject_vector(&xf, df.n_q2, dc.n_q2);
            for (a, b) in back.iter().zip(&xc) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn transfer_on_structured_and_turek_meshes() {
        check_transfer(&MeshHierarchy::new(Mesh::unit_square(2).unwrap(), 2).unwrap());
        check_transfer(&MeshHierarchy::new(build_turek_coarse(&GeometryParams::turek()).unwrap(), 2).unwrap());
    }
}
