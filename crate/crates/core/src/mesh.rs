//! Quadrilateral meshes of the reference domain and their uniform refinement.
//!
//! Cells are stored counterclockwise `[v0, v1, v2, v3]` and mapped bilinearly
//! from the unit square with `v0 = (0,0)`, `v1 = (1,0)`, `v2 = (1,1)`, `v3 = (0,1)`.
//! Local edge `k` joins `v_k` and `v_{k+1}`.
//!
//! Refinement numbers the fine vertices as: coarse vertices, then one midpoint
//! per coarse edge, then one center per coarse cell. Fine cell `4c + k` is the
//! child of coarse cell `c` occupying the quarter with lower-left parametric
//! corner `CHILD_OFFSETS[k]`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{FsiError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Fluid,
    Solid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Inflow,
    Outflow,
    Walls,
    Cylinder,
}

/// Parametric lower-left corner of each child inside its parent cell.
pub const CHILD_OFFSETS: [[f64; 2]; 4] = [[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

/// Dimensions of the channel, cylinder and elastic beam.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryParams {
    pub channel_length: f64,
    pub channel_height: f64,
    pub beam_length: f64,
    pub beam_height: f64,
    pub cylinder_center: [f64; 2],
    pub cylinder_radius: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self::turek()
    }
}

impl GeometryParams {
    pub fn turek() -> Self {
        GeometryParams {
            channel_length: 2.5,
            channel_height: 0.41,
            beam_length: 0.35,
            beam_height: 0.02,
            cylinder_center: [0.2, 0.2],
            cylinder_radius: 0.05,
        }
    }

    /// Half width of the square box enclosing the cylinder ring.
    fn box_half_width(&self) -> f64 {
        2.0 * self.cylinder_radius
    }

    /// x-coordinate where the beam's lower and upper faces meet the cylinder.
    pub fn beam_start_x(&self) -> f64 {
        let r = self.cylinder_radius;
        let hh = 0.5 * self.beam_height;
        self.cylinder_center[0] + (r * r - hh * hh).sqrt()
    }

    /// Midpoint of the beam's free end.
    pub fn beam_tip(&self) -> [f64; 2] {
        [
            self.cylinder_center[0] + self.cylinder_radius + self.beam_length,
            self.cylinder_center[1],
        ]
    }

    /// Exact area of the beam, including the sliver between the cylinder and
    /// the vertical line through its rightmost point.
    pub fn solid_area(&self) -> f64 {
        let r = self.cylinder_radius;
        let h = self.beam_height;
        let hh = 0.5 * h;
        let cap = hh * (r * r - hh * hh).sqrt() + r * r * (hh / r).asin();
        h * (r + self.beam_length) - cap
    }

    pub fn validate(&self) -> Result<()> {
        let g = self;
        let vals = [
            ("channel_length", g.channel_length),
            ("channel_height", g.channel_height),
            ("beam_length", g.beam_length),
            ("beam_height", g.beam_height),
            ("cylinder_radius", g.cylinder_radius),
            ("cylinder_center.x", g.cylinder_center[0]),
            ("cylinder_center.y", g.cylinder_center[1]),
        ];
        for (name, v) in vals {
            if !(v.is_finite() && v > 0.0) {
                return Err(FsiError::Config(format!("geometry.{name} must be positive, got {v}")));
            }
        }
        let [cx, cy] = g.cylinder_center;
        let r = g.cylinder_radius;
        let b = g.box_half_width();
        if g.beam_height >= 2.0 * r {
            return Err(FsiError::Config(
                "beam height must be smaller than the cylinder diameter".into(),
            ));
        }
        if cx - b <= 0.0 || cy - b <= 0.0 || cy + b >= g.channel_height {
            return Err(FsiError::Config(
                "cylinder too close to the channel walls (need a clearance of one radius)".into(),
            ));
        }
        if g.beam_length <= r {
            return Err(FsiError::Config("beam length must exceed the cylinder radius".into()));
        }
        if g.beam_tip()[0] >= g.channel_length {
            return Err(FsiError::Config("beam does not fit inside the channel".into()));
        }
        Ok(())
    }
}

/// A conforming quadrilateral mesh with subdomain and boundary tags.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 4]>,
    pub subdomain: Vec<Subdomain>,
    /// Unique edges as `[a, b]` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    pub cell_edges: Vec<[usize; 4]>,
    pub edge_cells: Vec<[Option<usize>; 2]>,
    pub edge_tag: Vec<Option<BoundaryTag>>,
    /// Circle onto which Cylinder-tagged vertices are projected.
    pub circle: Option<([f64; 2], f64)>,
}

fn build_edges(cells: &[[usize; 4]]) -> (Vec<[usize; 2]>, Vec<[usize; 4]>, Vec<[Option<usize>; 2]>) {
    let mut map: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2 + 4);
    let mut edges = Vec::new();
    let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
    let mut cell_edges = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut ce = [0usize; 4];
        for k in 0..4 {
            let a = cell[k];
            let b = cell[(k + 1) % 4];
            let key = if a < b { [a, b] } else { [b, a] };
            let id = *map.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_cells.push([None, None]);
                edges.len() - 1
            });
            if edge_cells[id][0].is_none() {
                edge_cells[id][0] = Some(c);
            } else {
                edge_cells[id][1] = Some(c);
            }
            ce[k] = id;
        }
        cell_edges.push(ce);
    }
    (edges, cell_edges, edge_cells)
}

/// Bilinear map of a cell evaluated at parametric point `xi`.
pub fn bilinear_point(p: &[[f64; 2]; 4], xi: [f64; 2]) -> [f64; 2] {
    let (s, t) = (xi[0], xi[1]);
    let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
    let mut x = [0.0; 2];
    for k in 0..4 {
        x[0] += w[k] * p[k][0];
        x[1] += w[k] * p[k][1];
    }
    x
}

/// Jacobian `dx/dxi` of the bilinear map, columns are the parametric directions.
pub fn bilinear_jacobian(p: &[[f64; 2]; 4], xi: [f64; 2]) -> [[f64; 2]; 2] {
    let (s, t) = (xi[0], xi[1]);
    let ds = [-(1.0 - t), 1.0 - t, t, -t];
    let dt = [-(1.0 - s), -s, s, 1.0 - s];
    let mut j = [[0.0; 2]; 2];
    for k in 0..4 {
        for d in 0..2 {
            j[d][0] += ds[k] * p[k][d];
            j[d][1] += dt[k] * p[k][d];
        }
    }
    j
}

impl Mesh {
    /// Assemble a mesh from raw connectivity, deriving edges and validating orientation.
    pub fn from_cells(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 4]>,
        subdomain: Vec<Subdomain>,
        circle: Option<([f64; 2], f64)>,
    ) -> Result<Mesh> {
        if subdomain.len() != cells.len() {
            return Err(FsiError::DimensionMismatch { expected: cells.len(), got: subdomain.len() });
        }
        let (edges, cell_edges, edge_cells) = build_edges(&cells);
        let ne = edges.len();
        let mesh = Mesh {
            vertices,
            cells,
            subdomain,
            edges,
            cell_edges,
            edge_cells,
            edge_tag: vec![None; ne],
            circle,
        };
        mesh.check_orientation()?;
        Ok(mesh)
    }

    /// Structured `nx × ny` mesh of the rectangle `[lo, hi]`. Left side is
    /// Inflow, right side Outflow, bottom and top Walls. Cells whose center
    /// satisfies `is_solid` are tagged Solid.
    pub fn rectangle(
        nx: usize,
        ny: usize,
        lo: [f64; 2],
        hi: [f64; 2],
        is_solid: impl Fn([f64; 2]) -> bool,
    ) -> Result<Mesh> {
        if nx == 0 || ny == 0 || !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(FsiError::Config("degenerate rectangle mesh".into()));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
                ]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(nx * ny);
        let mut subdomain = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let cell = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)];
                let c = cell.map(|v| vertices[v]);
                let center = bilinear_point(&c, [0.5, 0.5]);
                subdomain.push(if is_solid(center) { Subdomain::Solid } else { Subdomain::Fluid });
                cells.push(cell);
            }
        }
        let mut mesh = Mesh::from_cells(vertices, cells, subdomain, None)?;
        let eps = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        for e in 0..mesh.edges.len() {
            if mesh.edge_cells[e][1].is_some() {
                continue;
            }
            let m = mesh.edge_midpoint(e);
            mesh.edge_tag[e] = Some(if (m[0] - lo[0]).abs() < eps {
                BoundaryTag::Inflow
            } else if (m[0] - hi[0]).abs() < eps {
                BoundaryTag::Outflow
            } else {
                BoundaryTag::Walls
            });
        }
        Ok(mesh)
    }

    /// Unit square split into `n × n` fluid cells.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        Mesh::rectangle(n, n, [0.0, 0.0], [1.0, 1.0], |_| false)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_points(&self, c: usize) -> [[f64; 2]; 4] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_cells[e][1].is_none()
    }

    /// Edges shared by one fluid and one solid cell.
    pub fn interface_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| match self.edge_cells[e] {
                [Some(a), Some(b)] => self.subdomain[a] != self.subdomain[b],
                _ => false,
            })
            .collect()
    }

    /// Largest vertex-to-vertex distance of cell `c`, optionally displaced by
    /// a per-vertex offset.
    pub fn cell_diameter(&self, c: usize, displacement: Option<&[[f64; 2]]>) -> f64 {
        let mut p = self.cell_points(c);
        if let Some(d) = displacement {
            for k in 0..4 {
                let v = self.cells[c][k];
                p[k][0] += d[v][0];
                p[k][1] += d[v][1];
            }
        }
        let mut best: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                best = best.max((p[a][0] - p[b][0]).hypot(p[a][1] - p[b][1]));
            }
        }
        best
    }

    /// Signed area of cell `c` (shoelace formula, exact for bilinear quads).
    pub fn cell_area(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut a = 0.0;
        for k in 0..4 {
            let q = p[(k + 1) % 4];
            a += p[k][0] * q[1] - q[0] * p[k][1];
        }
        0.5 * a
    }

    pub fn subdomain_area(&self, tag: Subdomain) -> f64 {
        (0..self.cells.len())
            .filter(|&c| self.subdomain[c] == tag)
            .map(|c| self.cell_area(c))
            .sum()
    }

    fn check_orientation(&self) -> Result<()> {
        for c in 0..self.cells.len() {
            let p = self.cell_points(c);
            for xi in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]] {
                let j = bilinear_jacobian(&p, xi);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if !(det > 0.0) {
                    return Err(FsiError::MeshTangled { cell: c, det });
                }
            }
        }
        Ok(())
    }

    fn snap(&self, p: [f64; 2]) -> [f64; 2] {
        match self.circle {
            Some((c, r)) => {
                let d = [p[0] - c[0], p[1] - c[1]];
                let n = d[0].hypot(d[1]);
                [c[0] + r * d[0] / n, c[1] + r * d[1] / n]
            }
            None => p,
        }
    }

    /// Uniform 1-to-4 refinement; new vertices on Cylinder edges are projected
    /// radially onto the cylinder circle.
    pub fn refine(&self) -> Result<Mesh> {
        let nv = self.vertices.len();
        let ne = self.edges.len();
        let mut vertices = Vec::with_capacity(nv + ne + self.cells.len());
        vertices.extend_from_slice(&self.vertices);
        for e in 0..ne {
            let m = self.edge_midpoint(e);
            vertices.push(if self.edge_tag[e] == Some(BoundaryTag::Cylinder) { self.snap(m) } else { m });
        }
        for c in 0..self.cells.len() {
            vertices.push(bilinear_point(&self.cell_points(c), [0.5, 0.5]));
        }
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        let mut subdomain = Vec::with_capacity(4 * self.cells.len());
        for (c, v) in self.cells.iter().enumerate() {
            let m = self.cell_edges[c].map(|e| nv + e);
            let z = nv + ne + c;
            cells.push([v[0], m[0], z, m[3]]);
            cells.push([m[0], v[1], m[1], z]);
            cells.push([z, m[1], v[2], m[2]]);
            cells.push([m[3], z, m[2], v[3]]);
            subdomain.extend_from_slice(&[self.subdomain[c]; 4]);
        }
        let mut fine = Mesh::from_cells(vertices, cells, subdomain, self.circle)?;
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(fine.edges.len());
        for (id, e) in fine.edges.iter().enumerate() {
            lookup.insert(*e, id);
        }
        for e in 0..ne {
            if let Some(tag) = self.edge_tag[e] {
                let [a, b] = self.edges[e];
                let m = nv + e;
                for (x, y) in [(a, m), (m, b)] {
                    let key = if x < y { [x, y] } else { [y, x] };
                    fine.edge_tag[lookup[&key]] = Some(tag);
                }
            }
        }
        Ok(fine)
    }

    /// Vertices touching at least one edge with the given tag.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut flag = vec![false; self.vertices.len()];
        for (e, t) in self.edge_tag.iter().enumerate() {
            if *t == Some(tag) {
                flag[self.edges[e][0]] = true;
                flag[self.edges[e][1]] = true;
            }
        }
        (0..flag.len()).filter(|&v| flag[v]).collect()
    }

    /// Find a cell containing `x` and the parametric coordinates of `x` in it.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let tol = 1e-10;
        for c in 0..self.cells.len() {
            let p = self.cell_points(c);
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for q in &p {
                for d in 0..2 {
                    lo[d] = lo[d].min(q[d]);
                    hi[d] = hi[d].max(q[d]);
                }
            }
            let pad = 1e-9 * (hi[0] - lo[0] + hi[1] - lo[1]);
            if x[0] < lo[0] - pad || x[0] > hi[0] + pad || x[1] < lo[1] - pad || x[1] > hi[1] + pad {
                continue;
            }
            let mut xi = [0.5, 0.5];
            for _ in 0..50 {
                let f = bilinear_point(&p, xi);
                let r = [f[0] - x[0], f[1] - x[1]];
                let j = bilinear_jacobian(&p, xi);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let dxi = [
                    (j[1][1] * r[0] - j[0][1] * r[1]) / det,
                    (-j[1][0] * r[0] + j[0][0] * r[1]) / det,
                ];
                xi[0] -= dxi[0];
                xi[1] -= dxi[1];
                if dxi[0].abs() + dxi[1].abs() < 1e-15 {
                    break;
                }
            }
            if xi.iter().all(|&s| s > -tol && s < 1.0 + tol) {
                return Some((c, [xi[0].clamp(0.0, 1.0), xi[1].clamp(0.0, 1.0)]));
            }
        }
        None
    }

    /// Plain-text dump: vertex lines `x y`, then cell lines `v0 v1 v2 v3 tag`.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {}", v[0], v[1]);
        }
        let _ = writeln!(s, "# cells {}", self.cells.len());
        for (c, v) in self.cells.iter().enumerate() {
            let tag = match self.subdomain[c] {
                Subdomain::Fluid => "fluid",
                Subdomain::Solid => "solid",
            };
            let _ = writeln!(s, "{} {} {} {} {}", v[0], v[1], v[2], v[3], tag);
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
enum Curve {
    Line([f64; 2], [f64; 2]),
    Arc { center: [f64; 2], radius: f64, a0: f64, a1: f64 },
}

impl Curve {
    fn at(&self, s: f64) -> [f64; 2] {
        match *self {
            Curve::Line(a, b) => [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s],
            Curve::Arc { center, radius, a0, a1 } => {
                let th = a0 + (a1 - a0) * s;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }
}

/// A block mapped by transfinite interpolation from four boundary curves.
/// `bottom`/`top` run in the i-direction, `left`/`right` in the j-direction.
struct Block {
    bottom: Curve,
    top: Curve,
    left: Curve,
    right: Curve,
    ni: usize,
    nj: usize,
    /// Geometric growth ratio of cell widths along i (1 = uniform).
    grading: f64,
    tag: Subdomain,
}

fn graded(i: usize, n: usize, q: f64) -> f64 {
    if (q - 1.0).abs() < 1e-14 {
        i as f64 / n as f64
    } else {
        (q.powi(i as i32) - 1.0) / (q.powi(n as i32) - 1.0)
    }
}

impl Block {
    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let s = graded(i, self.ni, self.grading);
        let t = j as f64 / self.nj as f64;
        if j == 0 {
            return self.bottom.at(s);
        }
        if j == self.nj {
            return self.top.at(s);
        }
        if i == 0 {
            return self.left.at(t);
        }
        if i == self.ni {
            return self.right.at(t);
        }
        let (b, tp, l, r) = (self.bottom.at(s), self.top.at(s), self.left.at(t), self.right.at(t));
        let (p00, p10, p11, p01) = (self.bottom.at(0.0), self.bottom.at(1.0), self.top.at(1.0), self.top.at(0.0));
        let mut x = [0.0; 2];
        for d in 0..2 {
            x[d] = (1.0 - t) * b[d] + t * tp[d] + (1.0 - s) * l[d] + s * r[d]
                - ((1.0 - s) * (1.0 - t) * p00[d] + s * (1.0 - t) * p10[d] + s * t * p11[d] + (1.0 - s) * t * p01[d]);
        }
        x
    }
}

fn count(len: f64, spacing: f64) -> usize {
    ((len / spacing).round() as usize).max(1)
}

/// Growth ratio `q ≥ 1` such that `n` cells starting at width `first` span `len`.
fn growth_ratio(first: f64, len: f64, n: usize) -> f64 {
    let span = |q: f64| if (q - 1.0).abs() < 1e-14 { first * n as f64 } else { first * (q.powi(n as i32) - 1.0) / (q - 1.0) };
    if span(1.0) >= len {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while span(hi) < len {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if span(mid) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Block-structured coarse mesh of the channel with the cylinder cut out and
/// the beam meshed as solid cells.
/// Largest cell-to-cell growth downstream of the beam.
const GROWTH: f64 = 1.1;

pub fn build_turek_coarse(g: &GeometryParams) -> Result<Mesh> {
    g.validate()?;
    let [cx, cy] = g.cylinder_center;
    let r = g.cylinder_radius;
    let b = g.box_half_width();
    let hh = 0.5 * g.beam_height;
    let d = 0.5 * b;
    let (len, height) = (g.channel_length, g.channel_height);
    let x = [0.0, cx - b, cx + b, g.beam_tip()[0], len];
    let y = [0.0, cy - b, cy - hh, cy + hh, cy + b, height];
    let alpha = (hh / r).asin();
    let deg = std::f64::consts::PI / 180.0;
    let arc = |a0: f64, a1: f64| Curve::Arc { center: [cx, cy], radius: r, a0, a1 };
    let on = |th: f64| [cx + r * th.cos(), cy + r * th.sin()];
    let line = |a: [f64; 2], b: [f64; 2]| Curve::Line(a, b);

    let nx = [count(x[1], d), 4, count(x[3] - x[2], d)];
    let ndown = {
        let mut n = 1;
        while d * (GROWTH.powi(n as i32) - 1.0) / (GROWTH - 1.0) < x[4] - x[3] {
            n += 1;
        }
        n
    };
    let qdown = growth_ratio(d, x[4] - x[3], ndown);
    let ny_low = count(y[1], d);
    let ny_band = count(b - hh, d);
    let ny_high = count(y[5] - y[4], d);
    let nr = 2;

    let mut blocks: Vec<Block> = Vec::new();
    let rect = |x0: f64, x1: f64, y0: f64, y1: f64, ni: usize, nj: usize, q: f64, tag: Subdomain| Block {
        bottom: line([x0, y0], [x1, y0]),
        top: line([x0, y1], [x1, y1]),
        left: line([x0, y0], [x0, y1]),
        right: line([x1, y0], [x1, y1]),
        ni,
        nj,
        grading: q,
        tag,
    };
    let fl = Subdomain::Fluid;
    // bottom and top strips
    // downstream rows fan out to uniform spacing at the outflow
    let rows = [ny_low, ny_band, 1, ny_band, ny_high];
    let total: usize = rows.iter().sum();
    let out_y: Vec<f64> = (0..=rows.len()).map(|k| height * rows[..k].iter().sum::<usize>() as f64 / total as f64).collect();
    let wake = |k: usize| Block {
        bottom: line([x[3], y[k]], [x[4], out_y[k]]),
        top: line([x[3], y[k + 1]], [x[4], out_y[k + 1]]),
        left: line([x[3], y[k]], [x[3], y[k + 1]]),
        right: line([x[4], out_y[k]], [x[4], out_y[k + 1]]),
        ni: ndown,
        nj: rows[k],
        grading: qdown,
        tag: fl,
    };
    for k in 0..rows.len() {
        blocks.push(wake(k));
    }
    for (y0, y1, nj) in [(y[0], y[1], ny_low), (y[4], y[5], ny_high)] {
        blocks.push(rect(x[0], x[1], y0, y1, nx[0], nj, 1.0, fl));
        blocks.push(rect(x[1], x[2], y0, y1, nx[1], nj, 1.0, fl));
        blocks.push(rect(x[2], x[3], y0, y1, nx[2], nj, 1.0, fl));
    }
    // upstream of the cylinder box
    blocks.push(rect(x[0], x[1], y[1], y[4], nx[0], nx[1], 1.0, fl));
    // bands beside the beam and behind it
    let bands = [(y[1], y[2], ny_band, fl), (y[2], y[3], 1, Subdomain::Solid), (y[3], y[4], ny_band, fl)];
    for &(y0, y1, nj, tag) in &bands {
        blocks.push(rect(x[2], x[3], y0, y1, nx[2], nj, 1.0, tag));
    }
    // O-grid ring: bottom, top and left blocks run from the box (j = 0) to the circle
    let ring = |p00: [f64; 2], p10: [f64; 2], a0: f64, a1: f64, ni: usize| Block {
        bottom: line(p00, p10),
        top: arc(a0, a1),
        left: line(p00, on(a0)),
        right: line(p10, on(a1)),
        ni,
        nj: nr,
        grading: 1.0,
        tag: fl,
    };
    blocks.push(ring([x[1], y[1]], [x[2], y[1]], 225.0 * deg, 315.0 * deg, nx[1]));
    blocks.push(ring([x[2], y[4]], [x[1], y[4]], 45.0 * deg, 135.0 * deg, nx[1]));
    blocks.push(ring([x[1], y[4]], [x[1], y[1]], 135.0 * deg, 225.0 * deg, nx[1]));
    // right ring: i runs outward from the circle to the box side
    let right = |a0: f64, a1: f64, y0: f64, y1: f64, nj: usize, tag: Subdomain| Block {
        bottom: line(on(a0), [x[2], y0]),
        top: line(on(a1), [x[2], y1]),
        left: arc(a0, a1),
        right: line([x[2], y0], [x[2], y1]),
        ni: nr,
        nj,
        grading: 1.0,
        tag,
    };
    blocks.push(right(-45.0 * deg, -alpha, y[1], y[2], ny_band, fl));
    blocks.push(right(-alpha, alpha, y[2], y[3], 1, Subdomain::Solid));
    blocks.push(right(alpha, 45.0 * deg, y[3], y[4], ny_band, fl));

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let tol = 1e-10 * len.max(height);
    let mut find_or_add = |p: [f64; 2]| -> usize {
        for (k, q) in vertices.iter().enumerate() {
            if (q[0] - p[0]).abs() < tol && (q[1] - p[1]).abs() < tol {
                return k;
            }
        }
        vertices.push(p);
        vertices.len() - 1
    };
    let mut cells = Vec::new();
    let mut subdomain = Vec::new();
    for blk in &blocks {
        let mut ids = vec![0usize; (blk.ni + 1) * (blk.nj + 1)];
        for j in 0..=blk.nj {
            for i in 0..=blk.ni {
                ids[j * (blk.ni + 1) + i] = find_or_add(blk.point(i, j));
            }
        }
        let id = |i: usize, j: usize| ids[j * (blk.ni + 1) + i];
        for j in 0..blk.nj {
            for i in 0..blk.ni {
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                subdomain.push(blk.tag);
            }
        }
    }

    let circle = ([cx, cy], r);
    let mut mesh = Mesh::from_cells(vertices, cells, subdomain, Some(circle))?;
    let eps = 1e-9 * len.max(height);
    let on_circle = |p: [f64; 2]| ((p[0] - cx).hypot(p[1] - cy) - r).abs() < eps;
    for e in 0..mesh.edges.len() {
        if !mesh.is_boundary_edge(e) {
            continue;
        }
        let [a, bb] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[bb]);
        let m = mesh.edge_midpoint(e);
        let tag = if m[0].abs() < eps {
            BoundaryTag::Inflow
        } else if (m[0] - len).abs() < eps {
            BoundaryTag::Outflow
        } else if m[1].abs() < eps || (m[1] - height).abs() < eps {
            BoundaryTag::Walls
        } else if on_circle(pa) && on_circle(pb) {
            BoundaryTag::Cylinder
        } else {
            return Err(FsiError::Config(format!(
                "coarse mesh has an unclassified boundary edge at ({}, {})",
                m[0], m[1]
            )));
        };
        mesh.edge_tag[e] = Some(tag);
    }
    for v in mesh.tagged_vertices(BoundaryTag::Cylinder) {
        mesh.vertices[v] = mesh.snap(mesh.vertices[v]);
    }
    Ok(mesh)
}

/// Nested family of uniformly refined meshes `T_0 ⊂ … ⊂ T_J`.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub levels: Vec<Mesh>,
}

impl MeshHierarchy {
    pub fn new(coarse: Mesh, refinements: usize) -> Result<MeshHierarchy> {
        let mut levels = vec![coarse];
        for _ in 0..refinements {
            let fine = levels.last().unwrap().refine()?;
            levels.push(fine);
        }
        Ok(MeshHierarchy { levels })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Mesh {
        self.levels.last().unwrap()
    }

    pub fn parent(&self, fine_cell: usize) -> usize {
        fine_cell / 4
    }

    pub fn children(&self, coarse_cell: usize) -> [usize; 4] {
        [0, 1, 2, 3].map(|k| 4 * coarse_cell + k)
    }

    pub fn interface_edges(&self, level: usize) -> Vec<usize> {
        self.levels[level].interface_edges()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_single_cell() {
        let m = Mesh::unit_square(1).unwrap();
        let f = m.refine().unwrap();
        assert_eq!(f.num_cells(), 4);
        assert_eq!(f.num_vertices(), 9);
        assert_eq!(f.vertices[4 + 4], [0.5, 0.5]);
        let inflow = (0..f.num_edges()).filter(|&e| f.edge_tag[e] == Some(BoundaryTag::Inflow)).count();
        assert_eq!(inflow, 2);
    }

    #[test]
    fn diameters() {
        let m = Mesh::unit_square(1).unwrap();
        assert!((m.cell_diameter(0, None) - 2f64.sqrt()).abs() < 1e-15);
        let r = Mesh::rectangle(1, 1, [0.0, 0.0], [3.0, 4.0], |_| false).unwrap();
        assert!((r.cell_diameter(0, None) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn turek_coarse_is_valid() {
        let g = GeometryParams::turek();
        let m = build_turek_coarse(&g).unwrap();
        assert!(m.num_cells() >= 50 && m.num_cells() <= 300, "{}", m.num_cells());
        for c in 0..m.num_cells() {
            assert!(m.cell_area(c) > 0.0);
        }
        // every interior edge has two cells, every boundary edge is tagged
        for e in 0..m.num_edges() {
            assert_eq!(m.is_boundary_edge(e), m.edge_tag[e].is_some());
        }
        let total = m.subdomain_area(Subdomain::Fluid) + m.subdomain_area(Subdomain::Solid);
        let r = g.cylinder_radius;
        let hole_poly = total - (g.channel_length * g.channel_height - std::f64::consts::PI * r * r);
        assert!(hole_poly > 0.0 && hole_poly < 1e-3);
    }

    #[test]
    fn solid_area_matches_chord_corrected_value() {
        let g = GeometryParams::turek();
        let r = g.cylinder_radius;
        let alpha = (0.5 * g.beam_height / r).asin();
        let h = MeshHierarchy::new(build_turek_coarse(&g).unwrap(), 3).unwrap();
        for (j, m) in h.levels.iter().enumerate() {
            let n = 1usize << j;
            let th = 2.0 * alpha / n as f64;
            let segments = n as f64 * 0.5 * r * r * (th - th.sin());
            let a = m.subdomain_area(Subdomain::Solid);
            assert!((a - (g.solid_area() + segments)).abs() < 1e-13, "level {j}: {a}");
        }
        assert!((g.solid_area() - 0.007).abs() < 2e-5);
    }

    #[test]
    fn hierarchy_invariants() {
        let h = MeshHierarchy::new(build_turek_coarse(&GeometryParams::turek()).unwrap(), 3).unwrap();
        let c0 = h.levels[0].num_cells();
        let (cx, cy, r) = (0.2, 0.2, 0.05);
        for j in 0..h.num_levels() {
            let m = &h.levels[j];
            assert_eq!(m.num_cells(), c0 << (2 * j));
            for v in m.tagged_vertices(BoundaryTag::Cylinder) {
                let p = m.vertices[v];
                assert!(((p[0] - cx).hypot(p[1] - cy) - r).abs() < 1e-15);
            }
            if j > 0 {
                assert_eq!(h.interface_edges(j).len(), 2 * h.interface_edges(j - 1).len());
                let coarse = &h.levels[j - 1];
                for c in 0..m.num_cells() {
                    assert_eq!(m.subdomain[c], coarse.subdomain[h.parent(c)]);
                }
            }
        }
        assert!(h.finest().locate(GeometryParams::turek().beam_tip()).is_some());
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut g = GeometryParams::turek();
        g.beam_height = 0.2;
        assert!(build_turek_coarse(&g).is_err());
        let mut g = GeometryParams::turek();
        g.channel_length = 0.5;
        assert!(g.validate().is_err());
    }

    #[test]
    fn dump_lists_all_entities() {
        let m = Mesh::unit_square(2).unwrap();
        let s = m.debug_dump();
        assert_eq!(s.lines().count(), 2 + 9 + 4);
    }
}
