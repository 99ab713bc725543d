//! Pseudo-elastic extension of solid data into the fluid region:
//!
//! ```text
//! ∫_{F̂} μ_A ε(w):ε(φ) = 0,   w = data in the solid,   w = 0 on ∂Ω
//! ```
//!
//! with the stiffness `μ_A = 1 + 50 exp(-800 |x̂ - A|²)` concentrated near the
//! beam tip `A`. The system is solved by CG with a Chebyshev multigrid
//! preconditioner; the operator lives on the reference mesh and is built once.

use std::sync::Arc;

use crate::error::Result;
use crate::fem::basis::NQ;
use crate::fem::{BlockOperator, Discretization, QpCoefficients};
use crate::krylov::{cg, norm, Stop};
use crate::mesh::{BoundaryTag, Subdomain};
use crate::mg::{ChebyshevSmoother, Multigrid};

pub const STIFFNESS_PEAK: f64 = 50.0;
pub const STIFFNESS_DECAY: f64 = 800.0;
const SMOOTHER_DEGREE: usize = 4;
const MAX_ITERATIONS: usize = 500;

pub const OUTER_BOUNDARY: [BoundaryTag; 4] =
    [BoundaryTag::Inflow, BoundaryTag::Outflow, BoundaryTag::Walls, BoundaryTag::Cylinder];

pub fn mesh_stiffness(x: [f64; 2], a: [f64; 2]) -> f64 {
    let d2 = (x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2);
    1.0 + STIFFNESS_PEAK * (-STIFFNESS_DECAY * d2).exp()
}

pub struct ExtensionSolver {
    mg: Option<Multigrid<ChebyshevSmoother>>,
    solid_nodes: Vec<bool>,
    /// Relative residual reduction of the CG solve.
    pub tol: f64,
}

fn level_mask(disc: &Discretization, level: usize) -> Vec<bool> {
    let d = disc.dof(level);
    let mesh = disc.mesh(level);
    let solid = d.subdomain_nodes(mesh, Subdomain::Solid);
    let mut mask = vec![false; d.n_velocity()];
    for k in 0..d.n_q2 {
        if solid[k] {
            mask[k] = true;
            mask[d.n_q2 + k] = true;
        }
    }
    for k in d.boundary_nodes(mesh, &OUTER_BOUNDARY) {
        mask[k] = true;
        mask[d.n_q2 + k] = true;
    }
    mask
}

impl ExtensionSolver {
    pub fn new(disc: Arc<Discretization>, point_a: [f64; 2], tol: f64) -> Result<ExtensionSolver> {
        let fine = disc.mesh(disc.finest());
        if !fine.subdomain.contains(&Subdomain::Solid) {
            return Ok(ExtensionSolver { mg: None, solid_nodes: Vec::new(), tol });
        }
        let mut ops = Vec::with_capacity(disc.num_levels());
        for l in 0..disc.num_levels() {
            let geom = disc.reference_geometry[l].clone();
            let nc = disc.mesh(l).num_cells();
            let mut coeff = QpCoefficients::uniform(nc, 0.0, 0.0);
            for k in 0..nc * NQ {
                coeff.visc[k] = mesh_stiffness(geom.x[k], point_a);
            }
            let cells = disc.cells_with(l, Subdomain::Fluid);
            ops.push(BlockOperator::new(disc.dof(l).clone(), geom, coeff, false, Some(cells), level_mask(&disc, l))?);
        }
        let solid_nodes = disc.dof(disc.finest()).subdomain_nodes(fine, Subdomain::Solid);
        let mg = Multigrid::new(disc.clone(), ops, 1, 1, |op| ChebyshevSmoother::new(op, SMOOTHER_DEGREE))?;
        Ok(ExtensionSolver { mg: Some(mg), solid_nodes, tol })
    }

    pub fn is_trivial(&self) -> bool {
        self.mg.is_none()
    }

    pub fn operator(&self) -> Option<&BlockOperator> {
        self.mg.as_ref().map(|m| m.finest_operator())
    }

    /// Extension of the solid values of the vector Q2 field `data`. Returns the
    /// field and the number of CG iterations.
    pub fn extend(&self, data: &[f64]) -> Result<(Vec<f64>, usize)> {
        let Some(mg) = &self.mg else { return Ok((vec![0.0; data.len()], 0)) };
        let op = mg.finest_operator();
        let n = op.n();
        let d = &op.dofs;
        let mut w = vec![0.0; n];
        for k in 0..d.n_q2 {
            if self.solid_nodes[k] {
                w[k] = data[k];
                w[d.n_q2 + k] = data[d.n_q2 + k];
            }
        }
        let mut r = vec![0.0; n];
        op.apply_raw(&w, &mut r);
        for k in 0..n {
            r[k] = if op.constrained[k] { 0.0 } else { -r[k] };
        }
        let rn = norm(&r);
        if rn == 0.0 {
            return Ok((w, 0));
        }
        let mut delta = vec![0.0; n];
        let stats = cg(op, mg, &r, &mut delta, Stop::Tolerance { tol: self.tol * rn, max_iter: MAX_ITERATIONS })?;
        for k in 0..n {
            w[k] += delta[k];
        }
        Ok((w, stats.iterations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh, MeshHierarchy};

    fn setup(levels: usize) -> (Arc<Discretization>, ExtensionSolver) {
        // solid block in the middle of the unit square
        let coarse = Mesh::rectangle(4, 4, [0.0, 0.0], [1.0, 1.0], |p| (p[0] - 0.5).abs() < 0.25 && (p[1] - 0.5).abs() < 0.25).unwrap();
        let disc = Arc::new(Discretization::new(MeshHierarchy::new(coarse, levels).unwrap()).unwrap());
        let ext = ExtensionSolver::new(disc.clone(), [0.75, 0.5], 1e-13).unwrap();
        (disc, ext)
    }

    #[test]
    fn stiffness_peak() {
        assert_eq!(mesh_stiffness([0.6, 0.2], [0.6, 0.2]), 51.0);
        assert!((mesh_stiffness([0.7, 0.2], [0.6, 0.2]) - (1.0 + 50.0 * (-8.0f64).exp())).abs() < 1e-14);
        assert!(mesh_stiffness([2.0, 0.2], [0.6, 0.2]) - 1.0 < 1e-300);
    }

    #[test]
    fn interface_data_are_reproduced_and_boundary_is_fixed() {
        let (disc, ext) = setup(1);
        let d = disc.dof(1);
        let data = d.interpolate_vector(|x| [x[0] * x[1], 1.0 - x[0]]);
        let (w, its) = ext.extend(&data).unwrap();
        assert!(its > 0);
        let solid = d.subdomain_nodes(disc.mesh(1), Subdomain::Solid);
        for k in 0..d.n_q2 {
            if solid[k] {
                assert_eq!(w[k], data[k]);
                assert_eq!(w[d.n_q2 + k], data[d.n_q2 + k]);
            }
        }
        for k in d.boundary_nodes(disc.mesh(1), &OUTER_BOUNDARY) {
            assert_eq!(w[k], 0.0);
            assert_eq!(w[d.n_q2 + k], 0.0);
        }
        // discrete equation holds in the fluid
        let op = ext.operator().unwrap();
        let mut r = vec![0.0; op.n()];
        op.apply_raw(&w, &mut r);
        let free = r.iter().zip(&op.constrained).filter(|(_, &m)| !m).map(|(e, _)| e.abs()).fold(0.0, f64::max);
        assert!(free < 1e-10, "{free}");
    }

    #[test]
    fn extension_is_linear() {
        let (disc, ext) = setup(2);
        let d = disc.dof(2);
        let a = d.interpolate_vector(|x| [x[0].sin(), x[1] * x[1]]);
        let b = d.interpolate_vector(|x| [x[1] - 0.5, (3.0 * x[0]).cos()]);
        let (alpha, beta) = (2.5, -0.75);
        let comb: Vec<f64> = a.iter().zip(&b).map(|(p, q)| alpha * p + beta * q).collect();
        let (ea, _) = ext.extend(&a).unwrap();
        let (eb, _) = ext.extend(&b).unwrap();
        let (ec, _) = ext.extend(&comb).unwrap();
        let err = (0..ec.len()).map(|k| (ec[k] - alpha * ea[k] - beta * eb[k]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn fluid_only_mesh_is_trivial() {
        let coarse = Mesh::unit_square(2).unwrap();
        let disc = Arc::new(Discretization::new(MeshHierarchy::new(coarse, 1).unwrap()).unwrap());
        let ext = ExtensionSolver::new(disc.clone(), [0.5, 0.5], 1e-10).unwrap();
        assert!(ext.is_trivial());
        let (w, its) = ext.extend(&vec![1.0; disc.dof(1).n_velocity()]).unwrap();
        assert_eq!(its, 0);
        assert!(w.iter().all(|&e| e == 0.0));
    }
}
