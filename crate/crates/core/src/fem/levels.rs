use std::sync::Arc;

use crate::error::Result;
use crate::fem::geometry::CellGeometry;
use crate::fem::space::{DofMap, Transfer};
use crate::mesh::{BoundaryTag, Mesh, MeshHierarchy, Subdomain};

/// Mesh hierarchy together with the per-level spaces, transfers and
/// undeformed geometry.
#[derive(Debug)]
pub struct Discretization {
    pub hierarchy: MeshHierarchy,
    pub dofs: Vec<Arc<DofMap>>,
    /// `transfers[l]` maps level `l` to level `l + 1`.
    pub transfers: Vec<Transfer>,
    pub reference_geometry: Vec<Arc<CellGeometry>>,
}

impl Discretization {
    pub fn new(hierarchy: MeshHierarchy) -> Result<Discretization> {
        let dofs: Vec<Arc<DofMap>> = hierarchy.levels.iter().map(|m| Arc::new(DofMap::new(m))).collect();
        let transfers = (1..dofs.len()).map(|l| Transfer::new(&dofs[l - 1], &dofs[l])).collect();
        let mut reference_geometry = Vec::with_capacity(dofs.len());
        for (m, d) in hierarchy.levels.iter().zip(&dofs) {
            reference_geometry.push(Arc::new(CellGeometry::new(m, d, None)?));
        }
        Ok(Discretization { hierarchy, dofs, transfers, reference_geometry })
    }

    pub fn num_levels(&self) -> usize {
        self.dofs.len()
    }

    pub fn finest(&self) -> usize {
        self.dofs.len() - 1
    }

    pub fn mesh(&self, level: usize) -> &Mesh {
        &self.hierarchy.levels[level]
    }

    pub fn dof(&self, level: usize) -> &Arc<DofMap> {
        &self.dofs[level]
    }

    /// Constraint mask of a block vector: both velocity components on the
    /// given boundary tags, plus pressure node 0 when `pin_pressure`.
    pub fn block_mask(&self, level: usize, tags: &[BoundaryTag], pin_pressure: bool) -> Vec<bool> {
        let d = &self.dofs[level];
        let mut mask = vec![false; d.n_total()];
        for k in d.boundary_nodes(self.mesh(level), tags) {
            mask[k] = true;
            mask[d.n_q2 + k] = true;
        }
        if pin_pressure {
            mask[d.n_velocity()] = true;
        }
        mask
    }

    /// Restrict a finest-level vector Q2 field to `level` by injection.
    pub fn inject_to(&self, field: &[f64], level: usize) -> Vec<f64> {
        let mut f = field.to_vec();
        for l in (level..self.finest()).rev() {
            f = crate::fem::space::inject_vector(&f, self.dofs[l + 1].n_q2, self.dofs[l].n_q2);
        }
        f
    }

    /// Per-cell data on `level` taken from the finest level through the
    /// parent relation (child `4c` represents coarse cell `c`).
    pub fn coarsen_cell_data(&self, fine: &[f64], level: usize) -> Vec<f64> {
        let mut f = fine.to_vec();
        for l in (level..self.finest()).rev() {
            f = (0..self.mesh(l).num_cells()).map(|c| f[4 * c]).collect();
        }
        f
    }

    pub fn cells_with(&self, level: usize, tag: Subdomain) -> Vec<usize> {
        let m = self.mesh(level);
        (0..m.num_cells()).filter(|&c| m.subdomain[c] == tag).collect()
    }

    /// Number of unknowns per level as `(velocity, pressure)`.
    pub fn dof_counts(&self) -> Vec<(usize, usize)> {
        self.dofs.iter().map(|d| (d.n_velocity(), d.n_q1)).collect()
    }
}
