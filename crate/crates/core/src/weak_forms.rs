//! Stage operators and right-hand sides of the split FSI problem.
//!
//! Every stage solves a generalized Oseen (C stage) or Stokes (P stage)
//! problem on the configuration `x̂ + u#`:
//!
//! ```text
//! ρ/(γτ) (v, φ) + (2η ε(v), ε(φ)) [+ (ρ (∇v) v°, φ)] + r (v°·∇v, v°·∇φ)
//!     + (p, ∇·φ) = g_v(φ)
//! (∇·v, q) = g_p(q)
//! ```

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::fem::basis::{q2_shape, tables, NQ};
use crate::fem::{BlockOperator, CellGeometry, Discretization, DofMap, QpCoefficients};
use crate::materials::{jacobian_det, solid_explicit_stress, SolidParams, Tensor};
use crate::mesh::{BoundaryTag, Mesh, Subdomain, CHILD_OFFSETS};

/// Polynomial degree of the velocity space.
pub const VELOCITY_DEGREE: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Convection explicit, symmetric stage operator.
    P,
    /// Convection implicit (Oseen) with the latest iterate as wind.
    C,
}

impl Mode {
    pub fn letter(self) -> char {
        match self {
            Mode::P => 'P',
            Mode::C => 'C',
        }
    }
}

/// Coefficient data of a stage operator, given on the finest level.
#[derive(Clone, Debug)]
pub struct StageOperatorSpec {
    pub mode: Mode,
    /// `1 / (γ τ)`; zero gives a steady problem.
    pub inv_gamma_tau: f64,
    pub rho_cell: Vec<f64>,
    pub eta_cell: Vec<f64>,
    /// Displacement defining the configuration.
    pub u_sharp: Option<Vec<f64>>,
    /// Convective velocity relative to the mesh.
    pub v_circ: Option<Vec<f64>>,
    pub stabilization: bool,
}

/// Streamline stabilization parameter of a cell with diameter `h`, wind
/// magnitude `vnorm` and kinematic viscosity `nu`. Zero for cell Péclet
/// numbers below one.
pub fn stab_parameter(h: f64, vnorm: f64, nu: f64, p: f64) -> f64 {
    if vnorm <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let pe = vnorm * h / (2.0 * nu * p);
    if pe < 1.0 {
        return 0.0;
    }
    h / (2.0 * vnorm * p) * (1.0 / pe.tanh() - 1.0 / pe)
}

/// Convective velocity `v°` and, in P stages, the explicit velocity `v*`.
///
/// `v_hist[i]` is `v^{n-1-i}`; `w_sharp` the current domain velocity
/// estimate, `w_prev` the domain velocity of the last step and `v_latest`
/// the most recent velocity iterate.
pub fn convective_fields(
    mode: Mode,
    k: usize,
    v_hist: &[&[f64]],
    w_sharp: &[f64],
    w_prev: &[f64],
    v_latest: &[f64],
) -> (Vec<f64>, Option<Vec<f64>>) {
    match mode {
        Mode::C => (v_latest.iter().zip(w_sharp).map(|(v, w)| v - w).collect(), None),
        Mode::P if k >= 2 && v_hist.len() >= 2 => {
            let (v1, v2) = (v_hist[0], v_hist[1]);
            let vc = (0..v1.len()).map(|i| 2.0 * (v1[i] - w_sharp[i]) - (v2[i] - w_prev[i])).collect();
            let vs = (0..v1.len()).map(|i| 2.0 * v1[i] - v2[i]).collect();
            (vc, Some(vs))
        }
        Mode::P => {
            let v1 = v_hist[0];
            (v1.iter().zip(w_sharp).map(|(v, w)| v - w).collect(), Some(v1.to_vec()))
        }
    }
}

/// Quadrature-point coefficients on one level.
#[allow(clippy::too_many_arguments)]
pub fn level_coefficients(
    mesh: &Mesh,
    dofs: &DofMap,
    geom: &CellGeometry,
    mode: Mode,
    inv_gamma_tau: f64,
    rho_cell: &[f64],
    eta_cell: &[f64],
    u_sharp: Option<&[f64]>,
    v_circ: Option<&[f64]>,
    stabilization: bool,
) -> QpCoefficients {
    let nc = mesh.num_cells();
    let mut coeff = QpCoefficients::uniform(nc, 0.0, 0.0);
    for c in 0..nc {
        for q in 0..NQ {
            coeff.reaction[c * NQ + q] = rho_cell[c] * inv_gamma_tau;
            coeff.visc[c * NQ + q] = 2.0 * eta_cell[c];
        }
    }
    let Some(vc) = v_circ else { return coeff };
    let vert_disp: Option<Vec<[f64; 2]>> =
        u_sharp.map(|u| (0..mesh.num_vertices()).map(|k| [u[k], u[dofs.n_q2 + k]]).collect());
    let per_cell: Vec<([[f64; 2]; NQ], f64)> = (0..nc)
        .into_par_iter()
        .map(|c| {
            let vals = geom.vector_values(dofs, vc, c);
            let vmax = vals.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
            let r = if stabilization {
                let h = mesh.cell_diameter(c, vert_disp.as_deref());
                rho_cell[c] * stab_parameter(h, vmax, eta_cell[c] / rho_cell[c], VELOCITY_DEGREE)
            } else {
                0.0
            };
            (vals, r)
        })
        .collect();
    if mode == Mode::C {
        let mut conv = vec![[0.0; 2]; nc * NQ];
        for c in 0..nc {
            for q in 0..NQ {
                let v = per_cell[c].0[q];
                conv[c * NQ + q] = [rho_cell[c] * v[0], rho_cell[c] * v[1]];
            }
        }
        coeff.conv = Some(conv);
    }
    if per_cell.iter().any(|p| p.1 > 0.0) {
        let mut stab = vec![[0.0; 2]; nc * NQ];
        for c in 0..nc {
            let s = per_cell[c].1.sqrt();
            for q in 0..NQ {
                let v = per_cell[c].0[q];
                stab[c * NQ + q] = [s * v[0], s * v[1]];
            }
        }
        coeff.stab = Some(stab);
    }
    coeff
}

/// Stage operators on every level of the hierarchy, coarsest first. The
/// configuration and wind are injected from the finest level.
pub fn build_level_operators(
    disc: &Discretization,
    spec: &StageOperatorSpec,
    dirichlet: &[BoundaryTag],
    pin_pressure: bool,
) -> Result<Vec<BlockOperator>> {
    let mut ops = Vec::with_capacity(disc.num_levels());
    for l in 0..disc.num_levels() {
        let mesh = disc.mesh(l);
        let dofs = disc.dof(l);
        let u = spec.u_sharp.as_ref().map(|u| disc.inject_to(u, l));
        let vc = spec.v_circ.as_ref().map(|v| disc.inject_to(v, l));
        let geom = match &u {
            Some(u) => Arc::new(CellGeometry::new(mesh, dofs, Some(u))?),
            None => disc.reference_geometry[l].clone(),
        };
        let rho = disc.coarsen_cell_data(&spec.rho_cell, l);
        let eta = disc.coarsen_cell_data(&spec.eta_cell, l);
        let coeff = level_coefficients(
            mesh,
            dofs,
            &geom,
            spec.mode,
            spec.inv_gamma_tau,
            &rho,
            &eta,
            u.as_deref(),
            vc.as_deref(),
            spec.stabilization,
        );
        let mask = disc.block_mask(l, dirichlet, pin_pressure);
        ops.push(BlockOperator::new(dofs.clone(), geom, coeff, true, None, mask)?);
    }
    Ok(ops)
}

fn scatter(g: &mut [f64], dofs: &DofMap, c: usize, local: &[f64; 18]) {
    for (i, &k) in dofs.q2_cells[c].iter().enumerate() {
        g[k] += local[i];
        g[dofs.n_q2 + k] += local[9 + i];
    }
}

/// Adds `∫ f·φ` with `f` evaluated at the mapped quadrature points.
pub fn add_body_force(g: &mut [f64], dofs: &DofMap, geom: &CellGeometry, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) {
    let t = tables();
    let locals: Vec<[f64; 18]> = (0..dofs.q2_cells.len())
        .into_par_iter()
        .map(|c| {
            let mut l = [0.0; 18];
            for q in 0..NQ {
                let id = c * NQ + q;
                let fv = f(geom.x[id]);
                for i in 0..9 {
                    l[i] += geom.jxw[id] * fv[0] * t.q2[q][i];
                    l[9 + i] += geom.jxw[id] * fv[1] * t.q2[q][i];
                }
            }
            l
        })
        .collect();
    for (c, l) in locals.iter().enumerate() {
        scatter(g, dofs, c, l);
    }
}

/// Adds `-∫ ρ/(γτ) h·φ` for the BDF history combination `h = Σ α_i v^{n-i}`.
pub fn add_mass_history(g: &mut [f64], dofs: &DofMap, geom: &CellGeometry, rho_cell: &[f64], inv_gamma_tau: f64, h: &[f64]) {
    let t = tables();
    let locals: Vec<[f64; 18]> = (0..dofs.q2_cells.len())
        .into_par_iter()
        .map(|c| {
            let vals = geom.vector_values(dofs, h, c);
            let s = -rho_cell[c] * inv_gamma_tau;
            let mut l = [0.0; 18];
            for q in 0..NQ {
                let w = s * geom.jxw[c * NQ + q];
                for i in 0..9 {
                    l[i] += w * vals[q][0] * t.q2[q][i];
                    l[9 + i] += w * vals[q][1] * t.q2[q][i];
                }
            }
            l
        })
        .collect();
    for (c, l) in locals.iter().enumerate() {
        scatter(g, dofs, c, l);
    }
}

/// Adds the explicit convection `-∫ ρ ((∇v*) v°)·φ`.
pub fn add_explicit_convection(
    g: &mut [f64],
    dofs: &DofMap,
    geom: &CellGeometry,
    rho_cell: &[f64],
    v_star: &[f64],
    v_circ: &[f64],
) {
    let t = tables();
    let locals: Vec<[f64; 18]> = (0..dofs.q2_cells.len())
        .into_par_iter()
        .map(|c| {
            let grads = geom.vector_grads(dofs, v_star, c);
            let wind = geom.vector_values(dofs, v_circ, c);
            let mut l = [0.0; 18];
            for q in 0..NQ {
                let w = -rho_cell[c] * geom.jxw[c * NQ + q];
                let (gr, a) = (grads[q], wind[q]);
                let cv = [gr[0][0] * a[0] + gr[0][1] * a[1], gr[1][0] * a[0] + gr[1][1] * a[1]];
                for i in 0..9 {
                    l[i] += w * cv[0] * t.q2[q][i];
                    l[9 + i] += w * cv[1] * t.q2[q][i];
                }
            }
            l
        })
        .collect();
    for (c, l) in locals.iter().enumerate() {
        scatter(g, dofs, c, l);
    }
}

/// Adds `-∫_{solid} σ_e : ∇φ` for the explicit solid stress
/// `σ_e = μ_s (2 ε(-Σ α_i u^{n-i}) - (∇u#)ᵀ ∇u#)`, all gradients taken in
/// the current configuration.
pub fn add_solid_stress(
    g: &mut [f64],
    mesh: &Mesh,
    dofs: &DofMap,
    geom: &CellGeometry,
    params: &SolidParams,
    u_hist: &[f64],
    u_sharp: &[f64],
) {
    let cells: Vec<usize> = (0..mesh.num_cells()).filter(|&c| mesh.subdomain[c] == Subdomain::Solid).collect();
    let locals: Vec<[f64; 18]> = cells
        .par_iter()
        .map(|&c| {
            let gh = geom.vector_grads(dofs, u_hist, c);
            let gu = geom.vector_grads(dofs, u_sharp, c);
            let mut l = [0.0; 18];
            for q in 0..NQ {
                let h = gh[q];
                let off = -(h[0][1] + h[1][0]);
                let two_eps: Tensor = [[-2.0 * h[0][0], off], [off, -2.0 * h[1][1]]];
                let s = solid_explicit_stress(&gu[q], &two_eps, params);
                let w = -geom.jxw[c * NQ + q];
                let gp = geom.q2_grads(c, q);
                for i in 0..9 {
                    l[i] += w * (s[0][0] * gp[i][0] + s[0][1] * gp[i][1]);
                    l[9 + i] += w * (s[1][0] * gp[i][0] + s[1][1] * gp[i][1]);
                }
            }
            l
        })
        .collect();
    for (&c, l) in cells.iter().zip(&locals) {
        scatter(g, dofs, c, l);
    }
}

/// Adds `∫_{Γ} h·φ ds` over boundary edges with `tag`, on the configuration
/// displaced by `u_sharp`.
pub fn add_traction(
    g: &mut [f64],
    mesh: &Mesh,
    dofs: &DofMap,
    u_sharp: Option<&[f64]>,
    tag: BoundaryTag,
    h: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
) {
    let (gp, gw) = crate::fem::basis::gauss3();
    for c in 0..mesh.num_cells() {
        for k in 0..4 {
            let e = mesh.cell_edges[c][k];
            if mesh.edge_tag[e] != Some(tag) {
                continue;
            }
            let (a, b) = (CHILD_OFFSETS[k], CHILD_OFFSETS[(k + 1) % 4]);
            let (a, b) = ([2.0 * a[0], 2.0 * a[1]], [2.0 * b[0], 2.0 * b[1]]);
            let nodes = &dofs.q2_cells[c];
            let p = mesh.cell_points(c);
            for (s, w) in gp.iter().zip(&gw) {
                let xi = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let (n, dn) = q2_shape(xi);
                let mut x = crate::mesh::bilinear_point(&p, xi);
                let jm = crate::mesh::bilinear_jacobian(&p, xi);
                let mut tan = [
                    jm[0][0] * (b[0] - a[0]) + jm[0][1] * (b[1] - a[1]),
                    jm[1][0] * (b[0] - a[0]) + jm[1][1] * (b[1] - a[1]),
                ];
                if let Some(u) = u_sharp {
                    for i in 0..9 {
                        let (ux, uy) = (u[nodes[i]], u[dofs.n_q2 + nodes[i]]);
                        x[0] += n[i] * ux;
                        x[1] += n[i] * uy;
                        let d = dn[i][0] * (b[0] - a[0]) + dn[i][1] * (b[1] - a[1]);
                        tan[0] += d * ux;
                        tan[1] += d * uy;
                    }
                }
                let ds = w * tan[0].hypot(tan[1]);
                let hv = h(x);
                for i in 0..9 {
                    g[nodes[i]] += ds * hv[0] * n[i];
                    g[dofs.n_q2 + nodes[i]] += ds * hv[1] * n[i];
                }
            }
        }
    }
}

/// Pressure right-hand side `-(1/η_V) ∫_{Ω̂_s} (det(I + ∇̂u#) - 1) q̂`, or
/// zero when `eta_v` is `None`.
pub fn rhs_pressure(mesh: &Mesh, dofs: &DofMap, reference: &CellGeometry, u_sharp: &[f64], eta_v: Option<f64>) -> Vec<f64> {
    let mut g = vec![0.0; dofs.n_q1];
    let Some(eta_v) = eta_v else { return g };
    let t = tables();
    for c in 0..mesh.num_cells() {
        if mesh.subdomain[c] != Subdomain::Solid {
            continue;
        }
        let gr = reference.vector_grads(dofs, u_sharp, c);
        for q in 0..NQ {
            let w = -reference.jxw[c * NQ + q] * (jacobian_det(&gr[q]) - 1.0) / eta_v;
            for (i, &k) in dofs.q1_cells[c].iter().enumerate() {
                g[k] += w * t.q1[q][i];
            }
        }
    }
    g
}

/// `∫_{Ω̂_s} det(I + ∇̂u)`: area of the deformed solid.
pub fn solid_volume(mesh: &Mesh, dofs: &DofMap, reference: &CellGeometry, u: &[f64]) -> f64 {
    (0..mesh.num_cells())
        .filter(|&c| mesh.subdomain[c] == Subdomain::Solid)
        .map(|c| {
            let gr = reference.vector_grads(dofs, u, c);
            (0..NQ).map(|q| reference.jxw[c * NQ + q] * jacobian_det(&gr[q])).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshHierarchy;

    fn strip(n: usize) -> (Mesh, Arc<DofMap>, CellGeometry) {
        // solid occupies x > 0.5
        let m = Mesh::rectangle(n, n, [0.0, 0.0], [1.0, 1.0], |p| p[0] > 0.5).unwrap();
        let d = Arc::new(DofMap::new(&m));
        let g = CellGeometry::new(&m, &d, None).unwrap();
        (m, d, g)
    }

    fn x_sum(g: &[f64], d: &DofMap) -> f64 {
        g[..d.n_q2].iter().sum()
    }

    #[test]
    fn stab_parameter_limits() {
        assert_eq!(stab_parameter(0.1, 1.0, 1.0, 2.0), 0.0);
        assert_eq!(stab_parameter(0.1, 0.0, 1e-6, 2.0), 0.0);
        let r = stab_parameter(0.1, 1.0, 1e-8, 2.0);
        assert!((r - 0.1 / 4.0).abs() < 1e-6);
        let pe = 3.0f64;
        let (h, v, p) = (0.2, 2.0, 2.0);
        let eta = v * h / (2.0 * p * pe);
        let want = h / (2.0 * v * p) * (1.0 / pe.tanh() - 1.0 / pe);
        assert!((stab_parameter(h, v, eta, p) - want).abs() < 1e-15);
        let mut last = 0.0;
        for k in 1..20 {
            let r = stab_parameter(0.1, k as f64, 1e-3, 2.0);
            assert!(r >= 0.0 && (r <= 0.1 / (2.0 * k as f64 * 2.0) + 1e-15));
            let scaled = r * k as f64;
            assert!(scaled >= last - 1e-15);
            last = scaled;
        }
    }

    #[test]
    fn convective_fields_examples() {
        let v1 = [1.0, 2.0];
        let v2 = [0.5, 1.0];
        let w = [0.1, 0.1];
        let wp = [0.2, 0.0];
        let latest = [3.0, 3.0];
        let (vc, vs) = convective_fields(Mode::P, 2, &[&v1, &v2], &w, &wp, &latest);
        assert_eq!(vc, vec![2.0 * 0.9 - 0.3, 2.0 * 1.9 - 1.0]);
        assert_eq!(vs.unwrap(), vec![1.5, 3.0]);
        let (vc, vs) = convective_fields(Mode::P, 1, &[&v1], &w, &wp, &latest);
        assert_eq!(vc, vec![0.9, 1.9]);
        assert_eq!(vs.unwrap(), v1.to_vec());
        let (vc, vs) = convective_fields(Mode::C, 2, &[&v1, &v2], &w, &wp, &latest);
        assert_eq!(vc, vec![2.9, 2.9]);
        assert!(vs.is_none());
    }

    #[test]
    fn coefficients_per_mode() {
        let (m, d, g) = strip(2);
        let nc = m.num_cells();
        let rho = vec![2.0; nc];
        let eta: Vec<f64> = (0..nc).map(|c| if m.subdomain[c] == Subdomain::Solid { 50.0 } else { 1e-6 }).collect();
        let v = d.interpolate_vector(|_| [1.0, 0.0]);
        let p = level_coefficients(&m, &d, &g, Mode::P, 4.0, &rho, &eta, None, Some(&v), true);
        assert!(p.conv.is_none());
        assert_eq!(p.reaction[0], 8.0);
        let s = p.stab.as_ref().unwrap();
        for c in 0..nc {
            assert_eq!(p.visc[c * NQ], 2.0 * eta[c]);
            let want = (2.0 * stab_parameter(m.cell_diameter(c, None), 1.0, eta[c] / 2.0, 2.0)).sqrt();
            assert!((s[c * NQ][0] - want).abs() < 1e-12);
        }
        let c = level_coefficients(&m, &d, &g, Mode::C, 4.0, &rho, &eta, None, Some(&v), false);
        assert!(c.stab.is_none());
        assert!((c.conv.unwrap()[3][0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn body_force_and_history_integrals() {
        let (_, d, g) = strip(3);
        let mut r = vec![0.0; d.n_velocity()];
        add_body_force(&mut r, &d, &g, &|x| [x[0], 1.0]);
        assert!((x_sum(&r, &d) - 0.5).abs() < 1e-13);
        assert!((r[d.n_q2..].iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let mut r = vec![0.0; d.n_velocity()];
        let h = d.interpolate_vector(|_| [3.0, 0.0]);
        let rho: Vec<f64> = (0..9).map(|c| if c % 3 == 0 { 1.0 } else { 2.0 }).collect();
        add_mass_history(&mut r, &d, &g, &rho, 0.5, &h);
        let want = -0.5 * 3.0 * (1.0 + 2.0 + 2.0) / 9.0 * 3.0;
        assert!((x_sum(&r, &d) - want).abs() < 1e-13);
    }

    #[test]
    fn explicit_convection_of_linear_field() {
        let (_, d, g) = strip(2);
        let vs = d.interpolate_vector(|x| [x[0], 2.0 * x[0]]);
        let vc = d.interpolate_vector(|_| [1.0, 0.0]);
        let mut r = vec![0.0; d.n_velocity()];
        add_explicit_convection(&mut r, &d, &g, &[3.0; 4], &vs, &vc);
        assert!((x_sum(&r, &d) + 3.0).abs() < 1e-13);
        assert!((r[d.n_q2..].iter().sum::<f64>() + 6.0).abs() < 1e-13);
    }

    #[test]
    fn solid_stress_for_uniform_stretch() {
        // u# = (a x, 0) in both configuration and history, tested with φ = (x, 0)
        let (m, d, _) = strip(2);
        let a = 0.1;
        let u = d.interpolate_vector(|x| [a * x[0], 0.0]);
        let g = CellGeometry::new(&m, &d, Some(&u)).unwrap();
        let params = SolidParams { mu_s: 2.0, rho_s: 1.0 };
        let mut r = vec![0.0; d.n_velocity()];
        add_solid_stress(&mut r, &m, &d, &g, &params, &u, &u);
        let phi = d.interpolate_vector(|x| [x[0], 0.0]);
        let got: f64 = r.iter().zip(&phi).map(|(a, b)| a * b).sum();
        // spatial gradient of u is a/(1+a); ∇φ in the current configuration is 1/(1+a)
        let gx = a / (1.0 + a);
        let sigma = params.mu_s * (-2.0 * gx - gx * gx);
        let area = 0.5 * (1.0 + a);
        let want = -sigma / (1.0 + a) * area;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn pressure_rhs_tracks_volume_change() {
        let (m, d, g) = strip(2);
        let a = 0.05;
        let u = d.interpolate_vector(|x| [a * x[0], a * x[1]]);
        let gp = rhs_pressure(&m, &d, &g, &u, Some(10.0));
        let want = -((1.0 + a) * (1.0 + a) - 1.0) * 0.5 / 10.0;
        assert!((gp.iter().sum::<f64>() - want).abs() < 1e-14);
        assert!(rhs_pressure(&m, &d, &g, &u, None).iter().all(|&e| e == 0.0));
        assert!((solid_volume(&m, &d, &g, &u) - 0.5 * (1.0 + a).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn traction_on_displaced_boundary() {
        let m = Mesh::unit_square(2).unwrap();
        let d = DofMap::new(&m);
        let mut r = vec![0.0; d.n_velocity()];
        add_traction(&mut r, &m, &d, None, BoundaryTag::Outflow, &|x| [1.0, x[1]]);
        assert!((x_sum(&r, &d) - 1.0).abs() < 1e-14);
        assert!((r[d.n_q2..].iter().sum::<f64>() - 0.5).abs() < 1e-14);
        // stretching in y by 1.5 lengthens the outflow edge
        let u = d.interpolate_vector(|x| [0.0, 0.5 * x[1]]);
        let mut r = vec![0.0; d.n_velocity()];
        add_traction(&mut r, &m, &d, Some(&u), BoundaryTag::Outflow, &|_| [1.0, 0.0]);
        assert!((x_sum(&r, &d) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn level_operators_share_coefficients() {
        let coarse = Mesh::rectangle(2, 2, [0.0, 0.0], [1.0, 1.0], |p| p[0] > 0.5).unwrap();
        let disc = Discretization::new(MeshHierarchy::new(coarse, 2).unwrap()).unwrap();
        let fine = disc.mesh(2);
        let nc = fine.num_cells();
        let eta: Vec<f64> = (0..nc).map(|c| if fine.subdomain[c] == Subdomain::Solid { 7.0 } else { 1.0 }).collect();
        let spec = StageOperatorSpec {
            mode: Mode::P,
            inv_gamma_tau: 1.0,
            rho_cell: vec![1.0; nc],
            eta_cell: eta,
            u_sharp: Some(disc.dof(2).interpolate_vector(|x| [0.01 * x[1], 0.0])),
            v_circ: None,
            stabilization: false,
        };
        let ops = build_level_operators(&disc, &spec, &[BoundaryTag::Walls], false).unwrap();
        assert_eq!(ops.len(), 3);
        for (l, op) in ops.iter().enumerate() {
            let m = disc.mesh(l);
            for c in 0..m.num_cells() {
                let want = if m.subdomain[c] == Subdomain::Solid { 14.0 } else { 2.0 };
                assert_eq!(op.coeff.visc[c * NQ], want);
            }
            let area: f64 = op.geom.jxw.iter().sum();
            assert!((area - 1.0).abs() < 1e-13);
        }
    }
}
