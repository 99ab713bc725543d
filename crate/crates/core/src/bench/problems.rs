//! Benchmark problems: the channel with an elastic beam, the lid-driven
//! cavity, and manufactured solutions on the unit square.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bench::config::{Benchmark, RunConfig};
use crate::error::{FsiError, Result};
use crate::fem::basis::NQ;
use crate::fem::{CellGeometry, Discretization, DofMap};
use crate::krylov::KrylovConfig;
use crate::mesh::{build_turek_coarse, BoundaryTag, Mesh, MeshHierarchy};
use crate::mg::{solve_with_data, stage_multigrid, InnerCounters, SmootherParams};
use crate::stepper::{Physics, SchemeConfig, State, Stepper, TimeVectorFn};
use crate::weak_forms::{add_body_force, build_level_operators, Mode, StageOperatorSpec};

pub const ALL_SIDES: [BoundaryTag; 3] = [BoundaryTag::Inflow, BoundaryTag::Outflow, BoundaryTag::Walls];

/// Parabolic inflow with mean `v_in` across a channel of height `h`.
pub fn inflow_profile_2d(y: f64, v_in: f64, h: f64) -> [f64; 2] {
    [6.0 * v_in * y * (h - y) / (h * h), 0.0]
}

pub struct Problem {
    pub disc: Arc<Discretization>,
    pub physics: Physics,
    pub initial: Option<State>,
}

pub fn discretization(c: &RunConfig) -> Result<Arc<Discretization>> {
    let coarse = match c.benchmark {
        Benchmark::Fsi2i | Benchmark::Fsi3i => build_turek_coarse(&c.geometry)?,
        Benchmark::Cavity | Benchmark::StokesManufactured => Mesh::unit_square(c.coarse_cells)?,
    };
    Ok(Arc::new(Discretization::new(MeshHierarchy::new(coarse, c.refinements)?)?))
}

pub fn build_problem(c: &RunConfig) -> Result<Problem> {
    let disc = discretization(c)?;
    let physics = match c.benchmark {
        Benchmark::Fsi2i | Benchmark::Fsi3i => {
            let (v_in, h) = (c.inflow_mean, c.geometry.channel_height);
            let x_in = disc.mesh(0).vertices.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let tol = 1e-9 * c.geometry.channel_length;
            let inflow: TimeVectorFn =
                Arc::new(move |x, _t| if (x[0] - x_in).abs() < tol { inflow_profile_2d(x[1], v_in, h) } else { [0.0, 0.0] });
            Physics {
                fluid: c.fluid,
                solid: c.solid,
                body_force: None,
                tractions: Vec::new(),
                dirichlet_tags: vec![BoundaryTag::Inflow, BoundaryTag::Walls, BoundaryTag::Cylinder],
                dirichlet_value: Some(inflow),
                pin_pressure: false,
                eta_v: c.eta_v,
                stabilization: c.stabilization,
                velocity_scale: if v_in > 0.0 { v_in } else { 1.0 },
                point_a: c.point_a,
                viscosity_override: None,
            }
        }
        Benchmark::Cavity => {
            let lid = c.inflow_mean;
            let value: TimeVectorFn = Arc::new(move |x, _t| if x[1] > 1.0 - 1e-12 { [lid, 0.0] } else { [0.0, 0.0] });
            Physics {
                fluid: c.fluid,
                solid: c.solid,
                body_force: None,
                tractions: Vec::new(),
                dirichlet_tags: ALL_SIDES.to_vec(),
                dirichlet_value: Some(value),
                pin_pressure: true,
                eta_v: None,
                stabilization: c.stabilization,
                velocity_scale: if lid > 0.0 { lid } else { 1.0 },
                point_a: c.point_a,
                viscosity_override: None,
            }
        }
        Benchmark::StokesManufactured => {
            return Err(FsiError::Config("stokes_manufactured is a stationary convergence study, not a time-dependent run".into()))
        }
    };
    Ok(Problem { disc, physics, initial: None })
}

/// Stream function `ψ = (x - ½)² eˣ sin πy` of the manufactured flow, whose
/// value and normal derivative vanish on `x = ½`.
pub mod two_material {
    use super::*;

    /// `w = curl ψ = (ψ_y, -ψ_x)`; the velocity is `w / η` in each material.
    pub fn w(x: [f64; 2]) -> [f64; 2] {
        let s = x[0] - 0.5;
        let e = x[0].exp();
        [PI * s * s * e * (PI * x[1]).cos(), -(2.0 * s + s * s) * e * (PI * x[1]).sin()]
    }

    pub fn laplacian_w(x: [f64; 2]) -> [f64; 2] {
        let s = x[0] - 0.5;
        let e = x[0].exp();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [
            PI * e * cy * (s * s + 4.0 * s + 2.0 - PI * PI * s * s),
            -e * sy * (s * s + 6.0 * s + 6.0 - PI * PI * (2.0 * s + s * s)),
        ]
    }

    pub fn pressure(x: [f64; 2]) -> f64 {
        (PI * x[0]).cos() * (PI * x[1]).sin()
    }

    pub fn grad_pressure(x: [f64; 2]) -> [f64; 2] {
        [-PI * (PI * x[0]).sin() * (PI * x[1]).sin(), PI * (PI * x[0]).cos() * (PI * x[1]).cos()]
    }

    pub fn viscosity(x: [f64; 2], contrast: f64) -> f64 {
        if x[0] < 0.5 {
            1.0
        } else {
            contrast
        }
    }

    pub fn velocity(x: [f64; 2], contrast: f64) -> [f64; 2] {
        let eta = viscosity(x, contrast);
        let w = w(x);
        [w[0] / eta, w[1] / eta]
    }

    /// `-div(2η ε(u)) + c u - ∇p` with the system pressure sign.
    pub fn forcing(x: [f64; 2], contrast: f64, reaction: f64) -> [f64; 2] {
        let l = laplacian_w(x);
        let u = velocity(x, contrast);
        let g = grad_pressure(x);
        [-l[0] + reaction * u[0] - g[0], -l[1] + reaction * u[1] - g[1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManufacturedResult {
    pub level: usize,
    pub h: f64,
    pub velocity_error: f64,
    pub pressure_error: f64,
    pub iterations: usize,
}

/// L² error of a vector Q2 field against `exact`.
pub fn vector_l2_error(dofs: &DofMap, geom: &CellGeometry, field: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mut e2 = 0.0;
    for c in 0..geom.num_cells() {
        let vals = geom.vector_values(dofs, field, c);
        for q in 0..NQ {
            let u = exact(geom.x[c * NQ + q]);
            e2 += ((vals[q][0] - u[0]).powi(2) + (vals[q][1] - u[1]).powi(2)) * geom.jxw[c * NQ + q];
        }
    }
    e2.sqrt()
}

/// L² error of a Q1 field against `exact`, both with their means removed.
pub fn pressure_l2_error(dofs: &DofMap, geom: &CellGeometry, field: &[f64], exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let mut diff = Vec::with_capacity(geom.num_cells() * NQ);
    let (mut mean, mut area) = (0.0, 0.0);
    for c in 0..geom.num_cells() {
        let vals = geom.q1_values(dofs, field, c);
        for q in 0..NQ {
            let k = c * NQ + q;
            let d = vals[q] - exact(geom.x[k]);
            mean += d * geom.jxw[k];
            area += geom.jxw[k];
            diff.push(d);
        }
    }
    mean /= area;
    diff.iter().zip(&geom.jxw).map(|(d, w)| (d - mean).powi(2) * w).sum::<f64>().sqrt()
}

/// Solves the two-material generalized Stokes problem on the unit square
/// split into `coarse_cells²` cells and refined `level` times.
pub fn manufactured_solve(
    coarse_cells: usize,
    level: usize,
    contrast: f64,
    reaction: f64,
    smoother: SmootherParams,
    krylov: &KrylovConfig,
) -> Result<ManufacturedResult> {
    if coarse_cells % 2 != 0 {
        return Err(FsiError::Config("the material interface x = 1/2 must be a mesh line: use an even mesh.coarse_cells".into()));
    }
    let disc = Arc::new(Discretization::new(MeshHierarchy::new(Mesh::unit_square(coarse_cells)?, level)?)?);
    let fine = disc.finest();
    let mesh = disc.mesh(fine);
    let d = disc.dof(fine).clone();
    let nv = d.n_velocity();
    let eta_cell: Vec<f64> = (0..mesh.num_cells())
        .map(|c| two_material::viscosity(crate::mesh::bilinear_point(&mesh.cell_points(c), [0.5, 0.5]), contrast))
        .collect();
    let spec = StageOperatorSpec {
        mode: Mode::P,
        inv_gamma_tau: reaction,
        rho_cell: vec![1.0; mesh.num_cells()],
        eta_cell,
        u_sharp: None,
        v_circ: None,
        stabilization: false,
    };
    let ops = build_level_operators(&disc, &spec, &ALL_SIDES, true)?;
    let geom = disc.reference_geometry[fine].clone();
    let mut rhs = vec![0.0; d.n_total()];
    add_body_force(&mut rhs[..nv], &d, &geom, &|x| two_material::forcing(x, contrast, reaction));
    let mut x = vec![0.0; d.n_total()];
    let mask = ops[fine].constrained.clone();
    for k in 0..d.n_q2 {
        if mask[k] {
            let u = two_material::velocity(d.q2_points[k], contrast);
            x[k] = u[0];
            x[d.n_q2 + k] = u[1];
        }
    }
    x[nv] = two_material::pressure(mesh.vertices[0]);
    let mg = stage_multigrid(disc.clone(), ops, smoother, Arc::new(InnerCounters::default()))?;
    let stats = solve_with_data(mg.finest_operator(), &mg, &rhs, &mut x, krylov)?;
    let velocity_error = vector_l2_error(&d, &geom, &x[..nv], |p| two_material::velocity(p, contrast));
    let pressure_error = pressure_l2_error(&d, &geom, &x[nv..], two_material::pressure);
    Ok(ManufacturedResult {
        level,
        h: 1.0 / (coarse_cells << level) as f64,
        velocity_error,
        pressure_error,
        iterations: stats.iterations,
    })
}

/// Observed orders `log(e_{l-1}/e_l) / log(h_{l-1}/h_l)` between successive
/// results, for velocity and pressure.
pub fn observed_orders(results: &[ManufacturedResult]) -> Vec<(f64, f64)> {
    results
        .windows(2)
        .map(|w| {
            let r = (w[0].h / w[1].h).ln();
            ((w[0].velocity_error / w[1].velocity_error).ln() / r, (w[0].pressure_error / w[1].pressure_error).ln() / r)
        })
        .collect()
}

/// Unsteady flow `u = a(t) (x², -2xy)`, `p = b(t) (x + y)` on the unit square.
/// Quadratic in space, so the Taylor–Hood pair represents it exactly and
/// only the time discretization contributes to the error.
pub mod unsteady {
    use super::*;

    pub fn a(t: f64) -> f64 {
        1.0 + (2.0 * t).sin()
    }

    fn da(t: f64) -> f64 {
        2.0 * (2.0 * t).cos()
    }

    pub fn b(t: f64) -> f64 {
        t.cos()
    }

    pub fn velocity(x: [f64; 2], t: f64) -> [f64; 2] {
        let a = a(t);
        [a * x[0] * x[0], -2.0 * a * x[0] * x[1]]
    }

    pub fn pressure(x: [f64; 2], t: f64) -> f64 {
        b(t) * (x[0] + x[1])
    }

    /// `ρ(∂u/∂t + u·∇u) - η Δu - ∇p` with the system pressure sign.
    pub fn forcing(x: [f64; 2], t: f64, rho: f64, eta: f64) -> [f64; 2] {
        let (a, da) = (a(t), da(t));
        let (x0, x1) = (x[0], x[1]);
        let ut = [da * x0 * x0, -2.0 * da * x0 * x1];
        // u·∇u = a² (2x³, 2x²y)
        let adv = [2.0 * a * a * x0.powi(3), 2.0 * a * a * x0 * x0 * x1];
        let lap = [2.0 * a, 0.0];
        let gp = b(t);
        [rho * (ut[0] + adv[0]) - eta * lap[0] - gp, rho * (ut[1] + adv[1]) - eta * lap[1] - gp]
    }

    pub fn physics(rho: f64, eta: f64) -> Physics {
        let f: TimeVectorFn = Arc::new(move |x, t| forcing(x, t, rho, eta));
        let g: TimeVectorFn = Arc::new(velocity);
        Physics {
            fluid: crate::materials::FluidParams { eta_f: eta, rho_f: rho },
            solid: crate::materials::SolidParams { mu_s: 1.0, rho_s: 1.0 },
            body_force: Some(f),
            tractions: Vec::new(),
            dirichlet_tags: ALL_SIDES.to_vec(),
            dirichlet_value: Some(g),
            pin_pressure: true,
            eta_v: None,
            stabilization: false,
            velocity_scale: 10.0,
            point_a: [0.5, 0.5],
            viscosity_override: None,
        }
    }

    pub fn initial_state(d: &DofMap, mesh: &Mesh) -> State {
        let mut s = State::zero(d.n_velocity(), d.n_q1);
        s.v = d.interpolate_vector(|x| velocity(x, 0.0));
        s.p = d.interpolate_q1(mesh, |x| pressure(x, 0.0));
        s
    }

    /// L² velocity error at `t_end` of a run with the given scheme on the
    /// unit square split into `coarse_cells²` cells and refined `level` times.
    pub fn time_error(scheme: &SchemeConfig, t_end: f64, coarse_cells: usize, level: usize, rho: f64, eta: f64) -> Result<f64> {
        let disc = Arc::new(Discretization::new(MeshHierarchy::new(Mesh::unit_square(coarse_cells)?, level)?)?);
        let fine = disc.finest();
        let d = disc.dof(fine).clone();
        let init = initial_state(&d, disc.mesh(fine));
        let mut st = Stepper::new(disc.clone(), physics(rho, eta), scheme.clone(), Some(init))?;
        let n = (t_end / scheme.tau).round() as usize;
        for _ in 0..n {
            st.step()?;
        }
        let s = st.current();
        Ok(vector_l2_error(&d, &disc.reference_geometry[fine], &s.v, |x| velocity(x, s.t)))
    }
}
