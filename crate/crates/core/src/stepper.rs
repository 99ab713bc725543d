//! Semi-implicit BDF time stepping with predictor (P) and corrector (C)
//! stages. Each stage solves one linear saddle-point problem on the
//! configuration predicted from the latest domain velocity, then updates the
//! domain velocity by extending the new velocity out of the solid.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{FsiError, Result};
use crate::extension::ExtensionSolver;
use crate::fem::Discretization;
use crate::krylov::KrylovConfig;
use crate::materials::{density, effective_viscosity, FluidParams, SolidParams};
use crate::mesh::{BoundaryTag, Subdomain};
use crate::mg::{solve_with_data, stage_multigrid, InnerCounters, SmootherParams};
use crate::weak_forms::{
    add_body_force, add_explicit_convection, add_mass_history, add_solid_stress, add_traction, build_level_operators,
    convective_fields, rhs_pressure, Mode, StageOperatorSpec,
};

/// Backward differentiation formula `Δτ v = (v^n + Σ α_i v^{n-i}) / (γ τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BdfScheme {
    pub k: usize,
    pub gamma: f64,
    pub alphas: Vec<f64>,
}

pub fn bdf_coefficients(k: usize) -> Result<BdfScheme> {
    match k {
        1 => Ok(BdfScheme { k, gamma: 1.0, alphas: vec![-1.0] }),
        2 => Ok(BdfScheme { k, gamma: 2.0 / 3.0, alphas: vec![-4.0 / 3.0, 1.0 / 3.0] }),
        _ => Err(FsiError::Config(format!("BDF order {k} not supported (1 or 2)"))),
    }
}

impl BdfScheme {
    /// `Δτ` of scalar samples `[f^n, f^{n-1}, ...]`.
    pub fn derivative(&self, tau: f64, samples: &[f64]) -> f64 {
        let s: f64 = self.alphas.iter().zip(&samples[1..]).map(|(a, f)| a * f).sum();
        (samples[0] + s) / (self.gamma * tau)
    }

    /// `Σ α_i f^{n-i}` of vector fields, most recent first.
    pub fn history_sum(&self, fields: &[&[f64]]) -> Vec<f64> {
        let mut out = vec![0.0; fields[0].len()];
        for (a, f) in self.alphas.iter().zip(fields) {
            out.iter_mut().zip(f.iter()).for_each(|(o, x)| *o += a * x);
        }
        out
    }
}

/// Configuration `u# = γ τ w# - Σ α_i u^{n-i}` reached by moving with `w#`.
pub fn predict_displacement(scheme: &BdfScheme, tau: f64, w_sharp: &[f64], u_hist: &[&[f64]]) -> Vec<f64> {
    let h = scheme.history_sum(u_hist);
    w_sharp.iter().zip(&h).map(|(w, h)| scheme.gamma * tau * w - h).collect()
}

pub type TimeVectorFn = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

/// Material data, loads and boundary conditions.
#[derive(Clone)]
pub struct Physics {
    pub fluid: FluidParams,
    pub solid: SolidParams,
    pub body_force: Option<TimeVectorFn>,
    pub tractions: Vec<(BoundaryTag, TimeVectorFn)>,
    pub dirichlet_tags: Vec<BoundaryTag>,
    /// Velocity prescribed on the Dirichlet boundary; zero when `None`.
    pub dirichlet_value: Option<TimeVectorFn>,
    pub pin_pressure: bool,
    /// Volume correction parameter; `None` disables it.
    pub eta_v: Option<f64>,
    pub stabilization: bool,
    /// Reference velocity of the divergence detector.
    pub velocity_scale: f64,
    /// Centre of the mesh stiffness bump.
    pub point_a: [f64; 2],
    /// Per-cell viscosity replacing the material model (finest level).
    pub viscosity_override: Option<Vec<f64>>,
}

impl std::fmt::Debug for Physics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Physics")
            .field("fluid", &self.fluid)
            .field("solid", &self.solid)
            .field("dirichlet_tags", &self.dirichlet_tags)
            .field("eta_v", &self.eta_v)
            .field("stabilization", &self.stabilization)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub k: usize,
    pub stages: Vec<Mode>,
    pub tau: f64,
    pub krylov: KrylovConfig,
    pub smoother_p: SmootherParams,
    pub smoother_c: SmootherParams,
    /// Relative tolerance of the extension solve.
    pub extension_tol: f64,
}

impl SchemeConfig {
    pub fn new(k: usize, stages: Vec<Mode>, tau: f64) -> SchemeConfig {
        SchemeConfig {
            k,
            stages,
            tau,
            krylov: KrylovConfig::default(),
            smoother_p: SmootherParams::P_DEFAULT,
            smoother_c: SmootherParams::C_DEFAULT,
            extension_tol: 1e-8,
        }
    }

    /// Scheme label such as `GCSI2PC`.
    pub fn label(&self) -> String {
        format!("GCSI{}{}", self.k, self.stages.iter().map(|m| m.letter()).collect::<String>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl State {
    pub fn zero(n_velocity: usize, n_pressure: usize) -> State {
        State { step: 0, t: 0.0, v: vec![0.0; n_velocity], p: vec![0.0; n_pressure], u: vec![0.0; n_velocity], w: vec![0.0; n_velocity] }
    }
}

/// The last `k` states, most recent first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateHistory {
    pub states: VecDeque<State>,
}

impl StateHistory {
    pub fn latest(&self) -> &State {
        &self.states[0]
    }

    pub fn push(&mut self, s: State, keep: usize) {
        self.states.push_front(s);
        self.states.truncate(keep.max(1));
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub stage_iterations: Vec<usize>,
    pub stage_residuals: Vec<f64>,
    pub extension_iterations: usize,
}

pub struct Stepper {
    pub disc: Arc<Discretization>,
    pub physics: Physics,
    pub config: SchemeConfig,
    pub history: StateHistory,
    pub counters: Arc<InnerCounters>,
    /// Digest of the run configuration, stored in checkpoints and compared on restart.
    pub fingerprint: [u8; 32],
    extension: ExtensionSolver,
    has_solid: bool,
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, physics: Physics, config: SchemeConfig, initial: Option<State>) -> Result<Stepper> {
        bdf_coefficients(config.k)?;
        if config.stages.is_empty() {
            return Err(FsiError::Config("at least one stage required".into()));
        }
        if !(config.tau > 0.0) {
            return Err(FsiError::Config(format!("time step must be positive, got {}", config.tau)));
        }
        let d = disc.dof(disc.finest());
        let state = initial.unwrap_or_else(|| State::zero(d.n_velocity(), d.n_q1));
        if state.v.len() != d.n_velocity() || state.p.len() != d.n_q1 {
            return Err(FsiError::DimensionMismatch { expected: d.n_velocity(), got: state.v.len() });
        }
        let extension = ExtensionSolver::new(disc.clone(), physics.point_a, config.extension_tol)?;
        let has_solid = disc.mesh(disc.finest()).subdomain.contains(&Subdomain::Solid);
        let mut history = StateHistory::default();
        history.push(state, config.k);
        Ok(Stepper { disc, physics, config, history, counters: Arc::new(InnerCounters::default()), fingerprint: [0; 32], extension, has_solid })
    }

    pub fn current(&self) -> &State {
        self.history.latest()
    }

    pub fn extension(&self) -> &ExtensionSolver {
        &self.extension
    }

    fn dirichlet_values(&self, t: f64, x: &mut [f64], mask: &[bool]) {
        let d = self.disc.dof(self.disc.finest());
        let n2 = d.n_q2;
        for k in 0..n2 {
            if mask[k] || mask[n2 + k] {
                let v = match &self.physics.dirichlet_value {
                    Some(f) => f(d.q2_points[k], t),
                    None => [0.0, 0.0],
                };
                x[k] = v[0];
                x[n2 + k] = v[1];
            }
        }
        if self.physics.pin_pressure {
            x[d.n_velocity()] = 0.0;
        }
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<StepReport> {
        let disc = self.disc.clone();
        let fine = disc.finest();
        let mesh = disc.mesh(fine);
        let d = disc.dof(fine).clone();
        let nv = d.n_velocity();
        let tau = self.config.tau;
        let k = self.config.k.min(self.history.states.len());
        let scheme = bdf_coefficients(k)?;
        let n = self.current().step + 1;
        let t = n as f64 * tau;
        let states: Vec<&State> = self.history.states.iter().take(k).collect();
        let v_hist: Vec<&[f64]> = states.iter().map(|s| s.v.as_slice()).collect();
        let u_hist: Vec<&[f64]> = states.iter().map(|s| s.u.as_slice()).collect();
        let v_sum = scheme.history_sum(&v_hist);
        let u_sum = scheme.history_sum(&u_hist);
        let gt = scheme.gamma * tau;
        let w_prev = states[0].w.clone();
        let mut w_sharp = w_prev.clone();
        let mut x: Vec<f64> = states[0].v.iter().chain(&states[0].p).copied().collect();
        let rho_cell: Vec<f64> = mesh.subdomain.iter().map(|&s| density(s, &self.physics.fluid, &self.physics.solid)).collect();
        let eta_cell: Vec<f64> = match &self.physics.viscosity_override {
            Some(e) => e.clone(),
            None => mesh
                .subdomain
                .iter()
                .map(|&s| effective_viscosity(s, scheme.gamma, tau, &self.physics.fluid, &self.physics.solid))
                .collect(),
        };
        let mut report = StepReport { step: n, t, ..Default::default() };
        for &mode in &self.config.stages {
            let u_sharp = if self.has_solid { Some(predict_displacement(&scheme, tau, &w_sharp, &u_hist)) } else { None };
            let (v_circ, v_star) = convective_fields(mode, k, &v_hist, &w_sharp, &w_prev, &x[..nv]);
            let spec = StageOperatorSpec {
                mode,
                inv_gamma_tau: 1.0 / gt,
                rho_cell: rho_cell.clone(),
                eta_cell: eta_cell.clone(),
                u_sharp,
                v_circ: Some(v_circ),
                stabilization: self.physics.stabilization,
            };
            let ops = build_level_operators(&disc, &spec, &self.physics.dirichlet_tags, self.physics.pin_pressure)?;
            let geom = ops[fine].geom.clone();
            let mut rhs = vec![0.0; d.n_total()];
            {
                let g = &mut rhs[..nv];
                if let Some(f) = &self.physics.body_force {
                    add_body_force(g, &d, &geom, &|x| f(x, t));
                }
                add_mass_history(g, &d, &geom, &rho_cell, 1.0 / gt, &v_sum);
                if let Some(vs) = &v_star {
                    add_explicit_convection(g, &d, &geom, &rho_cell, vs, spec.v_circ.as_ref().unwrap());
                }
                if let Some(us) = &spec.u_sharp {
                    add_solid_stress(g, mesh, &d, &geom, &self.physics.solid, &u_sum, us);
                }
                for (tag, h) in &self.physics.tractions {
                    add_traction(g, mesh, &d, spec.u_sharp.as_deref(), *tag, &|x| h(x, t));
                }
            }
            if let Some(us) = &spec.u_sharp {
                let gp = rhs_pressure(mesh, &d, &disc.reference_geometry[fine], us, self.physics.eta_v);
                rhs[nv..].copy_from_slice(&gp);
            }
            let mask = ops[fine].constrained.clone();
            self.dirichlet_values(t, &mut x, &mask);
            let params = match mode {
                Mode::P => self.config.smoother_p,
                Mode::C => self.config.smoother_c,
            };
            let mg = stage_multigrid(disc.clone(), ops, params, self.counters.clone())?;
            let stats = solve_with_data(mg.finest_operator(), &mg, &rhs, &mut x, &self.config.krylov)?;
            report.stage_iterations.push(stats.iterations);
            report.stage_residuals.push(stats.final_residual());
            let (w, its) = self.extension.extend(&x[..nv])?;
            report.extension_iterations += its;
            w_sharp = w;
        }
        let u: Vec<f64> = if self.has_solid {
            predict_displacement(&scheme, tau, &w_sharp, &u_hist)
        } else {
            vec![0.0; nv]
        };
        let vmax = x[..nv].iter().fold(0.0f64, |m, e| if e.is_finite() { m.max(e.abs()) } else { f64::INFINITY });
        if vmax > 1e3 * self.physics.velocity_scale {
            return Err(FsiError::Instability { step: n, reason: format!("max velocity {vmax:.3e}") });
        }
        let p = x[nv..].to_vec();
        x.truncate(nv);
        let state = State { step: n, t, v: x, p, u, w: w_sharp };
        self.history.push(state, self.config.k);
        Ok(report)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut payload = Vec::new();
        let put_u = |b: &mut Vec<u8>, v: u64| b.extend_from_slice(&v.to_le_bytes());
        let put_v = |b: &mut Vec<u8>, v: &[f64]| {
            b.extend_from_slice(&(v.len() as u64).to_le_bytes());
            for x in v {
                b.extend_from_slice(&x.to_le_bytes());
            }
        };
        payload.extend_from_slice(&self.fingerprint);
        put_u(&mut payload, self.config.k as u64);
        payload.extend_from_slice(&self.config.tau.to_le_bytes());
        put_u(&mut payload, self.history.states.len() as u64);
        for s in &self.history.states {
            put_u(&mut payload, s.step as u64);
            payload.extend_from_slice(&s.t.to_le_bytes());
            for f in [&s.v, &s.p, &s.u, &s.w] {
                put_v(&mut payload, f);
            }
        }
        let digest = Sha256::digest(&payload);
        let mut file = std::fs::File::create(path)?;
        file.write_all(CHECKPOINT_MAGIC)?;
        file.write_all(&payload)?;
        file.write_all(&digest)?;
        Ok(())
    }

    /// Restores the history written by [`Stepper::save_checkpoint`]. The
    /// scheme order, step size and field sizes must match.
    pub fn load_checkpoint(&mut self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |m: &str| FsiError::Checkpoint(m.to_string());
        if bytes.len() < CHECKPOINT_MAGIC.len() + 32 || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let payload = &bytes[CHECKPOINT_MAGIC.len()..bytes.len() - 32];
        if Sha256::digest(payload).as_slice() != &bytes[bytes.len() - 32..] {
            return Err(bad("checksum mismatch"));
        }
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = payload.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(32)? != self.fingerprint {
            return Err(bad("written by a run with a different configuration"));
        }
        let mut read_u = || -> Result<u64> { Ok(u64::from_le_bytes(take(8)?.try_into().unwrap())) };
        let k = read_u()? as usize;
        let tau = f64::from_bits(read_u()?);
        if k != self.config.k || tau != self.config.tau {
            return Err(bad("scheme order or time step differ from the configuration"));
        }
        let count = read_u()? as usize;
        let d = self.disc.dof(self.disc.finest());
        let mut states = VecDeque::new();
        for _ in 0..count {
            let step = read_u()? as usize;
            let t = f64::from_bits(read_u()?);
            let mut fields = Vec::with_capacity(4);
            for expected in [d.n_velocity(), d.n_q1, d.n_velocity(), d.n_velocity()] {
                let len = read_u()? as usize;
                if len != expected {
                    return Err(bad("field size differs from the mesh"));
                }
                let mut f = Vec::with_capacity(len);
                for _ in 0..len {
                    f.push(f64::from_bits(read_u()?));
                }
                fields.push(f);
            }
            let w = fields.pop().unwrap();
            let u = fields.pop().unwrap();
            let p = fields.pop().unwrap();
            let v = fields.pop().unwrap();
            states.push_back(State { step, t, v, p, u, w });
        }
        if states.is_empty() {
            return Err(bad("empty history"));
        }
        self.history = StateHistory { states };
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8] = b"FSIGCSI-CKPT-1\n";
