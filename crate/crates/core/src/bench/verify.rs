//! Self-checks runnable from the command line.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::problems::{manufactured_solve, observed_orders, unsteady};
use crate::bench::stats::{oscillation_stats, Oscillation};
use crate::error::{FsiError, Result};
use crate::extension::{mesh_stiffness, ExtensionSolver};
use crate::fem::Discretization;
use crate::krylov::KrylovConfig;
use crate::mesh::{build_turek_coarse, BoundaryTag, GeometryParams, MeshHierarchy, Subdomain};
use crate::mg::SmootherParams;
use crate::stepper::{bdf_coefficients, SchemeConfig};
use crate::weak_forms::{build_level_operators, Mode, StageOperatorSpec};

pub const SUITES: [&str; 6] = ["bdf", "operators", "extension", "oscillation", "stokes", "temporal"];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

pub fn run_suite(name: &str, log: &mut dyn Write) -> Result<Vec<Check>> {
    let names: Vec<&str> = if name == "all" { SUITES.to_vec() } else { vec![name] };
    let mut out = Vec::new();
    for n in names {
        let checks = match n {
            "bdf" => bdf()?,
            "operators" => operators()?,
            "extension" => extension()?,
            "oscillation" => oscillation(),
            "stokes" => stokes()?,
            "temporal" => temporal()?,
            other => return Err(FsiError::Config(format!("unknown suite '{other}' (expected one of {}, all)", SUITES.join(", ")))),
        };
        for c in &checks {
            writeln!(log, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        out.extend(checks);
    }
    Ok(out)
}

fn bdf() -> Result<Vec<Check>> {
    let b1 = bdf_coefficients(1)?;
    let b2 = bdf_coefficients(2)?;
    let exact = b1.gamma == 1.0 && b1.alphas == [-1.0] && b2.gamma == 2.0 / 3.0 && b2.alphas == [-4.0 / 3.0, 1.0 / 3.0];
    let (t, tau) = (1.7, 0.01);
    let d = b2.derivative(tau, &[t * t, (t - tau) * (t - tau), (t - 2.0 * tau) * (t - 2.0 * tau)]);
    Ok(vec![
        check("bdf coefficients", exact, format!("k=1 {:?}, k=2 {:?}", (b1.gamma, &b1.alphas), (b2.gamma, &b2.alphas))),
        check("bdf2 derivative of t^2", (d - 2.0 * t).abs() <= 1e-12, format!("error {:.2e}", (d - 2.0 * t).abs())),
    ])
}

fn operators() -> Result<Vec<Check>> {
    let mesh = build_turek_coarse(&GeometryParams::turek())?;
    let disc = Discretization::new(MeshHierarchy::new(mesh, 1)?)?;
    let fine = disc.finest();
    let d = disc.dof(fine);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u: Vec<f64> = (0..d.n_velocity()).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let wind = d.interpolate_vector(|x| [1.0 + x[1], x[0] - 0.3]);
    let solid = disc.mesh(fine).subdomain.iter().map(|&s| s == Subdomain::Solid);
    let eta: Vec<f64> = solid.clone().map(|s| if s { 5.0 } else { 1.0 }).collect();
    let rho: Vec<f64> = solid.map(|s| if s { 2.0 } else { 1.0 }).collect();
    let mut checks = Vec::new();
    for mode in [Mode::P, Mode::C] {
        let spec = StageOperatorSpec {
            mode,
            inv_gamma_tau: 10.0,
            rho_cell: rho.clone(),
            eta_cell: eta.clone(),
            u_sharp: Some(u.clone()),
            v_circ: Some(wind.clone()),
            stabilization: true,
        };
        let ops = build_level_operators(&disc, &spec, &[BoundaryTag::Inflow, BoundaryTag::Walls, BoundaryTag::Cylinder], false)?;
        let op = &ops[fine];
        let m = op.assemble()?;
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let x: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut y = vec![0.0; op.n()];
            op.apply(&x, &mut y);
            let z = m.mul(&x);
            let diff = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            worst = worst.max(diff / x.iter().map(|a| a * a).sum::<f64>().sqrt());
        }
        checks.push(check(&format!("matrix-free vs assembled ({mode:?})"), worst <= 1e-12, format!("{worst:.2e}")));
    }
    Ok(checks)
}

fn extension() -> Result<Vec<Check>> {
    let mesh = build_turek_coarse(&GeometryParams::turek())?;
    let disc = Arc::new(Discretization::new(MeshHierarchy::new(mesh, 1)?)?);
    let a = GeometryParams::turek().beam_tip();
    let ext = ExtensionSolver::new(disc.clone(), a, 1e-13)?;
    let d = disc.dof(1);
    let f = d.interpolate_vector(|x| [(x[0] - 0.4) * x[1], 0.1 * (x[0] * 7.0).sin()]);
    let g = d.interpolate_vector(|x| [x[1] * x[1], -x[0]]);
    let comb: Vec<f64> = f.iter().zip(&g).map(|(p, q)| 3.0 * p - 0.5 * q).collect();
    let (ef, _) = ext.extend(&f)?;
    let (eg, _) = ext.extend(&g)?;
    let (ec, _) = ext.extend(&comb)?;
    let lin = (0..ec.len()).map(|k| (ec[k] - 3.0 * ef[k] + 0.5 * eg[k]).abs()).fold(0.0, f64::max);
    let solid = d.subdomain_nodes(disc.mesh(1), Subdomain::Solid);
    let repro = (0..d.n_q2).filter(|&k| solid[k]).all(|k| ef[k] == f[k] && ef[d.n_q2 + k] == f[d.n_q2 + k]);
    Ok(vec![
        check("mesh stiffness at A", mesh_stiffness(a, a) == 51.0, format!("{}", mesh_stiffness(a, a))),
        check("extension linearity", lin <= 1e-10, format!("{lin:.2e}")),
        check("interface data reproduced", repro, String::new()),
    ])
}

fn oscillation() -> Vec<Check> {
    let t: Vec<f64> = (1..=3200).map(|i| i as f64 * 0.005).collect();
    let s: Vec<f64> = t.iter().map(|t| 1.23e-3 + 80.77e-3 * (4.0 * std::f64::consts::PI * t).sin()).collect();
    let o = oscillation_stats(&t, &s, 0.8);
    let ok = match o {
        Oscillation::Steady(o) => {
            (o.mean - 1.23e-3).abs() <= 0.01 * 1.23e-3 && (o.amplitude - 80.77e-3).abs() <= 0.01 * 80.77e-3 && (o.frequency - 2.0).abs() <= 0.02
        }
        Oscillation::NoSteadyOscillations => false,
    };
    vec![check("oscillation statistics of analytic signal", ok, o.to_string())]
}

fn stokes() -> Result<Vec<Check>> {
    let k = KrylovConfig { tol: 1e-10, max_iter: 500, restart: 60 };
    let results: Vec<_> = (1..=3).map(|l| manufactured_solve(2, l, 1e3, 10.0, SmootherParams::P_DEFAULT, &k)).collect::<Result<_>>()?;
    let orders = observed_orders(&results);
    let (ov, op) = orders.iter().fold((f64::INFINITY, f64::INFINITY), |(a, b), o| (a.min(o.0), b.min(o.1)));
    Ok(vec![
        check("velocity L2 order", ov >= 2.7, format!("{orders:.3?}")),
        check("pressure L2 order", op >= 1.7, format!("{orders:.3?}")),
    ])
}

/// Time-step halvings of the unsteady manufactured flow.
pub fn temporal_slopes(k: usize, taus: &[f64], t_end: f64) -> Result<Vec<(f64, f64)>> {
    let mut errs = Vec::new();
    for &tau in taus {
        let mut scheme = SchemeConfig::new(k, vec![Mode::P, Mode::C], tau);
        scheme.krylov.tol = 1e-11;
        errs.push((tau, unsteady::time_error(&scheme, t_end, 2, 1, 1.0, 0.1)?));
    }
    Ok(errs)
}

/// Least-squares slope of `log e` against `log τ`.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn temporal() -> Result<Vec<Check>> {
    let taus = [0.1, 0.05, 0.025, 0.0125];
    let mut checks = Vec::new();
    for k in [1, 2] {
        let e = temporal_slopes(k, &taus, 1.0)?;
        let s = loglog_slope(&e);
        checks.push(check(&format!("GCSI{k}PC temporal order"), (s - k as f64).abs() <= 0.3, format!("slope {s:.3}, errors {:?}", e)));
    }
    Ok(checks)
}
