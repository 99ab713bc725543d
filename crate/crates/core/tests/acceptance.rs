//! One PASS/FAIL line per acceptance criterion.
//!
//! `cargo test --test acceptance` runs the fast criteria; the long-running
//! ones (7, 8, 9) need `-- --ignored` (only those) or `-- --include-ignored`.
//! Criterion numbers as extra arguments restrict the run, e.g. `-- --ignored 7 8`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsi_gcsi::bench::problems::{build_problem, manufactured_solve, observed_orders};
use fsi_gcsi::bench::verify::{loglog_slope, temporal_slopes};
use fsi_gcsi::bench::{oscillation_stats, parse_config, run_benchmark, Oscillation, RunSummary};
use fsi_gcsi::extension::{mesh_stiffness, ExtensionSolver};
use fsi_gcsi::fem::Discretization;
use fsi_gcsi::krylov::KrylovConfig;
use fsi_gcsi::mesh::{build_turek_coarse, BoundaryTag, GeometryParams, MeshHierarchy, Subdomain};
use fsi_gcsi::mg::SmootherParams;
use fsi_gcsi::stepper::{bdf_coefficients, Stepper};
use fsi_gcsi::weak_forms::{build_level_operators, Mode, StageOperatorSpec};
use fsi_gcsi::{FsiError, Result};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn bdf_exactness() -> Result<Outcome> {
    let b1 = bdf_coefficients(1)?;
    let b2 = bdf_coefficients(2)?;
    let exact = b1.gamma == 1.0 && b1.alphas == [-1.0] && b2.gamma == 2.0 / 3.0 && b2.alphas == [-4.0 / 3.0, 1.0 / 3.0];
    let mut worst: f64 = 0.0;
    for &(t, tau) in &[(0.3, 0.1), (1.7, 0.01), (2.0, 0.004), (0.05, 0.001)] {
        let samples: Vec<f64> = (0..3).map(|i| (t - i as f64 * tau) * (t - i as f64 * tau)).collect();
        worst = worst.max((b2.derivative(tau, &samples) - 2.0 * t).abs());
    }
    outcome(exact && worst <= 1e-12, format!("coefficients exact: {exact}, max |Δτ t² - 2t| = {worst:.2e}"))
}

fn operator_equivalence() -> Result<Outcome> {
    let disc = Discretization::new(MeshHierarchy::new(build_turek_coarse(&GeometryParams::turek())?, 1)?)?;
    let d = disc.dof(1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u: Vec<f64> = (0..d.n_velocity()).map(|_| rng.gen_range(-2e-3..2e-3)).collect();
    let wind = d.interpolate_vector(|x| [1.5 - 4.0 * (x[1] - 0.2).powi(2), 0.3 * x[0]]);
    let solid: Vec<bool> = disc.mesh(1).subdomain.iter().map(|&s| s == Subdomain::Solid).collect();
    // (rho_f, rho_s, eta_f, eta_s, 1/(gamma tau)): unit scale, then FSI2i scale
    let data = [(1.0, 2.0, 1.0, 5.0, 1.0), (1e3, 1e4, 1.0, 3333.0, 150.0)];
    let mut worst = [0.0f64; 2];
    let mut worst_rel_y = [0.0f64; 2];
    for (i, &(rf, rs, ef, es, igt)) in data.iter().enumerate() {
        for mode in [Mode::P, Mode::C] {
            let spec = StageOperatorSpec {
                mode,
                inv_gamma_tau: igt,
                rho_cell: solid.iter().map(|&s| if s { rs } else { rf }).collect(),
                eta_cell: solid.iter().map(|&s| if s { es } else { ef }).collect(),
                u_sharp: Some(u.clone()),
                v_circ: Some(wind.clone()),
                stabilization: true,
            };
            let ops = build_level_operators(&disc, &spec, &[BoundaryTag::Inflow, BoundaryTag::Walls, BoundaryTag::Cylinder], false)?;
            let op = &ops[1];
            let m = op.assemble()?;
            for _ in 0..10 {
                let x: Vec<f64> = (0..op.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut y = vec![0.0; op.n()];
                op.apply(&x, &mut y);
                let z = m.mul(&x);
                let norm = |a: &[f64]| a.iter().map(|a| a * a).sum::<f64>().sqrt();
                let diff: f64 = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst[i] = worst[i].max(diff / norm(&x));
                worst_rel_y[i] = worst_rel_y[i].max(diff / norm(&z));
            }
        }
    }
    let ok = worst[0] <= 1e-12 && worst_rel_y[1] <= 1e-12;
    outcome(
        ok,
        format!(
            "unit data: |y-Mx|/|x| {:.2e}; FSI2i data: |y-Mx|/|Mx| {:.2e} (|y-Mx|/|x| {:.2e}); P and C, 10 vectors each",
            worst[0], worst_rel_y[1], worst[1]
        ),
    )
}

fn spatial_convergence() -> Result<Outcome> {
    let k = KrylovConfig { tol: 1e-10, max_iter: 500, restart: 60 };
    let results: Vec<_> = (1..=3).map(|l| manufactured_solve(2, l, 1e3, 10.0, SmootherParams::P_DEFAULT, &k)).collect::<Result<_>>()?;
    let orders = observed_orders(&results);
    let ok = orders.iter().all(|&(v, p)| v >= 2.7 && p >= 1.7);
    outcome(ok, format!("(velocity, pressure) orders J=1→2→3: {orders:.3?}"))
}

fn temporal_convergence() -> Result<Outcome> {
    let taus = [0.1, 0.05, 0.025, 0.0125];
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [1usize, 2] {
        let s = loglog_slope(&temporal_slopes(k, &taus, 1.0)?);
        ok &= (s - k as f64).abs() <= 0.3;
        detail.push(format!("k={k} slope {s:.3}"));
    }
    outcome(ok, detail.join(", "))
}

fn first_step_iterations(j: usize) -> Result<Vec<usize>> {
    let c = parse_config(&format!("benchmark = fsi2i\nmesh.refinements = {j}\ntime.tau = 0.004\ntime.end = 0.004\nsolver.tol = 1e-6\n"))?;
    let p = build_problem(&c)?;
    let mut st = Stepper::new(p.disc, p.physics, c.scheme.clone(), p.initial)?;
    Ok(st.step()?.stage_iterations)
}

fn preconditioner_robustness() -> Result<Outcome> {
    let mut rows = Vec::new();
    for j in [2, 3, 4] {
        rows.push((j, first_step_iterations(j)?));
    }
    let caps = rows.iter().all(|(_, it)| it[0] <= 20 && it[1] <= 30);
    // flat: no level needs more than two corrector iterations above the coarsest one
    let c0 = rows[0].1[1];
    let trend = rows.iter().all(|(_, it)| it[1] <= c0 + 2);
    let text: Vec<String> = rows.iter().map(|(j, it)| format!("J={j}: P {} C {}", it[0], it[1])).collect();
    outcome(caps && trend, format!("{} (caps P≤20 C≤30: {caps}, C flat: {trend})", text.join(", ")))
}

fn contrast_robustness() -> Result<Outcome> {
    let k = KrylovConfig { tol: 1e-8, max_iter: 500, restart: 60 };
    let mut its = Vec::new();
    for c in [1e1, 1e2, 1e3, 1e4] {
        its.push(manufactured_solve(2, 3, c, 10.0, SmootherParams::P_DEFAULT, &k)?.iterations);
    }
    let (lo, hi) = (*its.iter().min().unwrap(), *its.iter().max().unwrap());
    outcome(hi <= 2 * lo, format!("FGMRES iterations for contrasts 1e1..1e4: {its:?}"))
}

fn run_in(dir: &Path, body: &str) -> Result<RunSummary> {
    let c = parse_config(&format!("{body}\noutput.dir = {}\noutput.progress = false\n", dir.display()))?;
    run_benchmark(&c, &mut std::io::sink())
}

fn max_drift(s: &RunSummary) -> (f64, f64) {
    let drift = |v: f64| (v / s.reference_volume - 1.0).abs();
    let max = s.records.iter().map(|r| drift(r.solid_volume)).fold(0.0, f64::max);
    (max, drift(s.records.last().map_or(s.reference_volume, |r| r.solid_volume)))
}

fn volume_correction() -> Result<Outcome> {
    let body = "benchmark = fsi2i\nmesh.refinements = 2\ntime.tau = 0.01\ntime.end = 4";
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let on = run_in(a.path(), body)?;
    let off = run_in(b.path(), &format!("{body}\nscheme.eta_v = inf"))?;
    let (on_max, on_end) = max_drift(&on);
    let (_, off_end) = max_drift(&off);
    outcome(
        on_max <= 0.01 && off_end > on_end,
        format!("max drift with correction {on_max:.3e}, terminal drift {on_end:.3e} with vs {off_end:.3e} without"),
    )
}

fn stability_over_explicit() -> Result<Outcome> {
    let mut tried = Vec::new();
    for tau in [0.01, 0.005, 0.002] {
        let body = format!("benchmark = fsi2i\nmesh.refinements = 2\ntime.tau = {tau}\ntime.end = {}", 200.0 * tau);
        let dir = tempfile::tempdir()?;
        let explicit = match run_in(dir.path(), &format!("{body}\nscheme.stages = P")) {
            Err(e @ (FsiError::Instability { .. } | FsiError::MeshTangled { .. })) => format!("diverged ({e})"),
            Err(e) => return Err(e),
            Ok(_) => {
                tried.push(format!("τ={tau}: P completed"));
                continue;
            }
        };
        let dir = tempfile::tempdir()?;
        let pc = run_in(dir.path(), &body).map(|s| s.records.len());
        let completed = matches!(pc, Ok(200));
        tried.push(format!("τ={tau}: P {explicit}, PC {}", if completed { "completed 200 steps".to_string() } else { format!("{pc:?}") }));
        if completed {
            return outcome(true, tried.join("; "));
        }
    }
    outcome(false, tried.join("; "))
}

fn benchmark_trend() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let s = run_in(dir.path(), "benchmark = fsi2i\nmesh.refinements = 3\ntime.tau = 0.005\ntime.end = 16")?;
    let text = format!("u_y(A) {}", s.oscillation);
    match s.oscillation {
        Oscillation::Steady(o) => outcome((1.6..=2.4).contains(&o.frequency) && (o.amplitude / 80.77e-3 - 1.0).abs() <= 0.3, text),
        Oscillation::NoSteadyOscillations => outcome(false, "no steady oscillations detected".into()),
    }
}

fn extension_correctness() -> Result<Outcome> {
    let g = GeometryParams::turek();
    let a = g.beam_tip();
    let disc = Arc::new(Discretization::new(MeshHierarchy::new(build_turek_coarse(&g)?, 1)?)?);
    let ext = ExtensionSolver::new(disc.clone(), a, 1e-13)?;
    let d = disc.dof(1);
    let f = d.interpolate_vector(|x| [(x[0] - 0.4) * x[1], 0.1 * (7.0 * x[0]).sin()]);
    let h = d.interpolate_vector(|x| [x[1] * x[1], -x[0]]);
    let combo: Vec<f64> = f.iter().zip(&h).map(|(p, q)| 2.5 * p - 0.75 * q).collect();
    let (ef, _) = ext.extend(&f)?;
    let (eh, _) = ext.extend(&h)?;
    let (ec, _) = ext.extend(&combo)?;
    let lin = (0..ec.len()).map(|k| (ec[k] - 2.5 * ef[k] + 0.75 * eh[k]).abs()).fold(0.0, f64::max);
    let solid = d.subdomain_nodes(disc.mesh(1), Subdomain::Solid);
    let repro = (0..d.n_q2).filter(|&k| solid[k]).all(|k| ef[k] == f[k] && ef[d.n_q2 + k] == f[d.n_q2 + k]);
    let stiff = mesh_stiffness(a, a);
    outcome(lin <= 1e-10 && repro && stiff == 51.0, format!("linearity {lin:.2e}, interface reproduced {repro}, stiffness at A {stiff}"))
}

fn oscillation_postprocessing() -> Result<Outcome> {
    let t: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.005).collect();
    let y: Vec<f64> = t.iter().map(|&t| 1.23e-3 + 80.77e-3 * (4.0 * PI * t).sin()).collect();
    let stats = oscillation_stats(&t, &y, 0.5);
    let text = stats.to_string();
    match stats {
        Oscillation::Steady(o) => {
            let ok = (o.mean / 1.23e-3 - 1.0).abs() <= 0.01 && (o.amplitude / 80.77e-3 - 1.0).abs() <= 0.01 && (o.frequency / 2.0 - 1.0).abs() <= 0.01;
            outcome(ok, text)
        }
        Oscillation::NoSteadyOscillations => outcome(false, "no period detected".into()),
    }
}

type Criterion = (usize, &'static str, bool, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 11] = [
    (1, "BDF exactness", false, bdf_exactness),
    (2, "matrix-free/assembled equivalence", false, operator_equivalence),
    (3, "spatial convergence", false, spatial_convergence),
    (4, "temporal convergence", false, temporal_convergence),
    (5, "preconditioner robustness", false, preconditioner_robustness),
    (6, "contrast robustness", false, contrast_robustness),
    (7, "volume-preserving correction", true, volume_correction),
    (8, "stability over the explicit scheme", true, stability_over_explicit),
    (9, "benchmark trend", true, benchmark_trend),
    (10, "extension correctness", false, extension_correctness),
    (11, "oscillation post-processing", false, oscillation_postprocessing),
];

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let only_long = args.iter().any(|a| a == "--ignored");
    let with_long = only_long || args.iter().any(|a| a == "--include-ignored");
    let picked: Vec<usize> = args.iter().skip(1).filter_map(|a| a.parse().ok()).collect();
    if args.iter().any(|a| a == "--list") {
        for (n, name, _, _) in CRITERIA {
            println!("criterion {n} {name}: test");
        }
        return;
    }
    let mut failed = 0;
    for (n, name, long, f) in CRITERIA {
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        if (long && !with_long) || (!long && only_long) {
            println!("SKIP {n:2} {name}: long-running, run with -- --ignored");
            continue;
        }
        let start = Instant::now();
        let o = f().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        failed += usize::from(!o.passed);
        println!("{} {n:2} {name}: {} [{:.1}s]", if o.passed { "PASS" } else { "FAIL" }, o.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
