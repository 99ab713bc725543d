use fsi_gcsi::bench::parse_config;
use fsi_gcsi::bench::problems::{build_problem, manufactured_solve};
use fsi_gcsi::krylov::KrylovConfig;
use fsi_gcsi::mg::SmootherParams;
use fsi_gcsi::stepper::Stepper;

#[test]
fn iterations_flat_across_viscosity_contrast() {
    let k = KrylovConfig { tol: 1e-8, max_iter: 300, restart: 60 };
    let its: Vec<usize> = [1e1, 1e2, 1e3, 1e4]
        .iter()
        .map(|&c| manufactured_solve(2, 3, c, 10.0, SmootherParams::P_DEFAULT, &k).unwrap().iterations)
        .collect();
    let (lo, hi) = (*its.iter().min().unwrap(), *its.iter().max().unwrap());
    assert!(hi <= 2 * lo, "{its:?}");
}

#[test]
fn first_step_iterations_within_caps() {
    let c = parse_config("benchmark = fsi2i\nmesh.refinements = 2\ntime.tau = 0.004\ntime.end = 0.004\n").unwrap();
    let p = build_problem(&c).unwrap();
    let mut st = Stepper::new(p.disc, p.physics, c.scheme.clone(), p.initial).unwrap();
    let r = st.step().unwrap();
    assert_eq!(r.stage_iterations.len(), 2);
    assert!(r.stage_iterations[0] <= 20, "{r:?}");
    assert!(r.stage_iterations[1] <= 30, "{r:?}");
    assert!(r.stage_residuals.iter().all(|&e| e < 1e-6));
}
