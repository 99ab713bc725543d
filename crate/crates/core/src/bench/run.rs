//! The time loop of a benchmark run and the manufactured convergence study.

use std::io::Write;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::bench::config::{Benchmark, RunConfig};
use crate::bench::output::{write_fields, SeriesWriter, TimeSeriesRecord};
use crate::bench::problems::{build_problem, manufactured_solve, observed_orders, ManufacturedResult};
use crate::bench::stats::{oscillation_stats, Oscillation};
use crate::error::{FsiError, Result};
use crate::stepper::Stepper;
use crate::weak_forms::solid_volume;

/// Fraction of the run excluded from the oscillation statistics.
pub const TRANSIENT_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub records: Vec<TimeSeriesRecord>,
    pub oscillation: Oscillation,
    pub reference_volume: f64,
    pub csv: PathBuf,
    pub manufactured: Vec<ManufacturedResult>,
}

/// Digest of everything that determines the discrete trajectory.
pub fn fingerprint(c: &RunConfig) -> [u8; 32] {
    let mut core = c.clone();
    core.end_time = 0.0;
    core.restart = None;
    core.output = crate::bench::config::preset(c.benchmark).output;
    Sha256::digest(format!("{core:?}").as_bytes()).into()
}

/// Number of steps needed to reach `end_time`.
pub fn step_count(c: &RunConfig) -> usize {
    (c.end_time / c.scheme.tau).round() as usize
}

pub fn run_benchmark(c: &RunConfig, log: &mut dyn Write) -> Result<RunSummary> {
    std::fs::create_dir_all(&c.output.dir)?;
    if c.benchmark == Benchmark::StokesManufactured {
        return run_manufactured(c, log);
    }
    let problem = build_problem(c)?;
    let disc = problem.disc.clone();
    let fine = disc.finest();
    let mesh = disc.mesh(fine);
    let dofs = disc.dof(fine).clone();
    let reference = disc.reference_geometry[fine].clone();
    let (probe_cell, probe_xi) = if c.benchmark.is_fsi() {
        mesh.locate(c.point_a)
            .ok_or_else(|| FsiError::Config(format!("tracking point ({}, {}) is outside the mesh", c.point_a[0], c.point_a[1])))?
    } else {
        (0, [0.0, 0.0])
    };
    let mut stepper = Stepper::new(disc.clone(), problem.physics, c.scheme.clone(), problem.initial)?;
    stepper.fingerprint = fingerprint(c);
    if let Some(path) = &c.restart {
        stepper.load_checkpoint(path)?;
        writeln!(log, "restarted from {} at step {}", path.display(), stepper.current().step)?;
    }
    let reference_volume = solid_volume(mesh, &dofs, &reference, &vec![0.0; dofs.n_velocity()]);
    let csv = c.output.dir.join(&c.output.csv);
    let mut series = SeriesWriter::create(&csv, c.scheme.stages.len())?;
    let n_end = step_count(c);
    writeln!(
        log,
        "{} {} J={} tau={} steps={} dofs={}",
        c.benchmark.name(),
        c.scheme.label(),
        c.refinements,
        c.scheme.tau,
        n_end,
        dofs.n_total()
    )?;
    let vtk_path = |step: usize| c.output.dir.join(format!("fields_{step:06}.vtk"));
    if c.output.vtk_every > 0 && c.restart.is_none() {
        write_fields(mesh, &dofs, stepper.current(), &vtk_path(0))?;
    }
    let mut records = Vec::with_capacity(n_end);
    while stepper.current().step < n_end {
        let report = match stepper.step() {
            Ok(r) => r,
            Err(e) => {
                writeln!(log, "aborted: {e}")?;
                return Err(e);
            }
        };
        let s = stepper.current();
        let u_a = dofs.eval_vector(&s.u, probe_cell, probe_xi);
        let rec = TimeSeriesRecord {
            t: s.t,
            ux_a: u_a[0],
            uy_a: u_a[1],
            solid_volume: solid_volume(mesh, &dofs, &reference, &s.u),
            stage_iterations: report.stage_iterations.clone(),
            extension_iterations: report.extension_iterations,
        };
        series.push(&rec)?;
        if c.output.progress {
            writeln!(
                log,
                "step {:6} t {:.5} it {:?} ext {:3} u_A ({:+.5e}, {:+.5e})",
                report.step, rec.t, rec.stage_iterations, rec.extension_iterations, rec.ux_a, rec.uy_a
            )?;
        }
        records.push(rec);
        if c.output.vtk_every > 0 && s.step % c.output.vtk_every == 0 {
            write_fields(mesh, &dofs, s, &vtk_path(s.step))?;
        }
        if c.output.checkpoint_every > 0 && s.step % c.output.checkpoint_every == 0 {
            stepper.save_checkpoint(&c.output.dir.join("checkpoint.bin"))?;
        }
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let uy: Vec<f64> = records.iter().map(|r| r.uy_a).collect();
    let oscillation = oscillation_stats(&t, &uy, TRANSIENT_FRACTION * c.end_time);
    if c.benchmark.is_fsi() {
        writeln!(log, "u_y(A): {oscillation}")?;
    }
    Ok(RunSummary { records, oscillation, reference_volume, csv, manufactured: Vec::new() })
}

/// Errors of the two-material manufactured problem on levels `1..=J`.
pub fn run_manufactured(c: &RunConfig, log: &mut dyn Write) -> Result<RunSummary> {
    let mut results = Vec::new();
    writeln!(log, "{:>5} {:>10} {:>14} {:>14} {:>6}", "level", "h", "L2(v)", "L2(p)", "iters")?;
    for level in 1..=c.refinements.max(1) {
        let r = manufactured_solve(c.coarse_cells, level, c.contrast, c.reaction, c.scheme.smoother_p, &c.scheme.krylov)?;
        writeln!(log, "{:5} {:10.4e} {:14.6e} {:14.6e} {:6}", r.level, r.h, r.velocity_error, r.pressure_error, r.iterations)?;
        results.push(r);
    }
    for (i, (ov, op)) in observed_orders(&results).iter().enumerate() {
        writeln!(log, "order {}->{}: velocity {ov:.3}, pressure {op:.3}", results[i].level, results[i + 1].level)?;
    }
    let csv = c.output.dir.join(&c.output.csv);
    let mut w = csv::Writer::from_path(&csv).map_err(|e| FsiError::Io(std::io::Error::other(e.to_string())))?;
    let io = |e: csv::Error| FsiError::Io(std::io::Error::other(e.to_string()));
    w.write_record(["level", "h", "velocity_error", "pressure_error", "iterations"]).map_err(io)?;
    for r in &results {
        w.write_record([r.level.to_string(), r.h.to_string(), r.velocity_error.to_string(), r.pressure_error.to_string(), r.iterations.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(RunSummary { records: Vec::new(), oscillation: Oscillation::NoSteadyOscillations, reference_volume: 0.0, csv, manufactured: results })
}
