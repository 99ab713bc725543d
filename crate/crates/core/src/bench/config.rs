//! Run configuration: `section.key = value` lines with `#` comments.
//!
//! ```text
//! benchmark = fsi2i
//! mesh.refinements = 2
//! time.tau = 0.01
//! time.end = 4
//! scheme.stages = PC
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use crate::error::{FsiError, Result};
use crate::materials::{FluidParams, SolidParams};
use crate::mesh::GeometryParams;
use crate::mg::SmootherParams;
use crate::stepper::SchemeConfig;
use crate::weak_forms::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Benchmark {
    Fsi2i,
    Fsi3i,
    StokesManufactured,
    Cavity,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Fsi2i => "fsi2i",
            Benchmark::Fsi3i => "fsi3i",
            Benchmark::StokesManufactured => "stokes_manufactured",
            Benchmark::Cavity => "cavity",
        }
    }

    pub fn is_fsi(self) -> bool {
        matches!(self, Benchmark::Fsi2i | Benchmark::Fsi3i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: String,
    /// Steps between VTK snapshots; 0 disables them.
    pub vtk_every: usize,
    /// Steps between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    pub progress: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    pub geometry: GeometryParams,
    pub fluid: FluidParams,
    pub solid: SolidParams,
    pub inflow_mean: f64,
    pub scheme: SchemeConfig,
    pub eta_v: Option<f64>,
    pub stabilization: bool,
    pub refinements: usize,
    pub end_time: f64,
    pub output: OutputConfig,
    pub point_a: [f64; 2],
    pub restart: Option<PathBuf>,
    /// Cells per side of the coarse square (manufactured and cavity problems).
    pub coarse_cells: usize,
    /// Viscosity ratio across the interface of the manufactured problem.
    pub contrast: f64,
    /// Reaction coefficient of the manufactured generalized Stokes problem.
    pub reaction: f64,
}

const KEYS: &[&str] = &[
    "benchmark",
    "mesh.refinements",
    "mesh.coarse_cells",
    "geometry.length",
    "geometry.height",
    "geometry.cylinder_x",
    "geometry.cylinder_y",
    "geometry.cylinder_radius",
    "geometry.beam_length",
    "geometry.beam_height",
    "fluid.rho",
    "fluid.eta",
    "solid.rho",
    "solid.mu",
    "inflow.mean",
    "time.tau",
    "time.end",
    "scheme.order",
    "scheme.stages",
    "scheme.eta_v",
    "scheme.stabilization",
    "solver.tol",
    "solver.max_iter",
    "solver.restart",
    "smoother.p.k_a",
    "smoother.p.m",
    "smoother.p.n",
    "smoother.p.k_s",
    "smoother.p.n_s",
    "smoother.c.k_a",
    "smoother.c.m",
    "smoother.c.n",
    "smoother.c.k_s",
    "smoother.c.n_s",
    "extension.tol",
    "track.x",
    "track.y",
    "output.dir",
    "output.csv",
    "output.vtk_every",
    "output.checkpoint_every",
    "output.progress",
    "restart.from",
    "manufactured.contrast",
    "manufactured.reaction",
];

/// Default parameters of a benchmark.
pub fn preset(benchmark: Benchmark) -> RunConfig {
    let geometry = GeometryParams::turek();
    let tip = geometry.beam_tip();
    let mut c = RunConfig {
        benchmark,
        geometry,
        fluid: FluidParams { eta_f: 1.0, rho_f: 1e3 },
        solid: SolidParams { mu_s: 0.5e6, rho_s: 1e4 },
        inflow_mean: 1.0,
        scheme: SchemeConfig::new(2, vec![Mode::P, Mode::C], 0.005),
        eta_v: Some(0.1),
        stabilization: true,
        refinements: 2,
        end_time: 1.0,
        output: OutputConfig { dir: PathBuf::from("."), csv: "series.csv".into(), vtk_every: 0, checkpoint_every: 0, progress: true },
        point_a: tip,
        restart: None,
        coarse_cells: 4,
        contrast: 1e3,
        reaction: 10.0,
    };
    match benchmark {
        Benchmark::Fsi2i => {}
        Benchmark::Fsi3i => {
            c.solid.mu_s = 2e6;
            c.solid.rho_s = 1e3;
            c.inflow_mean = 2.0;
        }
        Benchmark::StokesManufactured => {
            c.fluid = FluidParams { eta_f: 1.0, rho_f: 1.0 };
            c.eta_v = None;
            c.stabilization = false;
            c.refinements = 3;
            c.coarse_cells = 2;
        }
        Benchmark::Cavity => {
            c.fluid = FluidParams { eta_f: 0.01, rho_f: 1.0 };
            c.eta_v = None;
            c.inflow_mean = 1.0;
            c.point_a = [0.5, 0.5];
            c.scheme.tau = 0.01;
        }
    }
    c
}

fn parse_stages(s: &str) -> Option<Vec<Mode>> {
    let stages: Option<Vec<Mode>> = s
        .chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c.to_ascii_uppercase() {
            'P' => Some(Mode::P),
            'C' => Some(Mode::C),
            _ => None,
        })
        .collect();
    stages.filter(|s| !s.is_empty())
}

struct Entry {
    line: usize,
    value: String,
}

fn number(key: &str, e: &Entry) -> Result<f64> {
    e.value.parse::<f64>().map_err(|_| FsiError::Parse { line: e.line, msg: format!("{key}: expected a number, got '{}'", e.value) })
}

fn count(key: &str, e: &Entry) -> Result<usize> {
    e.value.parse::<usize>().map_err(|_| FsiError::Parse { line: e.line, msg: format!("{key}: expected a non-negative integer, got '{}'", e.value) })
}

fn boolean(key: &str, e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        v => Err(FsiError::Parse { line: e.line, msg: format!("{key}: expected true or false, got '{v}'") }),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: HashMap<String, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(FsiError::Parse { line, msg: format!("expected 'key = value', got '{content}'") });
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(FsiError::Parse { line, msg: format!("unknown key '{key}'") });
        }
        if entries.contains_key(&key) {
            return Err(FsiError::Parse { line, msg: format!("duplicate key '{key}'") });
        }
        entries.insert(key, Entry { line, value: v.trim().to_string() });
    }
    let bench = entries.get("benchmark").ok_or_else(|| FsiError::Config("missing required key 'benchmark'".into()))?;
    let benchmark = match bench.value.as_str() {
        "fsi2i" => Benchmark::Fsi2i,
        "fsi3i" => Benchmark::Fsi3i,
        "stokes_manufactured" => Benchmark::StokesManufactured,
        "cavity" => Benchmark::Cavity,
        other => return Err(FsiError::Parse { line: bench.line, msg: format!("unknown benchmark '{other}'") }),
    };
    let required: &[&str] = match benchmark {
        Benchmark::StokesManufactured => &["mesh.refinements"],
        _ => &["mesh.refinements", "time.tau", "time.end"],
    };
    for key in required {
        if !entries.contains_key(*key) {
            return Err(FsiError::Config(format!("missing required key '{key}'")));
        }
    }
    let mut c = preset(benchmark);
    let mut tip_moved = false;
    let mut ordered: Vec<(&String, &Entry)> = entries.iter().collect();
    ordered.sort_by_key(|(_, e)| e.line);
    for (key, e) in ordered {
        match key.as_str() {
            "benchmark" => {}
            "mesh.refinements" => c.refinements = count(key, e)?,
            "mesh.coarse_cells" => c.coarse_cells = count(key, e)?,
            "geometry.length" => c.geometry.channel_length = number(key, e)?,
            "geometry.height" => c.geometry.channel_height = number(key, e)?,
            "geometry.cylinder_x" => c.geometry.cylinder_center[0] = number(key, e)?,
            "geometry.cylinder_y" => c.geometry.cylinder_center[1] = number(key, e)?,
            "geometry.cylinder_radius" => c.geometry.cylinder_radius = number(key, e)?,
            "geometry.beam_length" => c.geometry.beam_length = number(key, e)?,
            "geometry.beam_height" => c.geometry.beam_height = number(key, e)?,
            "fluid.rho" => c.fluid.rho_f = number(key, e)?,
            "fluid.eta" => c.fluid.eta_f = number(key, e)?,
            "solid.rho" => c.solid.rho_s = number(key, e)?,
            "solid.mu" => c.solid.mu_s = number(key, e)?,
            "inflow.mean" => c.inflow_mean = number(key, e)?,
            "time.tau" => c.scheme.tau = number(key, e)?,
            "time.end" => c.end_time = number(key, e)?,
            "scheme.order" => c.scheme.k = count(key, e)?,
            "scheme.stages" => {
                c.scheme.stages = parse_stages(&e.value)
                    .ok_or_else(|| FsiError::Parse { line: e.line, msg: format!("{key}: expected a sequence of P and C, got '{}'", e.value) })?
            }
            "scheme.eta_v" => c.eta_v = if e.value == "inf" { None } else { Some(number(key, e)?) },
            "scheme.stabilization" => c.stabilization = boolean(key, e)?,
            "solver.tol" => c.scheme.krylov.tol = number(key, e)?,
            "solver.max_iter" => c.scheme.krylov.max_iter = count(key, e)?,
            "solver.restart" => c.scheme.krylov.restart = count(key, e)?,
            "extension.tol" => c.scheme.extension_tol = number(key, e)?,
            "track.x" => {
                c.point_a[0] = number(key, e)?;
                tip_moved = true;
            }
            "track.y" => {
                c.point_a[1] = number(key, e)?;
                tip_moved = true;
            }
            "output.dir" => c.output.dir = PathBuf::from(&e.value),
            "output.csv" => c.output.csv = e.value.clone(),
            "output.vtk_every" => c.output.vtk_every = count(key, e)?,
            "output.checkpoint_every" => c.output.checkpoint_every = count(key, e)?,
            "output.progress" => c.output.progress = boolean(key, e)?,
            "restart.from" => c.restart = Some(PathBuf::from(&e.value)),
            "manufactured.contrast" => c.contrast = number(key, e)?,
            "manufactured.reaction" => c.reaction = number(key, e)?,
            k if k.starts_with("smoother.") => {
                let v = count(key, e)?;
                let p = if k.starts_with("smoother.p.") { &mut c.scheme.smoother_p } else { &mut c.scheme.smoother_c };
                set_smoother(p, &k[11..], v);
            }
            _ => unreachable!("key list checked above"),
        }
    }
    if c.benchmark.is_fsi() && !tip_moved {
        c.point_a = c.geometry.beam_tip();
    }
    validate(&c)?;
    Ok(c)
}

fn set_smoother(p: &mut SmootherParams, field: &str, v: usize) {
    match field {
        "k_a" => p.k_a = v,
        "m" => p.m = v,
        "n" => p.n = v,
        "k_s" => p.k_s = v,
        _ => p.n_s = v,
    }
}

pub fn validate(c: &RunConfig) -> Result<()> {
    let positive = [
        ("fluid.rho", c.fluid.rho_f),
        ("fluid.eta", c.fluid.eta_f),
        ("solid.rho", c.solid.rho_s),
        ("solid.mu", c.solid.mu_s),
        ("time.tau", c.scheme.tau),
        ("solver.tol", c.scheme.krylov.tol),
        ("extension.tol", c.scheme.extension_tol),
        ("manufactured.contrast", c.contrast),
    ];
    for (k, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(FsiError::Config(format!("{k} must be positive and finite, got {v}")));
        }
    }
    if !(c.end_time >= 0.0) || !(c.inflow_mean >= 0.0) || !(c.reaction >= 0.0) {
        return Err(FsiError::Config("time.end, inflow.mean and manufactured.reaction must be non-negative".into()));
    }
    if let Some(e) = c.eta_v {
        if !(e > 0.0) {
            return Err(FsiError::Config(format!("scheme.eta_v must be positive or inf, got {e}")));
        }
    }
    if !(1..=2).contains(&c.scheme.k) {
        return Err(FsiError::Config(format!("scheme.order must be 1 or 2, got {}", c.scheme.k)));
    }
    if c.scheme.krylov.max_iter == 0 || c.scheme.krylov.restart == 0 {
        return Err(FsiError::Config("solver.max_iter and solver.restart must be positive".into()));
    }
    for p in [c.scheme.smoother_p, c.scheme.smoother_c] {
        if p.k_a == 0 || p.n == 0 || p.k_s == 0 {
            return Err(FsiError::Config("smoother degrees and cycle counts must be positive".into()));
        }
    }
    if c.coarse_cells == 0 {
        return Err(FsiError::Config("mesh.coarse_cells must be positive".into()));
    }
    if c.benchmark.is_fsi() {
        c.geometry.validate()?;
        let g = &c.geometry;
        let a = c.point_a;
        let x0 = g.beam_start_x() - 1e-12;
        let inside = a[0] >= x0
            && a[0] <= g.beam_tip()[0] + 1e-12
            && (a[1] - g.cylinder_center[1]).abs() <= 0.5 * g.beam_height + 1e-12;
        if !inside {
            return Err(FsiError::Config(format!("tracking point ({}, {}) lies outside the beam", a[0], a[1])));
        }
    }
    Ok(())
}
