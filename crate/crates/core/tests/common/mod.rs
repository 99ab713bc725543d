#![allow(dead_code)]

use std::path::Path;

use fsi_gcsi::bench::{parse_config, run_benchmark, RunConfig, RunSummary};

/// Config text with the output directory pointed at `dir`.
pub fn config(dir: &Path, body: &str) -> RunConfig {
    let text = format!("{body}\noutput.dir = {}\noutput.progress = false\n", dir.display());
    parse_config(&text).unwrap()
}

pub fn run(c: &RunConfig) -> RunSummary {
    let mut log = Vec::new();
    run_benchmark(c, &mut log).unwrap_or_else(|e| panic!("run failed: {e}\n{}", String::from_utf8_lossy(&log)))
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
