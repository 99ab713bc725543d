//! Benchmark definitions, configuration, output and post-processing.

pub mod config;
pub mod output;
pub mod problems;
pub mod run;
pub mod stats;
pub mod verify;

pub use config::{parse_config, preset, Benchmark, RunConfig};
pub use output::{read_series, read_vtk, write_fields, TimeSeriesRecord};
pub use problems::inflow_profile_2d;
pub use run::{run_benchmark, RunSummary};
pub use stats::{oscillation_stats, Oscillation, OscillationStats};
