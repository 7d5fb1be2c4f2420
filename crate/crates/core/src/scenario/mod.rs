//! Campaign engine: trajectories, per-frame multi-UE uplink simulation with
//! or without beam selection, throughput mapping and trace statistics.

pub mod config;
pub mod engine;
pub mod stats;
pub mod trace;
pub mod trajectory;

pub use config::{
    BsConfig, CaptureConfig, ConfigError, EqualizerChoice, EqualizerConfig, OfdmNumerology,
    ScenarioConfig, UeConfig, MAX_UES,
};
pub use engine::{run_scenario, run_scenario_detailed, ScenarioError, ScenarioOutput};
pub use stats::{
    cdf, median, median_gain, throughput_from_sinr, write_cdf_csv, CdfPoint, StatsError,
};
pub use trace::{summarize, GainValue, RunSummary, ThroughputTrace, TraceRow, UeSummary};
pub use trajectory::{facing_pose, trajectory_position, Trajectory};
