//! Link-level simulator for a TDD multi-user massive-MIMO system with
//! switched-beam UEs at 28 GHz.

pub mod beamforming;
pub mod capture;
pub mod channel;
pub mod linkbudget;
pub mod numerics;
pub mod scenario;
pub mod selection;

pub use beamforming::{
    calibration, equalizer, precoder, BeamformingError, CalibrationMatrix, FilterKind,
    PowerAllocation,
};
pub use capture::{
    capture_gain_stats, ingest_capture, selection_gain_range, CaptureError, PortGainStats,
};
pub use channel::{
    beam_gain, compose_dl, compose_ul, los_channel, synth_capture, AntennaKind, AntennaPattern,
    BsArray, CaptureRecord, ChannelError, HardwareResponse, Point3, Pose,
};
pub use linkbudget::{eirp, measured_pl, pl_comparison_table, theoretical_pl, LinkBudgetParams};
pub use numerics::{solve_hermitian, ComplexMatrix, NumericsError};
pub use scenario::{run_scenario, ScenarioConfig, ThroughputTrace};
pub use selection::{init_state, step_frame, FrameSchedule, SelectionMode, SelectionState};
