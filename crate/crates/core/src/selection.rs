//! UE antenna-selection state machine and the analog control-delay budget.
//!
//! One [`SelectionState`] is kept per UE and stepped once per frame. The
//! state describes the ports in use *during* the frame; `step_frame`
//! consumes that frame's observations and yields the next frame's state.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_PORTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("invalid magnitude {value} at port {port}")]
    InvalidMagnitude { port: usize, value: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Init,
    BeamSweepPreSync,
    BeamSweepPostSync,
    Idle,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Init => "init",
            SelectionMode::BeamSweepPreSync => "beam_sweep_pre_sync",
            SelectionMode::BeamSweepPostSync => "beam_sweep_post_sync",
            SelectionMode::Idle => "idle",
        }
    }

    /// Whether `self -> next` is one of the machine's transitions
    /// (self-loops of sweeping and idle frames included).
    pub fn can_transition_to(self, next: SelectionMode) -> bool {
        use SelectionMode::*;
        matches!(
            (self, next),
            (Init, BeamSweepPreSync)
                | (BeamSweepPreSync, BeamSweepPreSync)
                | (BeamSweepPreSync, Idle)
                | (Idle, Idle)
                | (Idle, BeamSweepPostSync)
                | (BeamSweepPostSync, BeamSweepPostSync)
                | (BeamSweepPostSync, Idle)
        )
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSchedule {
    pub frame_duration_ms: f64,
    pub guard_duration_us: f64,
    pub sweep_frames: usize,
    pub idle_frames: usize,
}

pub const DEFAULT_FRAME_MS: f64 = 10.0;
pub const DEFAULT_GUARD_US: f64 = 71.9;
pub const DEFAULT_IDLE_FRAMES: usize = 6;

impl Default for FrameSchedule {
    fn default() -> Self {
        Self {
            frame_duration_ms: DEFAULT_FRAME_MS,
            guard_duration_us: DEFAULT_GUARD_US,
            sweep_frames: NUM_PORTS,
            idle_frames: DEFAULT_IDLE_FRAMES,
        }
    }
}

/// Allowed mismatch between the guard slot and one OFDM symbol.
pub const GUARD_SYMBOL_TOLERANCE_US: f64 = 0.1;

impl FrameSchedule {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(self.frame_duration_ms > 0.0) {
            return Err(SelectionError::InvalidSchedule(format!(
                "frame_duration_ms must be positive, got {}",
                self.frame_duration_ms
            )));
        }
        if !(self.guard_duration_us > 0.0) {
            return Err(SelectionError::InvalidSchedule(format!(
                "guard_duration_us must be positive, got {}",
                self.guard_duration_us
            )));
        }
        if self.sweep_frames != NUM_PORTS {
            return Err(SelectionError::InvalidSchedule(format!(
                "sweep_frames must equal the {NUM_PORTS} UE ports, got {}",
                self.sweep_frames
            )));
        }
        if self.idle_frames == 0 {
            return Err(SelectionError::InvalidSchedule(
                "idle_frames must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Checks the guard slot against one OFDM symbol of duration `symbol_us`.
    pub fn check_symbol_duration(&self, symbol_us: f64) -> Result<(), SelectionError> {
        if (symbol_us - self.guard_duration_us).abs() > GUARD_SYMBOL_TOLERANCE_US {
            return Err(SelectionError::InvalidSchedule(format!(
                "guard {} us differs from the {symbol_us} us OFDM symbol by more than {GUARD_SYMBOL_TOLERANCE_US} us",
                self.guard_duration_us
            )));
        }
        Ok(())
    }

    pub fn guard_duration_ns(&self) -> f64 {
        self.guard_duration_us * 1e3
    }

    pub fn sweep_duration_ms(&self) -> f64 {
        self.sweep_frames as f64 * self.frame_duration_ms
    }

    pub fn cycle_frames(&self) -> usize {
        self.sweep_frames + self.idle_frames
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub mode: SelectionMode,
    pub tx_port: usize,
    pub rx_port: usize,
    /// Frames elapsed since `init_state`.
    pub sample_counter: u64,
    pub sweep_frame: usize,
    pub port_magnitudes: [f64; NUM_PORTS],
    pub synced: bool,
    pub idle_frames_remaining: usize,
}

pub fn init_state() -> SelectionState {
    SelectionState {
        mode: SelectionMode::Init,
        tx_port: 0,
        rx_port: 0,
        sample_counter: 0,
        sweep_frame: 0,
        port_magnitudes: [0.0; NUM_PORTS],
        synced: false,
        idle_frames_remaining: 0,
    }
}

impl SelectionState {
    pub fn check_invariants(&self) -> Result<(), SelectionError> {
        if self.tx_port >= NUM_PORTS || self.rx_port >= NUM_PORTS {
            return Err(SelectionError::InvariantViolation(format!(
                "ports ({}, {}) out of range",
                self.tx_port, self.rx_port
            )));
        }
        match self.mode {
            SelectionMode::Idle if self.tx_port != self.rx_port => {
                Err(SelectionError::InvariantViolation(
                    "idle mode with different Tx and Rx ports".into(),
                ))
            }
            SelectionMode::BeamSweepPostSync if self.rx_port != self.sweep_frame => {
                Err(SelectionError::InvariantViolation(
                    "post-sync sweep Rx port out of step with sweep frame".into(),
                ))
            }
            SelectionMode::Idle | SelectionMode::BeamSweepPostSync if !self.synced => {
                Err(SelectionError::InvariantViolation(format!(
                    "{} mode before synchronization",
                    self.mode
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Observations made by the UE during one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameInput {
    pub sync_success: bool,
    /// DL channel magnitude per port; only the entry of the port being
    /// listened on is read.
    pub per_port_magnitude: Option<[f64; NUM_PORTS]>,
}

/// What the machine did on a step, for the transition log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    EnterSweep,
    SyncFailed,
    Synced,
    Hold,
    StartSweep,
    Measure,
    Update,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::EnterSweep => "enter_sweep",
            Decision::SyncFailed => "sync_failed",
            Decision::Synced => "synced",
            Decision::Hold => "hold",
            Decision::StartSweep => "start_sweep",
            Decision::Measure => "measure",
            Decision::Update => "update",
        }
    }
}

/// Index of the largest magnitude, ties going to the lowest index.
pub fn select_port(magnitudes: &[f64; NUM_PORTS]) -> Result<usize, SelectionError> {
    let mut best = 0;
    for (port, &value) in magnitudes.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(SelectionError::InvalidMagnitude { port, value });
        }
        if value > magnitudes[best] {
            best = port;
        }
    }
    Ok(best)
}

pub fn step_frame(
    state: &SelectionState,
    schedule: &FrameSchedule,
    input: &FrameInput,
) -> Result<SelectionState, SelectionError> {
    step_frame_logged(state, schedule, input).map(|(s, _)| s)
}

/// As [`step_frame`], also reporting the decision taken.
pub fn step_frame_logged(
    state: &SelectionState,
    schedule: &FrameSchedule,
    input: &FrameInput,
) -> Result<(SelectionState, Decision), SelectionError> {
    state.check_invariants()?;
    let mut next = state.clone();
    next.sample_counter += 1;
    let decision = match state.mode {
        SelectionMode::Init => {
            next.mode = SelectionMode::BeamSweepPreSync;
            next.tx_port = 0;
            next.rx_port = 0;
            Decision::EnterSweep
        }
        SelectionMode::BeamSweepPreSync => {
            if input.sync_success {
                next.tx_port = state.rx_port;
                next.synced = true;
                next.mode = SelectionMode::Idle;
                next.idle_frames_remaining = schedule.idle_frames;
                Decision::Synced
            } else {
                next.rx_port = (state.rx_port + 1) % NUM_PORTS;
                Decision::SyncFailed
            }
        }
        SelectionMode::Idle => {
            next.idle_frames_remaining = state.idle_frames_remaining.saturating_sub(1);
            if next.idle_frames_remaining == 0 {
                next.mode = SelectionMode::BeamSweepPostSync;
                next.sweep_frame = 0;
                next.rx_port = 0;
                next.port_magnitudes = [0.0; NUM_PORTS];
                Decision::StartSweep
            } else {
                Decision::Hold
            }
        }
        SelectionMode::BeamSweepPostSync => {
            let observed = input.per_port_magnitude.ok_or_else(|| {
                SelectionError::InvariantViolation(format!(
                    "missing DL magnitude during sweep frame {}",
                    state.sweep_frame
                ))
            })?;
            let port = state.rx_port;
            let value = observed[port];
            if !(value >= 0.0) || !value.is_finite() {
                return Err(SelectionError::InvalidMagnitude { port, value });
            }
            next.port_magnitudes[port] = value;
            if state.sweep_frame + 1 == schedule.sweep_frames {
                let chosen = select_port(&next.port_magnitudes)?;
                next.tx_port = chosen;
                next.rx_port = chosen;
                next.sweep_frame = 0;
                next.mode = SelectionMode::Idle;
                next.idle_frames_remaining = schedule.idle_frames;
                Decision::Update
            } else {
                next.sweep_frame = state.sweep_frame + 1;
                next.rx_port = next.sweep_frame;
                Decision::Measure
            }
        }
    };
    debug_assert!(state.mode.can_transition_to(next.mode));
    Ok((next, decision))
}

/// Measured switching delays of the analog control path, nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchDelays {
    pub digital_edge: u64,
    pub frecon_spdt: u64,
    pub fem_spdt: u64,
    pub fem_sp4t: u64,
}

impl Default for SwitchDelays {
    fn default() -> Self {
        Self {
            digital_edge: 100,
            frecon_spdt: 20,
            fem_spdt: 85,
            fem_sp4t: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPath {
    /// TDD switch of the frequency converter.
    Frecon,
    /// TDD switch plus port switch of the front-end module.
    Fem,
}

pub fn total_delay(d: &SwitchDelays, path: ControlPath) -> u64 {
    match path {
        ControlPath::Frecon => d.digital_edge + d.frecon_spdt,
        ControlPath::Fem => d.digital_edge + d.fem_spdt + d.fem_sp4t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardVerdict {
    Fits,
    Violates,
}

impl GuardVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            GuardVerdict::Fits => "fits",
            GuardVerdict::Violates => "violates",
        }
    }
}

pub fn check_guard(delay_ns: u64, schedule: &FrameSchedule) -> GuardVerdict {
    if delay_ns as f64 <= schedule.guard_duration_ns() {
        GuardVerdict::Fits
    } else {
        GuardVerdict::Violates
    }
}

/// One row of the exported transition log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLogRow {
    pub frame_idx: u64,
    pub mode: SelectionMode,
    pub tx_port: usize,
    pub rx_port: usize,
    pub magnitudes: [f64; NUM_PORTS],
    pub decision: Decision,
}

impl TransitionLogRow {
    /// Row describing frame `frame_idx`, which ran in `before` and
    /// produced `decision`.
    pub fn new(
        frame_idx: u64,
        before: &SelectionState,
        after: &SelectionState,
        decision: Decision,
    ) -> Self {
        Self {
            frame_idx,
            mode: before.mode,
            tx_port: before.tx_port,
            rx_port: before.rx_port,
            magnitudes: after.port_magnitudes,
            decision,
        }
    }
}

pub const TRANSITION_LOG_COLUMNS: &str =
    "frame_idx,mode,tx_port,rx_port,mag0,mag1,mag2,mag3,decision";

pub fn write_transition_log<W: Write>(mut w: W, rows: &[TransitionLogRow]) -> io::Result<()> {
    writeln!(w, "{TRANSITION_LOG_COLUMNS}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:e},{:e},{:e},{:e},{}",
            r.frame_idx,
            r.mode,
            r.tx_port,
            r.rx_port,
            r.magnitudes[0],
            r.magnitudes[1],
            r.magnitudes[2],
            r.magnitudes[3],
            r.decision.as_str()
        )?;
    }
    Ok(())
}
