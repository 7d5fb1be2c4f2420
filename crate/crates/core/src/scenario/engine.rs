use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beamforming::{
    default_rzf_alpha, equalizer, post_eq_sinr, zf_fallback_alpha, BeamformingError, FilterKind,
    PowerAllocation,
};
use crate::channel::{
    channel_over_band, complex_gaussian, stream_rng, ChannelError, HardwareResponse, Pose,
};
use crate::numerics::ComplexMatrix;
use crate::selection::{
    init_state, step_frame_logged, Decision, FrameInput, SelectionError, SelectionMode,
    SelectionState, TransitionLogRow, NUM_PORTS,
};

use super::config::{ConfigError, ScenarioConfig};
use super::stats::throughput_from_weighted_sinr;
use super::trace::{ThroughputTrace, TraceRow};
use super::trajectory::{facing_pose, trajectory_position};

/// Clamp for reporting SINRs that are infinite or zero.
pub const SINR_DB_LIMIT: f64 = 200.0;
/// RNG stream carrying measurement and sync noise.
const NOISE_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub trace: ThroughputTrace,
    /// One transition log per UE; empty when selection is disabled.
    pub selection_logs: Vec<Vec<TransitionLogRow>>,
    /// Frames where ZF was rank deficient and RZF was substituted.
    pub fallback_frames: Vec<u64>,
    pub sync_frame: Vec<Option<u64>>,
    /// Frame of the first completed post-sync sweep of each UE.
    pub first_update_frame: Vec<Option<u64>>,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ThroughputTrace, ScenarioError> {
    run_scenario_detailed(config).map(|o| o.trace)
}

/// Per-UE state that never leaves the engine.
struct UeLink {
    hw: HardwareResponse,
    fsm: SelectionState,
    /// Only used when selection is disabled.
    synced_fixed: bool,
}

impl UeLink {
    fn synced(&self, selection: bool) -> bool {
        if selection {
            self.fsm.synced
        } else {
            self.synced_fixed
        }
    }

    fn tx_port(&self, selection: bool) -> usize {
        if selection {
            self.fsm.tx_port
        } else {
            0
        }
    }
}

struct FrameChannels<'a> {
    config: &'a ScenarioConfig,
    bs: &'a crate::channel::BsArray,
    freqs: &'a [f64],
    poses: Vec<Pose>,
    cache: Vec<[Option<Vec<ComplexMatrix>>; NUM_PORTS]>,
}

impl FrameChannels<'_> {
    /// Propagation channel (M x 1 per evaluation group) of `ue` on `port`.
    fn get(&mut self, ue: usize, port: usize) -> Result<&[ComplexMatrix], ChannelError> {
        if self.cache[ue][port].is_none() {
            let cfg = &self.config.ues[ue];
            let mut band = channel_over_band(
                self.bs,
                &self.poses[ue],
                &cfg.pattern(),
                port,
                self.freqs,
                self.config.reflection.as_ref(),
            )?;
            let amp = cfg.port_offset_amplitude(port);
            if amp != 1.0 {
                for h in &mut band {
                    *h = h.scale_real(amp);
                }
            }
            self.cache[ue][port] = Some(band);
        }
        Ok(self.cache[ue][port].as_deref().unwrap_or_default())
    }
}

pub fn run_scenario_detailed(config: &ScenarioConfig) -> Result<ScenarioOutput, ScenarioError> {
    config.validate()?;
    let selection = config.selection_enabled;
    let bs = config.bs_array();
    let m = bs.len();
    let groups = config.numerology.evaluation_groups();
    let weights: Vec<f64> = groups.iter().map(|g| g.1 as f64).collect();
    let total_weight: f64 = weights.iter().sum();
    let freqs: Vec<f64> = groups
        .iter()
        .map(|g| config.subcarrier_frequency(g.0))
        .collect();
    let kind = config.filter_kind();

    let mut hw_rng = stream_rng(config.seed, 0);
    let bs_hw = HardwareResponse::random(m, config.hardware_spread_db, &mut hw_rng);
    let mut ues: Vec<UeLink> = config
        .ues
        .iter()
        .map(|_| UeLink {
            hw: HardwareResponse::random(1, config.hardware_spread_db, &mut hw_rng),
            fsm: init_state(),
            synced_fixed: false,
        })
        .collect();
    let mut noise_rng = stream_rng(config.seed, NOISE_STREAM);

    let sigma2 = config.noise_power_mw();
    let p_bs = config.bs_chain_power_mw();
    let threshold = 10f64.powf(config.sync_threshold_db / 10.0);
    let frame_s = config.schedule.frame_duration_ms * 1e-3;
    let k_total = config.ues.len();

    let mut out = ScenarioOutput {
        trace: ThroughputTrace {
            rows: Vec::new(),
            config_digest: config.digest(),
            seed: config.seed,
        },
        selection_logs: vec![Vec::new(); if selection { k_total } else { 0 }],
        fallback_frames: Vec::new(),
        sync_frame: vec![None; k_total],
        first_update_frame: vec![None; k_total],
    };

    for n in 0..config.num_frames() {
        let frame = n as u64;
        let t = n as f64 * frame_s;
        let poses = config
            .ues
            .iter()
            .map(|ue| {
                facing_pose(
                    &trajectory_position(&ue.trajectory, t),
                    &ue.offset_m,
                    &bs.center(),
                )
            })
            .collect();
        let mut ch = FrameChannels {
            config,
            bs: &bs,
            freqs: &freqs,
            poses,
            cache: (0..k_total).map(|_| Default::default()).collect(),
        };

        for (k, link) in ues.iter_mut().enumerate() {
            let was_synced = link.synced(selection);
            if selection {
                let mut input = FrameInput::default();
                match link.fsm.mode {
                    SelectionMode::BeamSweepPreSync => {
                        let h = ch.get(k, link.fsm.rx_port)?;
                        input.sync_success =
                            dl_snr(h, &weights, &link.hw, &bs_hw, p_bs, sigma2) > threshold;
                    }
                    SelectionMode::BeamSweepPostSync => {
                        let port = link.fsm.rx_port;
                        let h = ch.get(k, port)?;
                        let mut mags = [0.0; NUM_PORTS];
                        mags[port] = dl_magnitude(
                            h,
                            &weights,
                            &link.hw,
                            &bs_hw,
                            p_bs,
                            sigma2,
                            &mut noise_rng,
                        );
                        input.per_port_magnitude = Some(mags);
                    }
                    SelectionMode::Init | SelectionMode::Idle => {}
                }
                let (next, decision) = step_frame_logged(&link.fsm, &config.schedule, &input)?;
                out.selection_logs[k]
                    .push(TransitionLogRow::new(frame, &link.fsm, &next, decision));
                if decision == Decision::Update && out.first_update_frame[k].is_none() {
                    out.first_update_frame[k] = Some(frame);
                }
                link.fsm = next;
            } else if !link.synced_fixed {
                let h = ch.get(k, 0)?;
                link.synced_fixed = dl_snr(h, &weights, &link.hw, &bs_hw, p_bs, sigma2) > threshold;
            }
            if !was_synced && link.synced(selection) {
                out.sync_frame[k] = Some(frame);
            }
        }

        let active: Vec<usize> = (0..k_total).filter(|&k| ues[k].synced(selection)).collect();
        if active.is_empty() {
            continue;
        }
        let mut bands = Vec::with_capacity(active.len());
        for &k in &active {
            bands.push(ch.get(k, ues[k].tx_port(selection))?.to_vec());
        }
        let power = PowerAllocation::new(
            active
                .iter()
                .map(|&k| config.ues[k].tx_power_mw())
                .collect(),
        )?;
        let filter = match kind {
            Some(f) => f,
            None => FilterKind::Rzf {
                alpha: default_rzf_alpha(active.len(), sigma2, &power),
            },
        };

        let mut sinr_sum = vec![0.0; active.len()];
        let mut weighted: Vec<Vec<(f64, usize)>> =
            vec![Vec::with_capacity(groups.len()); active.len()];
        let mut flagged = false;
        for (g, group) in groups.iter().enumerate() {
            let h_ul = ComplexMatrix::from_fn(m, active.len(), |row, col| {
                let k = active[col];
                bs_hw.rx[row] * bands[col][g][(row, 0)] * ues[k].hw.tx[0]
            });
            let f_eq = match equalizer(&h_ul, filter) {
                Ok(f) => f,
                Err(BeamformingError::SingularMatrix(_)) => {
                    flagged = true;
                    equalizer(
                        &h_ul,
                        FilterKind::Rzf {
                            alpha: zf_fallback_alpha(&h_ul),
                        },
                    )?
                }
                Err(e) => return Err(e.into()),
            };
            let sinr = post_eq_sinr(&h_ul, &f_eq, &power, sigma2)?;
            for (i, s) in sinr.into_iter().enumerate() {
                sinr_sum[i] += s * weights[g];
                weighted[i].push((s, group.1));
            }
        }
        if flagged {
            out.fallback_frames.push(frame);
        }
        for (i, &k) in active.iter().enumerate() {
            let mean = sinr_sum[i] / total_weight;
            out.trace.rows.push(TraceRow {
                t_s: t,
                ue: k,
                selected_port: ues[k].tx_port(selection),
                sinr_db: (10.0 * mean.log10()).clamp(-SINR_DB_LIMIT, SINR_DB_LIMIT),
                throughput_mbit_s: throughput_from_weighted_sinr(
                    &weighted[i],
                    &config.numerology,
                    config.efficiency,
                ),
                synced: true,
            });
        }
    }
    Ok(out)
}

fn dl_coefficient(
    h: &ComplexMatrix,
    row: usize,
    ue: &HardwareResponse,
    bs: &HardwareResponse,
) -> Complex64 {
    ue.rx[0] * h[(row, 0)] * bs.tx[row]
}

/// Mean per-chain DL SNR before beamforming.
fn dl_snr(
    band: &[ComplexMatrix],
    weights: &[f64],
    ue: &HardwareResponse,
    bs: &HardwareResponse,
    p_bs: f64,
    sigma2: f64,
) -> f64 {
    let mut acc = 0.0;
    let mut count = 0.0;
    for (h, &w) in band.iter().zip(weights) {
        for row in 0..h.rows() {
            acc += w * dl_coefficient(h, row, ue, bs).norm_sqr();
            count += w;
        }
    }
    let signal = p_bs * acc / count;
    if sigma2 > 0.0 {
        signal / sigma2
    } else {
        f64::INFINITY
    }
}

/// Received DL pilot energy over all chains and subcarriers, with noise.
fn dl_magnitude(
    band: &[ComplexMatrix],
    weights: &[f64],
    ue: &HardwareResponse,
    bs: &HardwareResponse,
    p_bs: f64,
    sigma2: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let amp = p_bs.sqrt();
    let mut acc = 0.0;
    for (h, &w) in band.iter().zip(weights) {
        for row in 0..h.rows() {
            let mut y = amp * dl_coefficient(h, row, ue, bs);
            if sigma2 > 0.0 {
                y += complex_gaussian(rng, sigma2);
            }
            acc += w * y.norm_sqr();
        }
    }
    acc
}
