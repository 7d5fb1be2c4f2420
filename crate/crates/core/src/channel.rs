//! Propagation-channel synthesis: beam patterns, LOS (plus optional single
//! wall reflection) channels between a BS array and a UE port, the
//! non-reciprocal UL/DL composition, AWGN, and capture records.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::ComplexMatrix;
use crate::scenario::{ScenarioConfig, UeConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Attenuation of the lobe at `hpbw/2` off boresight is exactly 3 dB.
const LOBE_CURVATURE_DB: f64 = 12.0;
/// Backlobe floor relative to the port's peak gain.
const BACKLOBE_FLOOR_DB: f64 = -20.0;
/// Closest allowed UE-to-element distance.
pub const MIN_DISTANCE_M: f64 = 0.1;

pub const CAPTURE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("port {port} out of range for pattern with {ports} ports")]
    PortOutOfRange { port: usize, ports: usize },
    #[error("degenerate geometry: distance {distance_m} m to BS element {element} is at most {MIN_DISTANCE_M} m")]
    DegenerateGeometry { element: usize, distance_m: f64 },
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("hardware response entry {index} is zero")]
    ZeroHardwareEntry { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub fn wrap_degrees(angle: f64) -> f64 {
    let w = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamLobe {
    pub peak_gain_dbi: f64,
    /// Azimuth relative to the antenna heading, degrees.
    pub boresight_deg: f64,
    pub hpbw_deg: f64,
}

impl BeamLobe {
    pub fn new(peak_gain_dbi: f64, boresight_deg: f64, hpbw_deg: f64) -> Self {
        Self {
            peak_gain_dbi,
            boresight_deg,
            hpbw_deg,
        }
    }

    /// Gaussian-in-dB lobe floored at the backlobe level.
    pub fn gain_dbi(&self, azimuth_deg: f64) -> f64 {
        let offset = wrap_degrees(azimuth_deg - self.boresight_deg);
        let rolloff = LOBE_CURVATURE_DB * (offset / self.hpbw_deg).powi(2);
        self.peak_gain_dbi - rolloff.min(-BACKLOBE_FLOOR_DB)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntennaKind {
    YagiLike,
    PatchLike,
    BsElement,
}

impl AntennaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AntennaKind::YagiLike => "yagi_like",
            AntennaKind::PatchLike => "patch_like",
            AntennaKind::BsElement => "bs_element",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "yagi_like" => Some(AntennaKind::YagiLike),
            "patch_like" => Some(AntennaKind::PatchLike),
            "bs_element" => Some(AntennaKind::BsElement),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: AntennaKind,
    pub ports: Vec<BeamLobe>,
}

pub const YAGI_PEAK_GAINS_DBI: [f64; 4] = [7.5, 7.0, 7.0, 7.5];
pub const YAGI_BORESIGHTS_DEG: [f64; 4] = [-60.0, -20.0, 20.0, 60.0];
pub const YAGI_HPBW_DEG: f64 = 60.0;
pub const PATCH_PEAK_GAIN_DBI: f64 = 10.0;
pub const PATCH_BORESIGHTS_DEG: [f64; 4] = [-45.0, -15.0, 15.0, 45.0];
pub const PATCH_HPBW_DEG: f64 = 30.0;
pub const BS_ELEMENT_GAIN_DBI: f64 = 5.0;
pub const BS_ELEMENT_HPBW_DEG: f64 = 90.0;

impl AntennaPattern {
    pub fn yagi_like() -> Self {
        let ports = YAGI_PEAK_GAINS_DBI
            .iter()
            .zip(YAGI_BORESIGHTS_DEG)
            .map(|(&g, b)| BeamLobe::new(g, b, YAGI_HPBW_DEG))
            .collect();
        Self {
            kind: AntennaKind::YagiLike,
            ports,
        }
    }

    pub fn patch_like() -> Self {
        let ports = PATCH_BORESIGHTS_DEG
            .iter()
            .map(|&b| BeamLobe::new(PATCH_PEAK_GAIN_DBI, b, PATCH_HPBW_DEG))
            .collect();
        Self {
            kind: AntennaKind::PatchLike,
            ports,
        }
    }

    pub fn bs_element() -> Self {
        Self::bs_element_with(BS_ELEMENT_GAIN_DBI, BS_ELEMENT_HPBW_DEG)
    }

    pub fn bs_element_with(peak_gain_dbi: f64, hpbw_deg: f64) -> Self {
        Self {
            kind: AntennaKind::BsElement,
            ports: vec![BeamLobe::new(peak_gain_dbi, 0.0, hpbw_deg)],
        }
    }

    pub fn for_kind(kind: AntennaKind) -> Self {
        match kind {
            AntennaKind::YagiLike => Self::yagi_like(),
            AntennaKind::PatchLike => Self::patch_like(),
            AntennaKind::BsElement => Self::bs_element(),
        }
    }

    /// Isotropic 0 dBi ports, used as the reference in path-loss checks.
    pub fn isotropic(kind: AntennaKind, ports: usize) -> Self {
        Self {
            kind,
            ports: vec![BeamLobe::new(0.0, 0.0, f64::INFINITY); ports],
        }
    }

    pub fn num_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn lobe(&self, port: usize) -> Result<&BeamLobe, ChannelError> {
        self.ports.get(port).ok_or(ChannelError::PortOutOfRange {
            port,
            ports: self.ports.len(),
        })
    }

    pub fn gain_dbi(&self, port: usize, azimuth_deg: f64) -> Result<f64, ChannelError> {
        Ok(self.lobe(port)?.gain_dbi(azimuth_deg))
    }
}

/// Linear power gain of `port` toward `azimuth` (degrees, relative to the
/// antenna heading).
pub fn beam_gain(
    pattern: &AntennaPattern,
    port: usize,
    azimuth_deg: f64,
) -> Result<f64, ChannelError> {
    let g = pattern.gain_dbi(port, azimuth_deg)?;
    Ok(10f64.powf(g / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    /// Horizontal-plane azimuth of `other` seen from `self`, degrees.
    pub fn azimuth_to(&self, other: &Point3) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }

    pub fn offset(&self, d: &Point3) -> Point3 {
        Point3::new(self.x + d.x, self.y + d.y, self.z + d.z)
    }
}

/// UE position and heading (global azimuth of the antenna's 0 degree axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    pub heading_deg: f64,
}

/// BS array: element positions plus one shared element pattern whose
/// boresight is the global +x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BsArray {
    pub positions: Vec<Point3>,
    pub element: AntennaPattern,
}

impl BsArray {
    /// Horizontal ULA along y, centred on `center`.
    pub fn ula(elements: usize, spacing_m: f64, center: Point3, element: AntennaPattern) -> Self {
        let mid = (elements as f64 - 1.0) / 2.0;
        let positions = (0..elements)
            .map(|m| Point3::new(center.x, center.y + (m as f64 - mid) * spacing_m, center.z))
            .collect();
        Self { positions, element }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn center(&self) -> Point3 {
        let n = self.positions.len().max(1) as f64;
        let (x, y, z) = self
            .positions
            .iter()
            .fold((0.0, 0.0, 0.0), |(x, y, z), p| (x + p.x, y + p.y, z + p.z));
        Point3::new(x / n, y / n, z / n)
    }
}

/// Specular reflection off a wall parallel to the x axis, modelled with the
/// image method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflection {
    pub wall_y_m: f64,
    pub loss_db: f64,
}

#[allow(clippy::too_many_arguments)]
fn path_coefficient(
    bs: &BsArray,
    m: usize,
    ue_position: &Point3,
    departure_offset_deg: f64,
    pattern: &AntennaPattern,
    port: usize,
    frequency: f64,
    amplitude_scale: f64,
) -> Result<Complex64, ChannelError> {
    let element = &bs.positions[m];
    let d = element.distance(ue_position);
    if d <= MIN_DISTANCE_M {
        return Err(ChannelError::DegenerateGeometry {
            element: m,
            distance_m: d,
        });
    }
    let lambda = SPEED_OF_LIGHT / frequency;
    let arrival = element.azimuth_to(ue_position);
    let g_bs = beam_gain(&bs.element, 0, arrival)?;
    let g_ue = beam_gain(pattern, port, departure_offset_deg)?;
    let amplitude = (g_bs * g_ue).sqrt() * lambda / (4.0 * PI * d) * amplitude_scale;
    Ok(Complex64::from_polar(amplitude, -2.0 * PI * d / lambda))
}

/// M x 1 free-space channel between every BS element and one UE port.
pub fn los_channel(
    bs: &BsArray,
    ue_pose: &Pose,
    pattern: &AntennaPattern,
    port: usize,
    frequency: f64,
) -> Result<ComplexMatrix, ChannelError> {
    multipath_channel(bs, ue_pose, pattern, port, frequency, None)
}

/// LOS channel plus an optional single wall reflection.
pub fn multipath_channel(
    bs: &BsArray,
    ue_pose: &Pose,
    pattern: &AntennaPattern,
    port: usize,
    frequency: f64,
    reflection: Option<&Reflection>,
) -> Result<ComplexMatrix, ChannelError> {
    if !(frequency > 0.0) {
        return Err(ChannelError::InvalidArgument(format!(
            "frequency must be positive, got {frequency}"
        )));
    }
    pattern.lobe(port)?;
    let mut out = Vec::with_capacity(bs.len());
    for m in 0..bs.len() {
        let toward_bs = ue_pose.position.azimuth_to(&bs.positions[m]);
        let offset = toward_bs - ue_pose.heading_deg;
        let mut h = path_coefficient(
            bs,
            m,
            &ue_pose.position,
            offset,
            pattern,
            port,
            frequency,
            1.0,
        )?;
        if let Some(r) = reflection {
            let image = Point3::new(
                ue_pose.position.x,
                2.0 * r.wall_y_m - ue_pose.position.y,
                ue_pose.position.z,
            );
            // departure direction at the real UE is the mirror of the image's bearing
            let toward_bs_real = -image.azimuth_to(&bs.positions[m]);
            let offset = toward_bs_real - ue_pose.heading_deg;
            let scale = 10f64.powf(-r.loss_db / 20.0);
            h += path_coefficient(bs, m, &image, offset, pattern, port, frequency, scale)?;
        }
        out.push(h);
    }
    Ok(ComplexMatrix::column_vector(&out))
}

/// Channel of one UE port evaluated at several frequencies; the geometry
/// and pattern gains are computed once and only the free-space term
/// varies with frequency.
pub fn channel_over_band(
    bs: &BsArray,
    ue_pose: &Pose,
    pattern: &AntennaPattern,
    port: usize,
    frequencies: &[f64],
    reflection: Option<&Reflection>,
) -> Result<Vec<ComplexMatrix>, ChannelError> {
    if let Some(&f) = frequencies.iter().find(|f| !(**f > 0.0)) {
        return Err(ChannelError::InvalidArgument(format!(
            "frequency must be positive, got {f}"
        )));
    }
    let lobe = *pattern.lobe(port)?;
    let bs_lobe = *bs.element.lobe(0)?;
    // (distance, sqrt of pattern gains times any reflection loss)
    let mut paths: Vec<Vec<(f64, f64)>> = Vec::with_capacity(bs.len());
    for (m, element) in bs.positions.iter().enumerate() {
        let mut per_element = Vec::with_capacity(2);
        let d = element.distance(&ue_pose.position);
        if d <= MIN_DISTANCE_M {
            return Err(ChannelError::DegenerateGeometry {
                element: m,
                distance_m: d,
            });
        }
        let g_bs = bs_lobe.gain_dbi(element.azimuth_to(&ue_pose.position));
        let g_ue = lobe.gain_dbi(ue_pose.position.azimuth_to(element) - ue_pose.heading_deg);
        per_element.push((d, 10f64.powf((g_bs + g_ue) / 20.0)));
        if let Some(r) = reflection {
            let image = Point3::new(
                ue_pose.position.x,
                2.0 * r.wall_y_m - ue_pose.position.y,
                ue_pose.position.z,
            );
            let d = element.distance(&image);
            if d <= MIN_DISTANCE_M {
                return Err(ChannelError::DegenerateGeometry {
                    element: m,
                    distance_m: d,
                });
            }
            let g_bs = bs_lobe.gain_dbi(element.azimuth_to(&image));
            let g_ue = lobe.gain_dbi(-image.azimuth_to(element) - ue_pose.heading_deg);
            per_element.push((d, 10f64.powf((g_bs + g_ue - r.loss_db) / 20.0)));
        }
        paths.push(per_element);
    }
    Ok(frequencies
        .iter()
        .map(|&f| {
            let lambda = SPEED_OF_LIGHT / f;
            let entries: Vec<Complex64> = paths
                .iter()
                .map(|per_element| {
                    per_element
                        .iter()
                        .map(|&(d, amp)| {
                            Complex64::from_polar(
                                amp * lambda / (4.0 * PI * d),
                                -2.0 * PI * d / lambda,
                            )
                        })
                        .sum()
                })
                .collect();
            ComplexMatrix::column_vector(&entries)
        })
        .collect())
}

/// Per-chain transmit and receive transfer factors of one radio side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareResponse {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
}

impl HardwareResponse {
    pub fn new(tx: Vec<Complex64>, rx: Vec<Complex64>) -> Result<Self, ChannelError> {
        if tx.len() != rx.len() {
            return Err(ChannelError::DimensionMismatch {
                op: "HardwareResponse::new",
                detail: format!("tx has {} entries, rx has {}", tx.len(), rx.len()),
            });
        }
        if let Some(index) = tx
            .iter()
            .chain(&rx)
            .position(|z| *z == Complex64::new(0.0, 0.0))
        {
            return Err(ChannelError::ZeroHardwareEntry {
                index: index % tx.len().max(1),
            });
        }
        Ok(Self { tx, rx })
    }

    pub fn identity(chains: usize) -> Self {
        let one = vec![Complex64::new(1.0, 0.0); chains];
        Self {
            tx: one.clone(),
            rx: one,
        }
    }

    /// Random non-reciprocal response: log-normal amplitude with
    /// `spread_db` standard deviation and uniform phase, drawn
    /// independently for each chain and direction.
    pub fn random<R: Rng + ?Sized>(chains: usize, spread_db: f64, rng: &mut R) -> Self {
        let mut draw = || {
            let db: f64 = rng.sample::<f64, _>(StandardNormal) * spread_db;
            let phase = rng.random_range(0.0..2.0 * PI);
            Complex64::from_polar(10f64.powf(db / 20.0), phase)
        };
        let tx = (0..chains).map(|_| draw()).collect();
        let rx = (0..chains).map(|_| draw()).collect();
        Self { tx, rx }
    }

    pub fn chains(&self) -> usize {
        self.tx.len()
    }
}

/// `H_ul = R_bs H_p T_ue`.
pub fn compose_ul(
    h_p: &ComplexMatrix,
    bs: &HardwareResponse,
    ue: &HardwareResponse,
) -> Result<ComplexMatrix, ChannelError> {
    if h_p.rows() != bs.chains() || h_p.cols() != ue.chains() {
        return Err(ChannelError::DimensionMismatch {
            op: "compose_ul",
            detail: format!(
                "h_p is {}x{}, BS has {} chains, UE side has {}",
                h_p.rows(),
                h_p.cols(),
                bs.chains(),
                ue.chains()
            ),
        });
    }
    Ok(ComplexMatrix::from_fn(h_p.rows(), h_p.cols(), |m, k| {
        bs.rx[m] * h_p[(m, k)] * ue.tx[k]
    }))
}

/// `H_dl = R_ue H_p^T T_bs`.
pub fn compose_dl(
    h_p: &ComplexMatrix,
    ue: &HardwareResponse,
    bs: &HardwareResponse,
) -> Result<ComplexMatrix, ChannelError> {
    if h_p.rows() != bs.chains() || h_p.cols() != ue.chains() {
        return Err(ChannelError::DimensionMismatch {
            op: "compose_dl",
            detail: format!(
                "h_p is {}x{}, BS has {} chains, UE side has {}",
                h_p.rows(),
                h_p.cols(),
                bs.chains(),
                ue.chains()
            ),
        });
    }
    Ok(ComplexMatrix::from_fn(h_p.cols(), h_p.rows(), |k, m| {
        ue.rx[k] * h_p[(m, k)] * bs.tx[m]
    }))
}

/// Propagation channel of one subcarrier with its UL and DL radio channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_p: ComplexMatrix,
    pub h_ul: ComplexMatrix,
    pub h_dl: ComplexMatrix,
    pub subcarrier_index: usize,
}

impl ChannelRealization {
    pub fn new(
        h_p: ComplexMatrix,
        bs: &HardwareResponse,
        ue: &HardwareResponse,
        subcarrier_index: usize,
    ) -> Result<Self, ChannelError> {
        let h_ul = compose_ul(&h_p, bs, ue)?;
        let h_dl = compose_dl(&h_p, ue, bs)?;
        Ok(Self {
            h_p,
            h_ul,
            h_dl,
            subcarrier_index,
        })
    }
}

/// One circularly-symmetric complex Gaussian sample of the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn add_awgn<R: Rng + ?Sized>(
    signal: &ComplexMatrix,
    variance: f64,
    rng: &mut R,
) -> Result<ComplexMatrix, ChannelError> {
    if !(variance >= 0.0) {
        return Err(ChannelError::InvalidArgument(format!(
            "noise variance must be >= 0, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(signal.clone());
    }
    Ok(ComplexMatrix::from_fn(
        signal.rows(),
        signal.cols(),
        |r, c| signal[(r, c)] + complex_gaussian(rng, variance),
    ))
}

/// Captured UL channel coefficients, `[time][subcarrier][bs_chain][ue_port]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRecord {
    pub dims: [usize; 4],
    /// Used-subcarrier index of each entry along the frequency axis.
    pub subcarriers: Vec<usize>,
    pub snapshots: Vec<Complex64>,
    pub frame_period_ms: f64,
    pub distance_m: f64,
    pub antenna_kind: AntennaKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CaptureHeader {
    pub version: u32,
    pub dims: [usize; 4],
    pub frame_period_ms: f64,
    pub distance_m: f64,
    pub antenna_kind: AntennaKind,
    pub seed: u64,
}

pub(crate) const CAPTURE_CSV_COLUMNS: &str = "time_idx,subcarrier_idx,bs_chain,ue_port,re,im";

impl CaptureRecord {
    pub fn times(&self) -> usize {
        self.dims[0]
    }

    pub fn frequencies(&self) -> usize {
        self.dims[1]
    }

    pub fn chains(&self) -> usize {
        self.dims[2]
    }

    pub fn ports(&self) -> usize {
        self.dims[3]
    }

    pub fn flat_index(&self, t: usize, f: usize, m: usize, p: usize) -> usize {
        ((t * self.dims[1] + f) * self.dims[2] + m) * self.dims[3] + p
    }

    pub fn get(&self, t: usize, f: usize, m: usize, p: usize) -> Complex64 {
        self.snapshots[self.flat_index(t, f, m, p)]
    }

    pub fn is_consistent(&self) -> bool {
        self.snapshots.len() == self.dims.iter().product::<usize>()
            && self.subcarriers.len() == self.dims[1]
    }

    /// Writes the JSON header line followed by the CSV body. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn export<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header = CaptureHeader {
            version: CAPTURE_FORMAT_VERSION,
            dims: self.dims,
            frame_period_ms: self.frame_period_ms,
            distance_m: self.distance_m,
            antenna_kind: self.antenna_kind,
            seed: self.seed,
        };
        serde_json::to_writer(&mut w, &header).map_err(io::Error::other)?;
        writeln!(w)?;
        writeln!(w, "{CAPTURE_CSV_COLUMNS}")?;
        let [nt, nf, nm, np] = self.dims;
        for t in 0..nt {
            for f in 0..nf {
                let sc = self.subcarriers[f];
                for m in 0..nm {
                    for p in 0..np {
                        let z = self.get(t, f, m, p);
                        writeln!(w, "{t},{sc},{m},{p},{},{}", z.re, z.im)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Derived RNG for one independent stream of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Capture of the first UE in `config` at `distance` along the BS boresight.
pub fn synth_capture(
    config: &ScenarioConfig,
    distance: f64,
    duration: f64,
) -> Result<CaptureRecord, ChannelError> {
    synth_capture_for(config, 0, distance, duration)
}

pub fn synth_capture_for(
    config: &ScenarioConfig,
    ue_index: usize,
    distance: f64,
    duration: f64,
) -> Result<CaptureRecord, ChannelError> {
    if !(duration > 0.0) {
        return Err(ChannelError::InvalidArgument(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let ue: &UeConfig = config.ues.get(ue_index).ok_or_else(|| {
        ChannelError::InvalidArgument(format!(
            "UE index {ue_index} out of range ({} UEs)",
            config.ues.len()
        ))
    })?;
    let frame_period_ms = config.schedule.frame_duration_ms;
    let times = (duration * 1e3 / frame_period_ms).round() as usize;
    if times == 0 {
        return Err(ChannelError::InvalidArgument(
            "duration shorter than one frame".into(),
        ));
    }
    let bs = config.bs_array();
    let pattern = ue.pattern();
    let ports = pattern.num_ports();
    let chains = bs.len();
    let subcarriers: Vec<usize> = (0..config.numerology.used_subcarriers)
        .step_by(config.capture.subcarrier_stride.max(1))
        .collect();
    let center = bs.center();
    let pose = Pose {
        position: Point3::new(center.x + distance, center.y, center.z),
        heading_deg: 180.0,
    };

    let mut hw_rng = stream_rng(config.seed, 0);
    let bs_hw = HardwareResponse::random(chains, config.hardware_spread_db, &mut hw_rng);
    let ue_hw = HardwareResponse::random(1, config.hardware_spread_db, &mut hw_rng);

    // static geometry: one coefficient set per (subcarrier, chain, port)
    let freqs: Vec<f64> = subcarriers
        .iter()
        .map(|&sc| config.subcarrier_frequency(sc))
        .collect();
    let per_port: Vec<Vec<ComplexMatrix>> = (0..ports)
        .map(|p| channel_over_band(&bs, &pose, &pattern, p, &freqs, config.reflection.as_ref()))
        .collect::<Result<_, _>>()?;
    let mut base = Vec::with_capacity(subcarriers.len() * chains * ports);
    for f in 0..subcarriers.len() {
        for m in 0..chains {
            for (p, band) in per_port.iter().enumerate() {
                let offset = ue.port_offset_amplitude(p);
                base.push(bs_hw.rx[m] * band[f][(m, 0)] * ue_hw.tx[0] * offset);
            }
        }
    }

    let noise_variance = if config.capture.noise_enabled {
        config.noise_power_mw() / ue.tx_power_mw()
    } else {
        0.0
    };
    let mut snapshots = Vec::with_capacity(times * base.len());
    for t in 0..times {
        let mut rng = stream_rng(config.seed, 1 + t as u64);
        let dropped = config.capture.dropout_probability > 0.0
            && rng.random::<f64>() < config.capture.dropout_probability;
        if dropped {
            snapshots.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), base.len()));
            continue;
        }
        for &h in &base {
            let z = if noise_variance > 0.0 {
                complex_gaussian(&mut rng, noise_variance)
            } else {
                Complex64::new(0.0, 0.0)
            };
            snapshots.push(h + z);
        }
    }

    Ok(CaptureRecord {
        dims: [times, subcarriers.len(), chains, ports],
        subcarriers,
        snapshots,
        frame_period_ms,
        distance_m: distance,
        antenna_kind: pattern.kind,
        seed: config.seed,
    })
}
