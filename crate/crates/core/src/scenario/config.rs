use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beamforming::FilterKind;
use crate::channel::{
    AntennaKind, AntennaPattern, BeamLobe, BsArray, Point3, Reflection, SPEED_OF_LIGHT,
};
use crate::linkbudget::CARRIER_FREQUENCY_HZ;
use crate::selection::{FrameSchedule, NUM_PORTS};

use super::trajectory::Trajectory;

/// Largest number of simultaneously served UEs.
pub const MAX_UES: usize = 12;
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config field `{field}`: {msg}")]
pub struct ConfigError {
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmNumerology {
    pub fft_size: usize,
    pub sampling_rate_hz: f64,
    pub used_subcarriers: usize,
    pub cp_samples: usize,
    pub bandwidth_hz: f64,
    /// Channels and SINR are evaluated on one subcarrier out of each group
    /// of this many, weighted by group size.
    pub sinr_subcarrier_stride: usize,
}

impl Default for OfdmNumerology {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            sampling_rate_hz: 30.72e6,
            used_subcarriers: 1200,
            cp_samples: 160,
            bandwidth_hz: 20e6,
            sinr_subcarrier_stride: 50,
        }
    }
}

impl OfdmNumerology {
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sampling_rate_hz / self.fft_size as f64
    }

    pub fn symbol_duration_us(&self) -> f64 {
        (self.fft_size + self.cp_samples) as f64 / self.sampling_rate_hz * 1e6
    }

    /// Representative subcarrier of each evaluation group and the group size.
    pub fn evaluation_groups(&self) -> Vec<(usize, usize)> {
        let stride = self.sinr_subcarrier_stride.max(1);
        (0..self.used_subcarriers)
            .step_by(stride)
            .map(|start| {
                let len = stride.min(self.used_subcarriers - start);
                (start + len / 2, len)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsConfig {
    pub chains: usize,
    pub element_gain_dbi: f64,
    pub element_hpbw_deg: f64,
    pub spacing_wavelengths: f64,
    pub center_m: Point3,
    /// DL power per chain at the antenna port.
    pub chain_tx_power_dbm: f64,
}

impl Default for BsConfig {
    fn default() -> Self {
        Self {
            chains: 16,
            element_gain_dbi: crate::channel::BS_ELEMENT_GAIN_DBI,
            element_hpbw_deg: crate::channel::BS_ELEMENT_HPBW_DEG,
            spacing_wavelengths: 0.5,
            center_m: Point3::default(),
            chain_tx_power_dbm: -25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UeConfig {
    pub antenna: AntennaKind,
    pub trajectory: Trajectory,
    /// UL power at the antenna port.
    pub tx_power_dbm: f64,
    /// Displacement from the trajectory position.
    pub offset_m: Point3,
    /// Replaces the built-in lobes of `antenna` when present.
    pub ports: Option<Vec<BeamLobe>>,
    /// Extra per-port gain applied on top of the pattern.
    pub port_offsets_db: [f64; NUM_PORTS],
}

impl Default for UeConfig {
    fn default() -> Self {
        Self {
            antenna: AntennaKind::YagiLike,
            trajectory: Trajectory::default(),
            tx_power_dbm: -30.0,
            offset_m: Point3::default(),
            ports: None,
            port_offsets_db: [0.0; NUM_PORTS],
        }
    }
}

impl UeConfig {
    pub fn pattern(&self) -> AntennaPattern {
        match &self.ports {
            Some(ports) => AntennaPattern {
                kind: self.antenna,
                ports: ports.clone(),
            },
            None => AntennaPattern::for_kind(self.antenna),
        }
    }

    pub fn tx_power_mw(&self) -> f64 {
        dbm_to_mw(self.tx_power_dbm)
    }

    pub fn port_offset_amplitude(&self, port: usize) -> f64 {
        10f64.powf(self.port_offsets_db.get(port).copied().unwrap_or(0.0) / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerChoice {
    Mrc,
    Zf,
    Rzf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqualizerConfig {
    pub kind: EqualizerChoice,
    /// RZF regularizer; `K sigma^2 / P_avg` when absent.
    pub alpha: Option<f64>,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self {
            kind: EqualizerChoice::Zf,
            alpha: None,
        }
    }
}

impl EqualizerConfig {
    pub fn from_kind(kind: FilterKind) -> Self {
        match kind {
            FilterKind::Mrc => Self {
                kind: EqualizerChoice::Mrc,
                alpha: None,
            },
            FilterKind::Zf => Self {
                kind: EqualizerChoice::Zf,
                alpha: None,
            },
            FilterKind::Rzf { alpha } => Self {
                kind: EqualizerChoice::Rzf,
                alpha: Some(alpha),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureConfig {
    pub subcarrier_stride: usize,
    pub noise_enabled: bool,
    pub dropout_probability: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            subcarrier_stride: 100,
            noise_enabled: false,
            dropout_probability: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_frequency_hz: f64,
    pub numerology: OfdmNumerology,
    pub schedule: FrameSchedule,
    pub bs: BsConfig,
    pub ues: Vec<UeConfig>,
    pub equalizer: EqualizerConfig,
    pub selection_enabled: bool,
    pub noise_figure_db: f64,
    pub noise_enabled: bool,
    /// Per-chain DL SNR a UE needs to synchronize on its current port.
    pub sync_threshold_db: f64,
    pub efficiency: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// Log-normal amplitude spread of the per-chain hardware responses.
    pub hardware_spread_db: f64,
    pub reflection: Option<Reflection>,
    pub capture: CaptureConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: CARRIER_FREQUENCY_HZ,
            numerology: OfdmNumerology::default(),
            schedule: FrameSchedule::default(),
            bs: BsConfig::default(),
            ues: default_ues(),
            equalizer: EqualizerConfig::default(),
            selection_enabled: true,
            noise_figure_db: 7.0,
            noise_enabled: true,
            sync_threshold_db: -10.0,
            efficiency: 0.6,
            duration_s: 16.0,
            seed: 0,
            hardware_spread_db: 0.5,
            reflection: None,
            capture: CaptureConfig::default(),
        }
    }
}

/// A yagi-like and a patch-like UE side by side on the rotation spot.
pub fn default_ues() -> Vec<UeConfig> {
    vec![
        UeConfig {
            antenna: AntennaKind::YagiLike,
            offset_m: Point3::new(0.0, -0.25, 0.0),
            ..UeConfig::default()
        },
        UeConfig {
            antenna: AntennaKind::PatchLike,
            offset_m: Point3::new(0.0, 0.25, 0.0),
            ..UeConfig::default()
        },
    ]
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn check(ok: bool, field: impl Into<String>, msg: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(field, msg))
    }
}

impl ScenarioConfig {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn bs_array(&self) -> BsArray {
        BsArray::ula(
            self.bs.chains,
            self.bs.spacing_wavelengths * self.wavelength_m(),
            self.bs.center_m,
            AntennaPattern::bs_element_with(self.bs.element_gain_dbi, self.bs.element_hpbw_deg),
        )
    }

    /// Absolute frequency of used subcarrier `index`, centred on the carrier.
    pub fn subcarrier_frequency(&self, index: usize) -> f64 {
        let centre = (self.numerology.used_subcarriers as f64 - 1.0) / 2.0;
        self.carrier_frequency_hz
            + (index as f64 - centre) * self.numerology.subcarrier_spacing_hz()
    }

    /// Thermal noise over the full bandwidth, or zero when noise is disabled.
    pub fn noise_power_mw(&self) -> f64 {
        if self.noise_enabled {
            dbm_to_mw(self.noise_power_dbm())
        } else {
            0.0
        }
    }

    pub fn noise_power_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ
            + self.noise_figure_db
            + 10.0 * self.numerology.bandwidth_hz.log10()
    }

    pub fn bs_chain_power_mw(&self) -> f64 {
        dbm_to_mw(self.bs.chain_tx_power_dbm)
    }

    pub fn filter_kind(&self) -> Option<FilterKind> {
        match self.equalizer.kind {
            EqualizerChoice::Mrc => Some(FilterKind::Mrc),
            EqualizerChoice::Zf => Some(FilterKind::Zf),
            EqualizerChoice::Rzf => self.equalizer.alpha.map(|alpha| FilterKind::Rzf { alpha }),
        }
    }

    pub fn num_frames(&self) -> usize {
        (self.duration_s * 1e3 / self.schedule.frame_duration_ms).round() as usize
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(
            self.carrier_frequency_hz > 0.0 && self.carrier_frequency_hz.is_finite(),
            "carrier_frequency_hz",
            "must be positive",
        )?;
        let n = &self.numerology;
        check(n.fft_size > 0, "numerology.fft_size", "must be positive")?;
        check(
            n.sampling_rate_hz > 0.0,
            "numerology.sampling_rate_hz",
            "must be positive",
        )?;
        check(
            n.used_subcarriers > 0 && n.used_subcarriers <= n.fft_size,
            "numerology.used_subcarriers",
            format!("must be in 1..={}", n.fft_size),
        )?;
        check(
            n.bandwidth_hz > 0.0,
            "numerology.bandwidth_hz",
            "must be positive",
        )?;
        check(
            n.sinr_subcarrier_stride > 0,
            "numerology.sinr_subcarrier_stride",
            "must be positive",
        )?;
        self.schedule
            .validate()
            .map_err(|e| ConfigError::new("schedule", e.to_string()))?;
        self.schedule
            .check_symbol_duration(n.symbol_duration_us())
            .map_err(|e| ConfigError::new("numerology", e.to_string()))?;

        check(self.bs.chains > 0, "bs.chains", "must be positive")?;
        check(
            self.bs.spacing_wavelengths > 0.0,
            "bs.spacing_wavelengths",
            "must be positive",
        )?;
        check(
            self.bs.element_hpbw_deg > 0.0,
            "bs.element_hpbw_deg",
            "must be positive",
        )?;
        check(
            self.bs.chain_tx_power_dbm.is_finite(),
            "bs.chain_tx_power_dbm",
            "must be finite",
        )?;

        check(!self.ues.is_empty(), "ues", "at least one UE is required")?;
        check(
            self.ues.len() <= MAX_UES,
            "ues",
            format!(
                "{} UEs exceed the system maximum of {MAX_UES}",
                self.ues.len()
            ),
        )?;
        check(
            self.ues.len() <= self.bs.chains,
            "ues",
            format!(
                "{} UEs exceed the {} BS chains",
                self.ues.len(),
                self.bs.chains
            ),
        )?;
        for (i, ue) in self.ues.iter().enumerate() {
            let field = |name: &str| format!("ues[{i}].{name}");
            check(
                ue.antenna != AntennaKind::BsElement,
                field("antenna"),
                "must be a UE pattern",
            )?;
            check(
                ue.tx_power_dbm.is_finite(),
                field("tx_power_dbm"),
                "must be finite",
            )?;
            check(
                ue.port_offsets_db.iter().all(|o| o.is_finite()),
                field("port_offsets_db"),
                "must be finite",
            )?;
            if let Some(ports) = &ue.ports {
                check(
                    ports.len() == NUM_PORTS,
                    field("ports"),
                    format!("expected {NUM_PORTS} lobes, got {}", ports.len()),
                )?;
                check(
                    ports
                        .iter()
                        .all(|l| l.hpbw_deg > 0.0 && l.peak_gain_dbi.is_finite()),
                    field("ports"),
                    "lobes need a positive beamwidth and finite gain",
                )?;
            }
            ue.trajectory
                .validate()
                .map_err(|msg| ConfigError::new(field("trajectory"), msg))?;
        }

        if self.equalizer.kind == EqualizerChoice::Rzf {
            if let Some(alpha) = self.equalizer.alpha {
                check(
                    alpha >= 0.0 && alpha.is_finite(),
                    "equalizer.alpha",
                    "must be >= 0",
                )?;
            }
        }
        check(
            self.noise_figure_db.is_finite(),
            "noise_figure_db",
            "must be finite",
        )?;
        check(
            self.sync_threshold_db.is_finite(),
            "sync_threshold_db",
            "must be finite",
        )?;
        check(
            self.efficiency > 0.0 && self.efficiency <= 1.0,
            "efficiency",
            "must lie in (0, 1]",
        )?;
        check(
            self.duration_s > 0.0 && self.duration_s.is_finite(),
            "duration_s",
            "must be positive",
        )?;
        check(
            self.hardware_spread_db >= 0.0 && self.hardware_spread_db.is_finite(),
            "hardware_spread_db",
            "must be >= 0",
        )?;
        if let Some(r) = &self.reflection {
            check(
                r.loss_db.is_finite() && r.wall_y_m.is_finite(),
                "reflection",
                "must be finite",
            )?;
        }
        check(
            self.capture.subcarrier_stride > 0,
            "capture.subcarrier_stride",
            "must be positive",
        )?;
        check(
            (0.0..1.0).contains(&self.capture.dropout_probability),
            "capture.dropout_probability",
            "must lie in [0, 1)",
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.bs.chains, 16);
        assert_eq!(c.ues.len(), 2);
        assert_eq!(c.filter_kind(), Some(FilterKind::Zf));
        assert!(c.selection_enabled);
        assert_eq!(c.num_frames(), 1600);
    }

    #[test]
    fn numerology_identities() {
        let n = OfdmNumerology::default();
        assert_eq!(n.subcarrier_spacing_hz(), 15e3);
        assert!((n.symbol_duration_us() - 71.875).abs() < 1e-9);
        let groups = n.evaluation_groups();
        assert_eq!(groups.len(), 24);
        assert_eq!(groups.iter().map(|g| g.1).sum::<usize>(), 1200);
        let odd = OfdmNumerology {
            used_subcarriers: 7,
            sinr_subcarrier_stride: 3,
            ..n
        };
        assert_eq!(odd.evaluation_groups(), vec![(1, 3), (4, 3), (6, 1)]);
    }

    #[test]
    fn noise_floor() {
        let c = ScenarioConfig::default();
        assert!((c.noise_power_dbm() - (-174.0 + 7.0 + 73.0103)).abs() < 1e-3);
        let quiet = ScenarioConfig {
            noise_enabled: false,
            ..c
        };
        assert_eq!(quiet.noise_power_mw(), 0.0);
    }

    #[test]
    fn subcarrier_grid_is_centred() {
        let c = ScenarioConfig::default();
        let lo = c.subcarrier_frequency(0);
        let hi = c.subcarrier_frequency(1199);
        assert!(((lo + hi) / 2.0 - c.carrier_frequency_hz).abs() < 1e-3);
        assert!((hi - lo - 1199.0 * 15e3).abs() < 1e-3);
    }

    #[test]
    fn rejects_too_many_ues() {
        let c = ScenarioConfig {
            ues: vec![UeConfig::default(); 13],
            ..ScenarioConfig::default()
        };
        let err = c.validate().unwrap_err();
        assert_eq!(err.field, "ues");
        assert!(err.msg.contains("12"));
    }

    #[test]
    fn rejects_bad_fields() {
        let c = ScenarioConfig {
            efficiency: 0.0,
            ..ScenarioConfig::default()
        };
        assert_eq!(c.validate().unwrap_err().field, "efficiency");
        let mut c = ScenarioConfig::default();
        c.numerology.cp_samples = 400;
        assert_eq!(c.validate().unwrap_err().field, "numerology");
        let mut c = ScenarioConfig::default();
        c.ues[1].ports = Some(vec![BeamLobe::new(1.0, 0.0, 30.0)]);
        assert_eq!(c.validate().unwrap_err().field, "ues[1].ports");
        let mut c = ScenarioConfig::default();
        c.ues.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults_and_round_trip() {
        let c: ScenarioConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        let text = serde_json::to_string(&c).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        assert!(serde_json::from_str::<ScenarioConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = ScenarioConfig::default();
        let b = ScenarioConfig {
            seed: 1,
            ..a.clone()
        };
        assert_eq!(a.digest().len(), 64);
        assert_ne!(a.digest(), b.digest());
    }
}
