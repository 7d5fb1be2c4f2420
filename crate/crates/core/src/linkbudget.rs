//! EIRP and path-loss arithmetic. Everything stays in the dB domain.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    BS_ELEMENT_GAIN_DBI, PATCH_PEAK_GAIN_DBI, SPEED_OF_LIGHT, YAGI_PEAK_GAINS_DBI,
};

pub const CARRIER_FREQUENCY_HZ: f64 = 27.95e9;
/// FRECON (9 dB) plus FEM (14 dB) transmit gain.
pub const TX_CHAIN_GAIN_DB: f64 = 9.0 + 14.0;
/// FRECON (7 dB) plus FEM (12 dB) receive gain.
pub const RX_CHAIN_GAIN_DB: f64 = 7.0 + 12.0;
pub const DEFAULT_DISTANCES_M: [f64; 5] = [3.0, 5.0, 7.0, 9.0, 11.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkBudgetError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    pub p_tx_dbm: f64,
    pub g_tx_chain_db: f64,
    pub l_tx_cable_db: f64,
    pub g_tx_antenna_dbi: f64,
    pub g_rx_chain_db: f64,
    pub l_rx_cable_db: f64,
    pub g_rx_antenna_dbi: f64,
    pub frequency_hz: f64,
}

impl Default for LinkBudgetParams {
    /// UE with the yagi-like array transmitting to one BS element.
    fn default() -> Self {
        Self {
            p_tx_dbm: 0.0,
            g_tx_chain_db: TX_CHAIN_GAIN_DB,
            l_tx_cable_db: 0.0,
            g_tx_antenna_dbi: YAGI_PEAK_GAINS_DBI[0],
            g_rx_chain_db: RX_CHAIN_GAIN_DB,
            l_rx_cable_db: 0.0,
            g_rx_antenna_dbi: BS_ELEMENT_GAIN_DBI,
            frequency_hz: CARRIER_FREQUENCY_HZ,
        }
    }
}

impl LinkBudgetParams {
    pub fn yagi() -> Self {
        Self::default()
    }

    pub fn patch() -> Self {
        Self {
            g_tx_antenna_dbi: PATCH_PEAK_GAIN_DBI,
            ..Self::default()
        }
    }
}

pub fn eirp(p: &LinkBudgetParams) -> f64 {
    p.p_tx_dbm + p.g_tx_chain_db - p.l_tx_cable_db + p.g_tx_antenna_dbi
}

/// Path loss implied by a received power `p_rx_dbm` at the chain output.
pub fn measured_pl(p: &LinkBudgetParams, p_rx_dbm: f64) -> f64 {
    eirp(p) - (p_rx_dbm - p.g_rx_chain_db + p.l_rx_cable_db - p.g_rx_antenna_dbi)
}

/// Free-space loss `20 log10(4 pi d f / c)` minus both antenna gains.
pub fn theoretical_pl(
    distance_m: f64,
    frequency_hz: f64,
    g_tx_antenna_dbi: f64,
    g_rx_antenna_dbi: f64,
) -> Result<f64, LinkBudgetError> {
    if !(distance_m > 0.0) {
        return Err(LinkBudgetError::NonPositiveDistance(distance_m));
    }
    if !(frequency_hz > 0.0) {
        return Err(LinkBudgetError::NonPositiveFrequency(frequency_hz));
    }
    Ok(
        20.0 * (4.0 * PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10()
            - g_tx_antenna_dbi
            - g_rx_antenna_dbi,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLossRow {
    pub distance_m: f64,
    pub pl_theory_db_yagi: f64,
    pub pl_theory_db_patch: f64,
    /// EIRP of the yagi parameter set.
    pub eirp_dbm: f64,
}

pub fn pl_comparison_table(
    distances: &[f64],
    yagi: &LinkBudgetParams,
    patch: &LinkBudgetParams,
) -> Result<Vec<PathLossRow>, LinkBudgetError> {
    distances
        .iter()
        .map(|&d| {
            Ok(PathLossRow {
                distance_m: d,
                pl_theory_db_yagi: theoretical_pl(
                    d,
                    yagi.frequency_hz,
                    yagi.g_tx_antenna_dbi,
                    yagi.g_rx_antenna_dbi,
                )?,
                pl_theory_db_patch: theoretical_pl(
                    d,
                    patch.frequency_hz,
                    patch.g_tx_antenna_dbi,
                    patch.g_rx_antenna_dbi,
                )?,
                eirp_dbm: eirp(yagi),
            })
        })
        .collect()
}

pub const PL_TABLE_COLUMNS: &str = "d_m,pl_theory_db_yagi,pl_theory_db_patch,eirp_dbm";

pub fn write_pl_table<W: Write>(mut w: W, rows: &[PathLossRow]) -> io::Result<()> {
    writeln!(w, "{PL_TABLE_COLUMNS}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            r.distance_m, r.pl_theory_db_yagi, r.pl_theory_db_patch, r.eirp_dbm
        )?;
    }
    Ok(())
}
