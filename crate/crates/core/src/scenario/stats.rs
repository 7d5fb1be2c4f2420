use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::OfdmNumerology;
use super::trace::ThroughputTrace;

/// Spectral-efficiency ceiling per subcarrier, bit/s/Hz.
pub const MAX_SPECTRAL_EFFICIENCY: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("baseline median is zero; gain is infinite")]
    ZeroMedian,
}

/// Capped-Shannon throughput of one OFDM symbol stream, Mbit/s.
pub fn throughput_from_sinr(sinr: &[f64], numerology: &OfdmNumerology, efficiency: f64) -> f64 {
    let df = numerology.subcarrier_spacing_hz();
    let bits: f64 = sinr.iter().map(|&s| spectral_efficiency(s)).sum();
    df * bits * efficiency / 1e6
}

/// As [`throughput_from_sinr`] for SINRs that each stand for `weight`
/// adjacent subcarriers.
pub fn throughput_from_weighted_sinr(
    sinr: &[(f64, usize)],
    numerology: &OfdmNumerology,
    efficiency: f64,
) -> f64 {
    let df = numerology.subcarrier_spacing_hz();
    let bits: f64 = sinr
        .iter()
        .map(|&(s, w)| w as f64 * spectral_efficiency(s))
        .sum();
    df * bits * efficiency / 1e6
}

fn spectral_efficiency(sinr: f64) -> f64 {
    if sinr > 0.0 {
        sinr.ln_1p()
            .min(MAX_SPECTRAL_EFFICIENCY * std::f64::consts::LN_2)
            / std::f64::consts::LN_2
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Empirical CDF: sorted values with fractions `i/N`.
pub fn cdf(values: &[f64]) -> Result<Vec<CdfPoint>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, value)| CdfPoint {
            value,
            fraction: (i + 1) as f64 / n,
        })
        .collect())
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Ratio of the median throughput of `ue` with and without selection.
pub fn median_gain(
    with: &ThroughputTrace,
    without: &ThroughputTrace,
    ue: usize,
) -> Result<f64, StatsError> {
    let a = median(&with.throughputs(ue))?;
    let b = median(&without.throughputs(ue))?;
    if b == 0.0 {
        return Err(StatsError::ZeroMedian);
    }
    Ok(a / b)
}

pub const CDF_COLUMNS: &str = "value_mbit_s,fraction";

pub fn write_cdf_csv<W: Write>(mut w: W, points: &[CdfPoint]) -> io::Result<()> {
    writeln!(w, "{CDF_COLUMNS}")?;
    for p in points {
        writeln!(w, "{:.6},{:.6}", p.value, p.fraction)?;
    }
    Ok(())
}
