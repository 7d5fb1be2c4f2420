//! Capture ingest and per-port channel-gain statistics.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    AntennaKind, CaptureHeader, CaptureRecord, CAPTURE_CSV_COLUMNS, CAPTURE_FORMAT_VERSION,
};

/// Snapshots weaker than the port's mean snapshot power by more than
/// this are treated as lost.
pub const DROP_THRESHOLD_DB: f64 = 30.0;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("capture holds no usable snapshots{0}")]
    EmptyCapture(String),
    #[error("format error on line {line}: {msg}")]
    FormatError { line: usize, msg: String },
    #[error("dimension error: {0}")]
    DimensionError(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortGainStats {
    /// `10 log10` of the time/frequency mean of the chain-summed power.
    pub per_port_mean_gain_db: Vec<f64>,
    /// Fraction of snapshots retained per port.
    pub per_port_validity: Vec<f64>,
    pub distance_m: f64,
    pub antenna_kind: AntennaKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionGainRange {
    pub min_gain_db: f64,
    pub max_gain_db: f64,
}

pub fn capture_gain_stats(rec: &CaptureRecord) -> Result<PortGainStats, CaptureError> {
    if !rec.is_consistent() {
        return Err(CaptureError::DimensionError(format!(
            "dims {:?} do not match {} entries",
            rec.dims,
            rec.snapshots.len()
        )));
    }
    let [nt, nf, nm, np] = rec.dims;
    if nt == 0 || nf == 0 || nm == 0 || np == 0 {
        return Err(CaptureError::EmptyCapture(format!(
            " (dims {:?})",
            rec.dims
        )));
    }
    let threshold = 10f64.powf(-DROP_THRESHOLD_DB / 10.0);
    let mut gains = Vec::with_capacity(np);
    let mut validity = Vec::with_capacity(np);
    for p in 0..np {
        let snapshot_power: Vec<f64> = (0..nt)
            .map(|t| {
                let mut acc = 0.0;
                for f in 0..nf {
                    for m in 0..nm {
                        acc += rec.get(t, f, m, p).norm_sqr();
                    }
                }
                acc
            })
            .collect();
        let mean = snapshot_power.iter().sum::<f64>() / nt as f64;
        if !(mean > 0.0) {
            return Err(CaptureError::EmptyCapture(format!(
                " (port {p} carries no power)"
            )));
        }
        let cutoff = mean * threshold;
        let kept: Vec<f64> = snapshot_power
            .into_iter()
            .filter(|&s| s >= cutoff)
            .collect();
        let kept_mean = kept.iter().sum::<f64>() / (kept.len() * nf) as f64;
        gains.push(10.0 * kept_mean.log10());
        validity.push(kept.len() as f64 / nt as f64);
    }
    Ok(PortGainStats {
        per_port_mean_gain_db: gains,
        per_port_validity: validity,
        distance_m: rec.distance_m,
        antenna_kind: rec.antenna_kind,
    })
}

/// Gain of the best port over each of the others, min and max.
pub fn selection_gain_range(stats: &PortGainStats) -> SelectionGainRange {
    let g = &stats.per_port_mean_gain_db;
    let best = g
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > g[best] { i } else { best });
    let diffs: Vec<f64> = g
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| g[best] - v)
        .collect();
    if diffs.is_empty() {
        return SelectionGainRange {
            min_gain_db: 0.0,
            max_gain_db: 0.0,
        };
    }
    SelectionGainRange {
        min_gain_db: diffs.iter().copied().fold(f64::INFINITY, f64::min),
        max_gain_db: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn ingest_capture(path: impl AsRef<Path>) -> Result<CaptureRecord, CaptureError> {
    read_capture(File::open(path)?)
}

fn format_err(line: usize, msg: impl Into<String>) -> CaptureError {
    CaptureError::FormatError {
        line,
        msg: msg.into(),
    }
}

pub fn read_capture<R: Read>(reader: R) -> Result<CaptureRecord, CaptureError> {
    let mut lines = BufReader::new(reader).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| format_err(1, "missing header"))??;
    let value: serde_json::Value = serde_json::from_str(&header_line)
        .map_err(|e| format_err(1, format!("header is not JSON: {e}")))?;
    match value.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(CAPTURE_FORMAT_VERSION) => {}
        Some(v) => return Err(format_err(1, format!("unsupported capture version {v}"))),
        None => return Err(format_err(1, "header lacks a version")),
    }
    let header: CaptureHeader =
        serde_json::from_value(value).map_err(|e| format_err(1, format!("bad header: {e}")))?;

    let columns = lines
        .next()
        .ok_or_else(|| format_err(2, "missing column row"))??;
    if columns.trim_end() != CAPTURE_CSV_COLUMNS {
        return Err(format_err(
            2,
            format!("expected columns `{CAPTURE_CSV_COLUMNS}`"),
        ));
    }

    let [nt, nf, nm, np] = header.dims;
    let expected = nt
        .checked_mul(nf)
        .and_then(|v| v.checked_mul(nm))
        .and_then(|v| v.checked_mul(np))
        .ok_or_else(|| format_err(1, "dims overflow"))?;
    let mut snapshots = Vec::with_capacity(expected);
    let mut subcarriers = vec![0usize; nf];

    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 3;
        if line.is_empty() {
            continue;
        }
        let n = snapshots.len();
        if n >= expected {
            return Err(CaptureError::DimensionError(format!(
                "more than the {expected} rows declared by dims {:?}",
                header.dims
            )));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(format_err(
                line_no,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let idx = |k: usize| -> Result<usize, CaptureError> {
            fields[k]
                .parse::<usize>()
                .map_err(|e| format_err(line_no, format!("field {k}: {e}")))
        };
        let num = |k: usize| -> Result<f64, CaptureError> {
            let v = fields[k]
                .parse::<f64>()
                .map_err(|e| format_err(line_no, format!("field {k}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format_err(line_no, format!("field {k} is not finite")))
            }
        };
        let p = n % np;
        let m = (n / np) % nm;
        let f = (n / (np * nm)) % nf;
        let t = n / (np * nm * nf);
        if idx(0)? != t || idx(2)? != m || idx(3)? != p {
            return Err(format_err(
                line_no,
                format!("row out of order, expected ({t}, _, {m}, {p})"),
            ));
        }
        let sc = idx(1)?;
        if t == 0 && m == 0 && p == 0 {
            subcarriers[f] = sc;
        } else if subcarriers[f] != sc {
            return Err(format_err(
                line_no,
                format!("subcarrier {sc} does not match {}", subcarriers[f]),
            ));
        }
        snapshots.push(Complex64::new(num(4)?, num(5)?));
    }
    if snapshots.len() != expected {
        return Err(CaptureError::DimensionError(format!(
            "found {} rows, dims {:?} require {expected}",
            snapshots.len(),
            header.dims
        )));
    }
    Ok(CaptureRecord {
        dims: header.dims,
        subcarriers,
        snapshots,
        frame_period_ms: header.frame_period_ms,
        distance_m: header.distance_m,
        antenna_kind: header.antenna_kind,
        seed: header.seed,
    })
}

pub fn write_stats_csv<W: Write>(
    mut w: W,
    stats: &PortGainStats,
    range: &SelectionGainRange,
) -> io::Result<()> {
    writeln!(w, "port,mean_gain_db,validity")?;
    for (p, (g, v)) in stats
        .per_port_mean_gain_db
        .iter()
        .zip(&stats.per_port_validity)
        .enumerate()
    {
        writeln!(w, "{p},{g:.2},{v:.4}")?;
    }
    writeln!(w, "min_gain_db,max_gain_db")?;
    writeln!(w, "{:.2},{:.2}", range.min_gain_db, range.max_gain_db)
}
