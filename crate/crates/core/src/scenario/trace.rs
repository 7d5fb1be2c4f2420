use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::stats::{median, median_gain, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub ue: usize,
    pub selected_port: usize,
    /// Linear mean over subcarriers, in dB.
    pub sinr_db: f64,
    pub throughput_mbit_s: f64,
    pub synced: bool,
}

/// Per-frame throughput rows of every UE, ordered by time then UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputTrace {
    pub rows: Vec<TraceRow>,
    pub config_digest: String,
    pub seed: u64,
}

impl ThroughputTrace {
    pub fn rows_for(&self, ue: usize) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.ue == ue)
    }

    pub fn throughputs(&self, ue: usize) -> Vec<f64> {
        self.rows_for(ue).map(|r| r.throughput_mbit_s).collect()
    }

    pub fn sinrs_db(&self, ue: usize) -> Vec<f64> {
        self.rows_for(ue).map(|r| r.sinr_db).collect()
    }

    pub fn num_ues(&self) -> usize {
        self.rows.iter().map(|r| r.ue + 1).max().unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_COLUMNS}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.2},{},{},{:.4},{:.6},{}",
                r.t_s, r.ue, r.selected_port, r.sinr_db, r.throughput_mbit_s, r.synced
            )?;
        }
        Ok(())
    }
}

pub const TRACE_COLUMNS: &str = "t_s,ue,selected_port,sinr_db,throughput_mbit_s,synced";

/// Median gain, or the reason none could be formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainValue {
    Ratio(f64),
    Infinite,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSummary {
    pub ue: usize,
    pub median_mbit_s: Option<f64>,
    pub baseline_median_mbit_s: Option<f64>,
    pub median_gain: GainValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub config_digest: String,
    pub ues: Vec<UeSummary>,
}

/// Per-UE medians of `with` and the gain over `baseline`.
pub fn summarize(with: &ThroughputTrace, baseline: &ThroughputTrace, num_ues: usize) -> RunSummary {
    let ues = (0..num_ues)
        .map(|ue| UeSummary {
            ue,
            median_mbit_s: median(&with.throughputs(ue)).ok(),
            baseline_median_mbit_s: median(&baseline.throughputs(ue)).ok(),
            median_gain: match median_gain(with, baseline, ue) {
                Ok(g) => GainValue::Ratio(g),
                Err(StatsError::ZeroMedian) => GainValue::Infinite,
                Err(StatsError::EmptyInput) => GainValue::Undefined,
            },
        })
        .collect();
    RunSummary {
        seed: with.seed,
        config_digest: with.config_digest.clone(),
        ues,
    }
}
