//! Per-step records and the summary derived from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::CliError;

/// One update (or, for `bits-sweep`, one precision) of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: usize,
    /// The update applied, e.g. `A[1,2] += -1` or `ins 0 3`.
    pub op: String,
    pub answer: String,
    pub oracle: String,
    pub abs_error: f64,
    pub rel_error: f64,
    pub ledger: Option<f64>,
    /// Fractional bits of the run, for `bits-sweep`.
    pub bits: Option<u32>,
    /// Rank or Tutte rank after the step, where applicable.
    pub rank: Option<usize>,
    pub pass: bool,
    /// Wall-clock time of the step. Never part of pass/fail.
    pub micros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub seed: u64,
    pub steps: usize,
    pub failures: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub eps: f64,
    /// Largest change of rank between consecutive steps (`rank` only).
    pub max_rank_step: Option<usize>,
    /// Least-squares slope of `log₂(error)` against bits (`bits-sweep` only).
    pub slope: Option<f64>,
    pub pass: bool,
    /// Steps per second. Never part of pass/fail.
    pub throughput: f64,
}

impl Summary {
    /// Everything except the slope and the rank step is a fold over `records`.
    pub fn from_records(scenario: Scenario, seed: u64, eps: f64, records: &[Record]) -> Self {
        let fold = |f: fn(&Record) -> f64| records.iter().map(f).fold(0.0, f64::max);
        let micros: f64 = records.iter().map(|r| r.micros).sum();
        let max_rank_step = match scenario {
            Scenario::Rank => Some(
                records
                    .windows(2)
                    .filter_map(|w| Some(w[0].rank?.abs_diff(w[1].rank?)))
                    .max()
                    .unwrap_or(0),
            ),
            _ => None,
        };
        let slope = match scenario {
            Scenario::BitsSweep => fit_slope(records),
            _ => None,
        };
        let failures = records.iter().filter(|r| !r.pass).count();
        let slope_ok = slope.is_none_or(|s| s <= MAX_SLOPE);
        Summary {
            scenario,
            seed,
            steps: records.len(),
            failures,
            max_abs_error: fold(|r| r.abs_error),
            max_rel_error: fold(|r| r.rel_error),
            eps,
            max_rank_step,
            slope,
            pass: failures == 0 && slope_ok,
            throughput: if micros > 0.0 {
                records.len() as f64 * 1e6 / micros
            } else {
                0.0
            },
        }
    }
}

/// A `bits-sweep` passes only if `log₂(error)` falls at least this fast per bit.
pub const MAX_SLOPE: f64 = -0.8;

/// Least-squares slope of `log₂(abs_error)` against `bits`; `None` with
/// fewer than two points. Zero errors are clamped to the smallest positive
/// double.
pub fn fit_slope(records: &[Record]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            Some((
                f64::from(r.bits?),
                r.abs_error.max(f64::MIN_POSITIVE).log2(),
            ))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / m,
        pts.iter().map(|p| p.1).sum::<f64>() / m,
    );
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(scenario: Scenario, seed: u64, eps: f64, records: Vec<Record>) -> Self {
        let summary = Summary::from_records(scenario, seed, eps, &records);
        Report { records, summary }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    /// The report with every timing field zeroed.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.micros = 0.0;
        }
        r.summary.throughput = 0.0;
        r
    }

    /// One JSON object per record, then `{"summary": …}`.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(e.to_string());
        for rec in &self.records {
            serde_json::to_writer(&mut w, rec).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(w).map_err(io)?;
        }
        serde_json::to_writer(&mut w, &serde_json::json!({ "summary": self.summary }))
            .map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(w).map_err(io)
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        for rec in &self.records {
            out.serialize(rec)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        out.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}
