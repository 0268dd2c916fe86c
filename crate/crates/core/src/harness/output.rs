//! CSV files written by runs and sweeps.

use std::io::{Read, Write};

use crate::click_models::ModelKind;
use crate::error::{Error, Result};
use crate::harness::{Algorithm, RegretTrace, SeriesSummary};

pub const RESULTS_HEADER: [&str; 9] = [
    "run_id",
    "algorithm",
    "model",
    "seed",
    "window_index",
    "window_start",
    "window_end",
    "avg_per_step_regret",
    "cumulative_regret",
];

pub const EVENTS_HEADER: [&str; 5] = ["run_id", "step", "event_type", "batch_id", "detail"];

pub const AGGREGATE_HEADER: [&str; 6] = [
    "algorithm",
    "window_index",
    "window_start",
    "window_end",
    "mean_per_step_regret",
    "runs",
];

pub const HISTOGRAM_HEADER: [&str; 4] = ["algorithm", "bin_lower", "bin_upper", "count"];

/// One row of a results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub run_id: String,
    pub algorithm: Algorithm,
    pub model: ModelKind,
    pub seed: u64,
    pub window_index: usize,
    pub window_start: u64,
    pub window_end: u64,
    pub avg_per_step_regret: f64,
    pub cumulative_regret: f64,
}

pub fn write_results<W: Write>(out: W, traces: &[RegretTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for t in traces {
        for win in &t.windows {
            w.write_record([
                t.run_id.clone(),
                t.algorithm.to_string(),
                t.model.to_string(),
                t.seed.to_string(),
                win.index.to_string(),
                win.start.to_string(),
                win.end.to_string(),
                win.avg_per_step_regret.to_string(),
                win.cumulative_regret.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(out: W, traces: &[RegretTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER)?;
    for t in traces {
        for e in &t.events {
            w.write_record([
                t.run_id.clone(),
                e.step.to_string(),
                e.kind.to_string(),
                e.batch.to_string(),
                e.detail.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(out: W, series: &[SeriesSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for s in series {
        for (i, (&(start, end), &mean)) in s.windows.iter().zip(&s.mean_regret).enumerate() {
            w.write_record([
                s.algorithm.to_string(),
                i.to_string(),
                start.to_string(),
                end.to_string(),
                mean.to_string(),
                s.runs.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(out: W, series: &[SeriesSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_HEADER)?;
    for s in series {
        let h = &s.histogram;
        for (bin, &count) in h.counts.iter().enumerate() {
            w.write_record([
                s.algorithm.to_string(),
                h.edges[bin].to_string(),
                h.edges[bin + 1].to_string(),
                count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, index: usize, row: usize) -> Result<T> {
    let raw = record.get(index).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::Schema(format!(
            "row {row}: cannot parse `{raw}` in column `{}`",
            RESULTS_HEADER[index]
        ))
    })
}

/// Reads a results CSV, checking the header against [`RESULTS_HEADER`].
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "unexpected results header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = i + 2;
        rows.push(ResultRow {
            run_id: record.get(0).unwrap_or("").to_string(),
            algorithm: field(&record, 1, row)?,
            model: field(&record, 2, row)?,
            seed: field(&record, 3, row)?,
            window_index: field(&record, 4, row)?,
            window_start: field(&record, 5, row)?,
            window_end: field(&record, 6, row)?,
            avg_per_step_regret: field(&record, 7, row)?,
            cumulative_regret: field(&record, 8, row)?,
        });
    }
    Ok(rows)
}
