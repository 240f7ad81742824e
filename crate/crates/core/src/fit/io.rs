//! Dataset CSV with columns `freq_hz, psd_sn, angle_rad, n_avg`.
//!
//! Rows sharing an angle form one trace; traces keep the order in which
//! their angle first appears.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::TraceData;
use crate::error::{invalid, Result};
use crate::spectrum::PsdTrace;

/// One CSV row of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    freq_hz: f64,
    psd_sn: f64,
    angle_rad: f64,
    n_avg: f64,
}

pub fn read_dataset_csv(reader: impl Read) -> Result<Vec<TraceData>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut traces: Vec<TraceData> = Vec::new();
    for row in rdr.deserialize() {
        let row: DatasetRow = row?;
        let k = match traces
            .iter()
            .position(|t| t.trace.angle == Some(row.angle_rad))
        {
            Some(k) => k,
            None => {
                traces.push(TraceData {
                    trace: PsdTrace {
                        grid: Vec::new(),
                        values_sn: Vec::new(),
                        angle: Some(row.angle_rad),
                    },
                    n_avg: row.n_avg,
                });
                traces.len() - 1
            }
        };
        let t = &mut traces[k];
        if t.n_avg != row.n_avg {
            return Err(invalid(format!(
                "trace at angle {} mixes n_avg {} and {}",
                row.angle_rad, t.n_avg, row.n_avg
            )));
        }
        t.trace.grid.push(TAU * row.freq_hz);
        t.trace.values_sn.push(row.psd_sn);
    }
    if traces.is_empty() {
        return Err(invalid("dataset CSV has no rows"));
    }
    Ok(traces)
}

/// Flattens traces into rows, trace by trace.
pub fn dataset_rows(data: &[TraceData]) -> Result<Vec<DatasetRow>> {
    let mut rows = Vec::new();
    for (k, d) in data.iter().enumerate() {
        let angle = d
            .trace
            .angle
            .ok_or_else(|| invalid(format!("trace {k} has no detection angle")))?;
        for (w, v) in d.trace.grid.iter().zip(&d.trace.values_sn) {
            rows.push(DatasetRow {
                freq_hz: w / TAU,
                psd_sn: *v,
                angle_rad: angle,
                n_avg: d.n_avg,
            });
        }
    }
    Ok(rows)
}

pub fn write_dataset_csv(writer: impl Write, data: &[TraceData]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in dataset_rows(data)? {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
