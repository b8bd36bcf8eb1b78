//! Trace CSV files: header `t,ax,ay,az,gx,gy,gz,label`, time in seconds,
//! one file per (subject, speed) named `subject{ID}_speed{KMH}.csv`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Tensor;

use super::{GaitTrace, DEFAULT_SAMPLE_RATE};

pub const CSV_HEADER: [&str; 8] = ["t", "ax", "ay", "az", "gx", "gy", "gz", "label"];

pub fn trace_file_name(subject_id: u32, speed_kmh: f64) -> String {
    format!("subject{subject_id}_speed{speed_kmh}.csv")
}

fn parse_file_name(name: &str) -> Option<(u32, f64)> {
    let stem = name.strip_suffix(".csv")?;
    let (subject, speed) = stem.strip_prefix("subject")?.split_once("_speed")?;
    Some((subject.parse().ok()?, speed.parse().ok()?))
}

pub fn write_trace_csv<W: Write>(trace: &GaitTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let x = &trace.samples;
    for (i, label) in trace.labels.iter().enumerate() {
        let mut row = Vec::with_capacity(8);
        row.push((i as f64 / trace.sample_rate).to_string());
        row.extend((0..6).map(|c| x.get(c, i).to_string()));
        row.push(label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one trace. The sample rate is inferred from the time column
/// (50 Hz when there are fewer than two rows).
pub fn read_trace_csv<R: Read>(reader: R, subject_id: u32, speed_kmh: f64) -> Result<GaitTrace> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(Error::data(format!(
            "expected header {}, found {}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut columns: [Vec<f64>; 6] = Default::default();
    let mut labels = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::data(format!("row {}: column {}: {e}", row + 2, CSV_HEADER[i])))
        };
        times.push(field(0)?);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(field(c + 1)?);
        }
        let label: u8 = rec[7]
            .trim()
            .parse()
            .ok()
            .filter(|&l| l <= 1)
            .ok_or_else(|| Error::data(format!("row {}: label must be 0 or 1", row + 2)))?;
        labels.push(label);
    }
    let n = labels.len();
    let sample_rate = if n >= 2 {
        let span = times[n - 1] - times[0];
        if span.is_nan() || span <= 0.0 {
            return Err(Error::data("time column is not increasing"));
        }
        ((n - 1) as f64 / span * 1000.0).round() / 1000.0
    } else {
        DEFAULT_SAMPLE_RATE
    };
    let samples = Tensor::new(6, n, columns.concat())?;
    Ok(GaitTrace {
        subject_id,
        speed_kmh,
        sample_rate,
        samples,
        labels,
    })
}

/// Loads every `subject*_speed*.csv` in `dir`, ordered by subject then speed.
pub fn load_dir(dir: &Path) -> Result<Vec<GaitTrace>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some((subject, speed)) = parse_file_name(name) {
            found.push((subject, speed, path));
        }
    }
    if found.is_empty() {
        return Err(Error::data(format!(
            "no subject*_speed*.csv traces in {}",
            dir.display()
        )));
    }
    found.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    found
        .into_iter()
        .map(|(subject, speed, path)| {
            let trace = read_trace_csv(File::open(&path)?, subject, speed)
                .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            Ok(trace)
        })
        .collect()
}
