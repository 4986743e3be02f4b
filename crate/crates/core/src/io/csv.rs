//! Plane-sample CSV: one row per sample, `plane_id,range,azimuth,platform`,
//! angles in radians, ranges in meters.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::IoError;
use crate::calib::PlaneDataset;
use crate::scan::ScanSample;

pub fn write_plane_samples_csv(rows: &[(String, ScanSample)], path: &Path) -> Result<(), IoError> {
    let file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "plane_id,range,azimuth,platform")?;
        for (id, s) in rows {
            writeln!(w, "{id},{},{},{}", s.range, s.azimuth, s.platform)?;
        }
        Ok(())
    })()
    .map_err(|e| IoError::file(path, e))
}

/// Read plane samples grouped by id, in first-appearance order. Dataset
/// validity (sample count, sweep coverage) is checked by the caller.
pub fn read_plane_samples_csv(path: &Path) -> Result<Vec<(String, Vec<ScanSample>)>, IoError> {
    let file = std::fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    let reader = BufReader::new(file);
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<ScanSample>> = Default::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IoError::file(path, e))?;
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if line_no == 1 && trimmed.starts_with("plane_id") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').collect();
        if cols.len() != 4 {
            return Err(IoError::parse(
                path,
                line_no,
                format!("expected 4 columns, got {}", cols.len()),
            ));
        }
        let parse = |v: &str| -> Result<f64, IoError> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| IoError::parse(path, line_no, format!("bad number `{v}`")))
        };
        let sample = ScanSample::new(parse(cols[1])?, parse(cols[2])?, parse(cols[3])?);
        if !(sample.range.is_finite() && sample.range > 0.0) {
            return Err(IoError::parse(path, line_no, "range must be positive"));
        }
        let id = cols[0].trim().to_string();
        if !groups.contains_key(&id) {
            order.push(id.clone());
        }
        groups.entry(id).or_default().push(sample);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let samples = groups.remove(&id).unwrap_or_default();
            (id, samples)
        })
        .collect())
}

/// Convenience: validated datasets straight from a CSV.
pub fn datasets_from_csv(path: &Path) -> Result<Vec<PlaneDataset>, crate::calib::CalibError> {
    let groups =
        read_plane_samples_csv(path).map_err(|e| crate::calib::CalibError::DegenerateGeometry {
            detail: format!("failed to read plane samples: {e}"),
        })?;
    groups
        .into_iter()
        .map(|(id, samples)| PlaneDataset::new(id, samples))
        .collect()
}
