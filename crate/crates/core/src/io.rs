//! Sample-dump CSV files: one row per point, header `x0,...,x{d-1}`.

use std::path::Path;

use crate::error::{Error, Result};

pub fn write_points<W: std::io::Write>(out: W, points: &[Vec<f64>]) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..d).map(|i| format!("x{i}")))?;
    for (k, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::Input(format!("point {k} has dimension {}, expected {d}", p.len())));
        }
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_csv(path: impl AsRef<Path>, points: &[Vec<f64>]) -> Result<()> {
    write_points(std::fs::File::create(path)?, points)
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let d = r.headers()?.len();
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let p = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Input(format!("sample row {k}: {e}")))?;
        if p.len() != d {
            return Err(Error::Input(format!("sample row {k} has {} fields, expected {d}", p.len())));
        }
        out.push(p);
    }
    Ok(out)
}
