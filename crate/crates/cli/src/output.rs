//! On-disk artifacts: `records.csv`, `summary.json` and binary field snapshots.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use nlslab_core::{Field, Grid, GridSpec, Trajectory};

use crate::config::Precision;
use crate::error::{CliError, Result};

/// Comment line heading every records file.
pub const RECORDS_SCHEMA_LINE: &str = "# nlslab records schema 1";

/// Snapshot magic bytes.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"NLSFLD1\0";
pub const SNAPSHOT_HEADER_LEN: usize = 64;

/// Writes one row per record: `t`, the trajectory's columns, then `valid` (1/0).
/// Floats use Rust's shortest round-trip formatting, so reading a file back
/// reproduces the recorded values exactly.
pub fn write_records(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{RECORDS_SCHEMA_LINE}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(traj.columns.iter().cloned());
    header.push("valid".to_string());
    w.write_record(&header)?;
    for r in &traj.records {
        let mut row = Vec::with_capacity(r.values.len() + 2);
        row.push(r.t.to_string());
        row.extend(r.values.iter().map(|v| v.to_string()));
        row.push(if r.valid { "1" } else { "0" }.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Parsed `records.csv`: the header (including `t` and `valid`) and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RecordTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_records(path: &Path) -> Result<RecordTable> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(BufReader::new(file));
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| CliError::Parse {
                    path: path.to_path_buf(),
                    message: format!("bad number {s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(RecordTable { header, rows })
}

/// One entry in the summary's `checks` list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ threshold` (a NaN value fails).
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Binary snapshot: a 64-byte little-endian header followed by `n^dim`
/// interleaved (re, im) pairs in row-major order.
///
/// | offset | type   | content                              |
/// |--------|--------|--------------------------------------|
/// | 0      | [u8;8] | `NLSFLD1\0`                          |
/// | 8      | u32    | dim                                  |
/// | 12     | u32    | n                                    |
/// | 16     | f64    | L                                    |
/// | 24     | f64    | t                                    |
/// | 32     | u32    | bytes per element (16 or 8)          |
/// | 36     | zeros  | padding to 64                        |
pub fn encode_snapshot(field: &Field, precision: Precision) -> Vec<u8> {
    let grid = field.grid();
    let elem = match precision {
        Precision::F64 => 16,
        Precision::F32 => 8,
    };
    let mut buf = Vec::with_capacity(SNAPSHOT_HEADER_LEN + elem * grid.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.length().to_le_bytes());
    buf.extend_from_slice(&field.t().to_le_bytes());
    buf.extend_from_slice(&(elem as u32).to_le_bytes());
    buf.resize(SNAPSHOT_HEADER_LEN, 0);
    for v in field.values() {
        match precision {
            Precision::F64 => {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
            Precision::F32 => {
                buf.extend_from_slice(&(v.re as f32).to_le_bytes());
                buf.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
        }
    }
    buf
}

pub fn decode_snapshot(bytes: &[u8], origin: &Path) -> Result<Field> {
    let bad = |reason: String| CliError::BadSnapshot {
        path: origin.to_path_buf(),
        reason,
    };
    if bytes.len() < SNAPSHOT_HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad("wrong magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dim = u32_at(8) as usize;
    let n = u32_at(12) as usize;
    let length = f64_at(16);
    let t = f64_at(24);
    let elem = u32_at(32) as usize;
    if elem != 16 && elem != 8 {
        return Err(bad(format!("unsupported element size {elem}")));
    }
    let grid = Grid::new(GridSpec::new(dim, n, length)).map_err(|e| bad(e.to_string()))?;
    let body = &bytes[SNAPSHOT_HEADER_LEN..];
    if body.len() != elem * grid.len() {
        return Err(bad(format!("expected {} data bytes, found {}", elem * grid.len(), body.len())));
    }
    let values: Vec<Complex64> = body
        .chunks_exact(elem)
        .map(|c| {
            if elem == 16 {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            } else {
                Complex64::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..].try_into().unwrap()) as f64,
                )
            }
        })
        .collect();
    Field::new(grid, values, t).map_err(|e| bad(e.to_string()))
}

pub fn write_snapshot(path: &Path, field: &Field, precision: Precision) -> Result<()> {
    std::fs::write(path, encode_snapshot(field, precision)).map_err(|e| CliError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    decode_snapshot(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Field {
        let g = Grid::new(GridSpec::new(2, 8, 3.0)).unwrap();
        Field::from_fn(&g, 0.25, |p| Complex64::new(p[0].sin(), (p[1] * 0.3).exp()))
    }

    #[test]
    fn header_layout() {
        let u = sample();
        let b = encode_snapshot(&u, Precision::F64);
        assert_eq!(b.len(), 64 + 16 * 64);
        assert_eq!(&b[..8], b"NLSFLD1\0");
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 3.0);
        assert_eq!(f64::from_le_bytes(b[24..32].try_into().unwrap()), 0.25);
        assert!(b[36..64].iter().all(|&x| x == 0));
        let first = u.values()[0];
        assert_eq!(f64::from_le_bytes(b[64..72].try_into().unwrap()), first.re);
        assert_eq!(f64::from_le_bytes(b[72..80].try_into().unwrap()), first.im);
    }

    #[test]
    fn round_trips() {
        let u = sample();
        let back = decode_snapshot(&encode_snapshot(&u, Precision::F64), Path::new("x")).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.t(), u.t());
        assert_eq!(back.grid(), u.grid());
        let single = decode_snapshot(&encode_snapshot(&u, Precision::F32), Path::new("x")).unwrap();
        assert!(single.l2_distance(&u).unwrap() < 1e-6 * u.l2_norm());
    }

    #[test]
    fn rejects_corruption() {
        let mut b = encode_snapshot(&sample(), Precision::F64);
        assert!(decode_snapshot(&b[..40], Path::new("x")).is_err());
        b.pop();
        assert!(decode_snapshot(&b, Path::new("x")).is_err());
        b[0] = b'X';
        assert!(decode_snapshot(&b, Path::new("x")).is_err());
    }
}
