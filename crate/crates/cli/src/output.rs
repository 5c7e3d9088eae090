//! Output documents, their readers and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use lhdeform::verify::superposition::ReconstructionSample;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to `dir/name` through a temporary file in `dir`.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let out = |source| CliError::Output {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(out)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(out)?;
    tmp.write_all(bytes).map_err(out)?;
    tmp.as_file().sync_all().map_err(out)?;
    tmp.persist(&path).map_err(|e| out(e.error))?;
    Ok(path)
}

pub fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("output documents serialize");
    s.push(b'\n');
    s
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> CliResult<PathBuf> {
    write_atomic(dir, name, &to_json(v))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// `None` for non-finite values, which JSON cannot carry.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Failed(format!("csv: {e}"))
}

/// One row of the reconstruction table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub t: f64,
    pub x1: f64,
    pub y1: f64,
    pub x1_rule: Option<f64>,
    pub y1_rule: Option<f64>,
    pub error: Option<f64>,
    pub failure: Option<String>,
}

impl From<&ReconstructionSample> for ReconstructionRow {
    fn from(s: &ReconstructionSample) -> Self {
        Self {
            t: s.t,
            x1: s.integrated[0],
            y1: s.integrated[1],
            x1_rule: s.reconstructed.map(|q| q[0]),
            y1_rule: s.reconstructed.map(|q| q[1]),
            error: s.error,
            failure: s.failure.clone(),
        }
    }
}

pub fn reconstruction_csv(rows: &[ReconstructionRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x1", "y1", "x1_rule", "y1_rule", "error", "failure"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            num(r.t),
            num(r.x1),
            num(r.y1),
            opt(r.x1_rule),
            opt(r.y1_rule),
            opt(r.error),
            r.failure.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Failed(e.to_string()))
}

pub fn read_reconstruction_csv(path: &Path) -> CliResult<Vec<ReconstructionRow>> {
    read_rows(path)
}

/// One `(family, z)` entry of a limit scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub family: String,
    pub z: f64,
    pub distance: Option<f64>,
}

pub fn limit_csv(rows: &[LimitRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["family", "z", "distance"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([r.family.clone(), num(r.z), opt(r.distance)])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Failed(e.to_string()))
}

pub fn read_limit_csv(path: &Path) -> CliResult<Vec<LimitRow>> {
    read_rows(path)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstruction_table_roundtrips() {
        let rows = vec![
            ReconstructionRow {
                t: 0.1,
                x1: -1.0 / 3.0,
                y1: 2.0,
                x1_rule: Some(0.1 + 0.2),
                y1_rule: Some(1e-300),
                error: Some(5e-17),
                failure: None,
            },
            ReconstructionRow {
                t: 0.2,
                x1: 1.0,
                y1: 2.0,
                x1_rule: None,
                y1_rule: None,
                error: None,
                failure: Some("singular configuration: y2 = y3, \"quoted\"".into()),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let bytes = reconstruction_csv(&rows).unwrap();
        let p = write_atomic(dir.path(), "r.csv", &bytes).unwrap();
        assert_eq!(read_reconstruction_csv(&p).unwrap(), rows);
        let only: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn limit_table_roundtrips() {
        let rows = vec![
            LimitRow {
                family: "hamiltonians".into(),
                z: 1e-2,
                distance: Some(0.0123),
            },
            LimitRow {
                family: "hamiltonians".into(),
                z: 1e-3,
                distance: None,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "l.csv", &limit_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_limit_csv(&p).unwrap(), rows);
    }
}
