//! File formats: CSV tables with a JSON sidecar carrying column units and
//! the schema version, plain JSON documents, and raw little-endian f64 series.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SensitivityRow;

pub const SCHEMA_VERSION: &str = "1.0";

pub const BUDGET_UNITS: &[(&str, &str)] = &[
    ("omega_rad_s", "rad/s"),
    ("f_hz", "Hz"),
    ("sxx_imp", "m^2/Hz"),
    ("sxx_th", "m^2/Hz"),
    ("sxx_ba", "m^2/Hz"),
    ("sxx_tot", "m^2/Hz"),
    ("saa_det", "m^2 s^-4/Hz"),
    ("saa_sql", "m^2 s^-4/Hz"),
];

pub const SENSITIVITY_UNITS: &[(&str, &str)] = &[
    ("f_hz", "Hz"),
    ("mass_ev", "eV"),
    ("g_min", "1"),
    ("regime", "sub-coherence|super-coherence"),
    ("mode_count", "1"),
];

pub const SCAN_UNITS: &[(&str, &str)] = &[
    ("step_index", "1"),
    ("f_center_hz", "Hz"),
    ("bandwidth_hz", "Hz"),
    ("dwell_s", "s"),
    ("cumulative_s", "s"),
];

pub const MODE_UNITS: &[(&str, &str)] = &[
    ("i", "1"),
    ("j", "1"),
    ("f_hz", "Hz"),
    ("beta", "1"),
    ("m_kg", "kg"),
];

pub const RATIO_UNITS: &[(&str, &str)] = &[("f_hz", "Hz"), ("ratio", "1")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

/// Metadata written next to every CSV as `<stem>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: String,
    pub kind: String,
    pub columns: Vec<Column>,
    pub rows: usize,
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Write `rows` as CSV plus a sidecar describing `units`.
pub fn write_table<T, I>(path: &Path, kind: &str, units: &[(&str, &str)], rows: I, meta: serde_json::Value) -> Result<usize>
where
    T: Serialize,
    I: IntoIterator<Item = T>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut n = 0;
    for row in rows {
        w.serialize(row)?;
        n += 1;
    }
    if n == 0 {
        w.write_record(units.iter().map(|(c, _)| *c))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION.into(),
        kind: kind.into(),
        columns: units
            .iter()
            .map(|(name, unit)| Column {
                name: (*name).into(),
                unit: (*unit).into(),
            })
            .collect(),
        rows: n,
        meta,
    };
    write_json(&sidecar_path(path), &sidecar)?;
    Ok(n)
}

/// Read CSV rows, checking the sidecar's schema version when one exists.
pub fn read_table<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Vec<T>> {
    let side = sidecar_path(path);
    if side.exists() {
        let sc: Sidecar = read_json(&side)?;
        if sc.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                reason: format!("schema_version {} (expected {SCHEMA_VERSION})", sc.schema_version),
            });
        }
        if sc.kind != kind {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                reason: format!("file holds '{}', expected '{kind}'", sc.kind),
            });
        }
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_sensitivity_csv(path: &Path) -> Result<Vec<SensitivityRow>> {
    let rows: Vec<SensitivityRow> = read_table(path, "sensitivity")?;
    if rows.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: "no sensitivity rows".into(),
        });
    }
    Ok(rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Sidecar for a raw series dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSidecar {
    pub schema_version: String,
    pub dtype: String,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
}

/// Write `data` as little-endian f64 to `path` and a JSON sidecar next to it.
pub fn write_series(path: &Path, data: &[f64], sample_rate_hz: f64, seed: u64) -> Result<()> {
    let mut w = create(path)?;
    for x in data {
        w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sc = SeriesSidecar {
        schema_version: SCHEMA_VERSION.into(),
        dtype: "f64le".into(),
        samples: data.len(),
        sample_rate_hz,
        duration_s: data.len() as f64 / sample_rate_hz,
        seed,
    };
    write_json(&sidecar_path(path), &sc)
}

pub fn read_series(path: &Path) -> Result<(Vec<f64>, SeriesSidecar)> {
    let sc: SeriesSidecar = read_json(&sidecar_path(path))?;
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != 8 * sc.samples {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: format!("{} bytes for {} samples", bytes.len(), sc.samples),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((data, sc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Regime;

    #[test]
    fn sensitivity_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = vec![SensitivityRow {
            f_hz: 4016.0,
            mass_ev: 1.66e-11,
            g_min: 2.6e-23,
            regime: Regime::SubCoherence,
            mode_count: 1,
        }];
        write_table(&path, "sensitivity", SENSITIVITY_UNITS, &rows, serde_json::Value::Null).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("f_hz,mass_ev,g_min,regime,mode_count\n"));
        assert!(text.contains("sub-coherence"));
        assert_eq!(read_sensitivity_csv(&path).unwrap(), rows);
        assert!(read_table::<SensitivityRow>(&path, "budget").is_err());
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.f64");
        let data = vec![1.0, -2.5, f64::MIN_POSITIVE];
        write_series(&path, &data, 100.0, 9).unwrap();
        let (back, sc) = read_series(&path).unwrap();
        assert_eq!(back, data);
        assert_eq!(sc.seed, 9);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 24);
    }
}
