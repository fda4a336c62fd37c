//! On-disk formats: energy logs, raw field dumps with JSON sidecars, and PGM
//! snapshots.
//!
//! A field dump is two files sharing a stem: `<stem>.bin` holds the values as
//! little-endian IEEE-754 doubles in row-major order, `<stem>.json` holds a
//! [`DumpMeta`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, PeriodicGrid};
use crate::stepper::EnergyRecord;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub const ENERGY_HEADER: &str = "step,time,standard_energy,modified_energy,max_abs,mean";

pub fn energy_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(ENERGY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.step,
            fmt_real(r.time),
            fmt_real(r.standard_energy),
            fmt_real(r.modified_energy),
            fmt_real(r.max_abs),
            fmt_real(r.mean)
        ));
    }
    out
}

pub fn write_energy_csv(path: &Path, records: &[EnergyRecord]) -> Result<()> {
    fs::write(path, energy_csv(records)).map_err(|e| Error::io(path, e))
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, m: &str| Error::Format {
        path: path.to_path_buf(),
        message: format!("line {line}: {m}"),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == ENERGY_HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad(i + 1, "expected 6 columns"));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        out.push(EnergyRecord {
            step: cols[0].parse().map_err(|_| bad(i + 1, "bad step"))?,
            time: real(cols[1])?,
            standard_energy: real(cols[2])?,
            modified_energy: real(cols[3])?,
            max_abs: real(cols[4])?,
            mean: real(cols[5])?,
        });
    }
    Ok(out)
}

/// Sidecar describing a raw field dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpMeta {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub dim: usize,
    pub step: usize,
    pub time: f64,
    pub potential: String,
    pub params: serde_json::Value,
}

impl DumpMeta {
    pub fn new(
        field: &Field,
        step: usize,
        time: f64,
        potential: &str,
        params: serde_json::Value,
    ) -> Self {
        let g = field.grid();
        DumpMeta {
            n: g.n(),
            length: g.length(),
            dim: g.dim(),
            step,
            time,
            potential: potential.to_string(),
            params,
        }
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn dump_exists(stem: &Path) -> bool {
    with_suffix(stem, ".bin").is_file() && with_suffix(stem, ".json").is_file()
}

pub fn write_field_dump(stem: &Path, field: &Field, meta: &DumpMeta) -> Result<()> {
    let bin = with_suffix(stem, ".bin");
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let json = with_suffix(stem, ".json");
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Format {
        path: json.clone(),
        message: e.to_string(),
    })?;
    fs::write(&json, text).map_err(|e| Error::io(&json, e))
}

pub fn read_field_dump(stem: &Path) -> Result<(Field, DumpMeta)> {
    let json = with_suffix(stem, ".json");
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let meta: DumpMeta = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: json.clone(),
        message: e.to_string(),
    })?;
    let bin = with_suffix(stem, ".bin");
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            path: bin,
            message: "length is not a multiple of 8".into(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let grid = PeriodicGrid::new(meta.n, meta.length, meta.dim)?;
    let field = Field::new(grid, values).map_err(|e| Error::Format {
        path: bin,
        message: e.to_string(),
    })?;
    Ok((field, meta))
}

/// 8-bit binary PGM; `[-u_max_display, u_max_display]` maps onto `[0, 255]`.
/// One-dimensional fields become a single row.
pub fn write_pgm(path: &Path, field: &Field, u_max_display: f64) -> Result<()> {
    let g = field.grid();
    let (width, height) = match g.dim() {
        1 => (g.n(), 1),
        _ => (g.n(), g.n()),
    };
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    // image rows run along y, top row is the largest y
    for row in 0..height {
        for col in 0..width {
            let index = match g.dim() {
                1 => col,
                _ => col * g.n() + (height - 1 - row),
            };
            bytes.push(gray_level(field.values()[index], u_max_display));
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn gray_level(u: f64, u_max_display: f64) -> u8 {
    let t = (u + u_max_display) / (2.0 * u_max_display);
    (t.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(8, 2.0, 2).unwrap();
        let f = Field::from_fn(g, |x, y| (x * 1.3).sin() / 3.0 + y * 1e-17).unwrap();
        let meta = DumpMeta::new(&f, 7, 0.7, "polynomial", serde_json::json!({"eps": 0.1}));
        let stem = dir.path().join("u_0007");
        write_field_dump(&stem, &f, &meta).unwrap();
        assert!(dump_exists(&stem));
        let (back, m) = read_field_dump(&stem).unwrap();
        assert_eq!(m, meta);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn energy_csv_round_trip() {
        let recs = vec![
            EnergyRecord {
                step: 0,
                time: 0.0,
                standard_energy: 1.0 / 3.0,
                modified_energy: 0.1 + 0.2,
                max_abs: 0.05,
                mean: -1e-300,
            },
            EnergyRecord {
                step: 10,
                time: 0.1,
                standard_energy: std::f64::consts::PI,
                modified_energy: 2.0,
                max_abs: 1.0,
                mean: 0.0,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("energy.csv");
        write_energy_csv(&p, &recs).unwrap();
        assert_eq!(read_energy_csv(&p).unwrap(), recs);
    }

    #[test]
    fn pgm_header_and_levels() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(4, 1.0, 2).unwrap();
        let f = Field::constant(g, 1.0);
        let p = dir.path().join("s.pgm");
        write_pgm(&p, &f, 1.0).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n4 4\n255\n"));
        assert_eq!(bytes.len(), 11 + 16);
        assert!(bytes[11..].iter().all(|&b| b == 255));
        assert_eq!(gray_level(-1.0, 1.0), 0);
        assert_eq!(gray_level(0.0, 1.0), 128);
        assert_eq!(gray_level(5.0, 1.0), 255);
    }
}
