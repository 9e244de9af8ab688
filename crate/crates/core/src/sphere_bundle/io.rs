//! Field files: a JSON header `<stem>.json` and a CSV body `<stem>.csv`
//! with columns `node,angle,re,im`, one row per sample in node-major order.
//! Floats are written in shortest round-trip form.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::field::AngularField;
use super::grid::{GridSpec, SpatialGrid};
use crate::{Error, Result, C64};

pub const FIELD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    pub n_angles: usize,
    pub n_nodes: usize,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_field(field: &AngularField, stem: &Path) -> Result<()> {
    let header = FieldHeader {
        format: "angular_field".into(),
        version: FIELD_FORMAT_VERSION,
        grid: field.grid().spec(),
        n_angles: field.n_angles(),
        n_nodes: field.grid().len(),
    };
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&header)? + "\n")?;
    let mut out = BufWriter::new(fs::File::create(with_ext(stem, "csv"))?);
    writeln!(out, "node,angle,re,im")?;
    for node in 0..field.grid().len() {
        for j in 0..field.n_angles() {
            let v = field.value(node, j);
            writeln!(out, "{node},{j},{:?},{:?}", v.re, v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(stem: &Path) -> Result<AngularField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(with_ext(stem, "json"))?)?;
    if header.format != "angular_field" || header.version != FIELD_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported field header {}/{}", header.format, header.version)));
    }
    let grid = Arc::new(SpatialGrid::from_spec(header.grid)?);
    if grid.len() != header.n_nodes {
        return Err(Error::DimensionMismatch { expected: grid.len(), actual: header.n_nodes });
    }
    let n = header.n_angles;
    let mut values = vec![C64::new(0.0, 0.0); grid.len() * n];
    let mut seen = vec![false; values.len()];
    let reader = BufReader::new(fs::File::open(with_ext(stem, "csv"))?);
    for (line_no, line) in reader.lines().enumerate().skip(1) {
        let line = line?;
        let bad = || Error::Format(format!("line {}: {line:?}", line_no + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad());
        }
        let node: usize = cols[0].parse().map_err(|_| bad())?;
        let j: usize = cols[1].parse().map_err(|_| bad())?;
        let re: f64 = cols[2].parse().map_err(|_| bad())?;
        let im: f64 = cols[3].parse().map_err(|_| bad())?;
        if node >= grid.len() || j >= n {
            return Err(bad());
        }
        values[node * n + j] = C64::new(re, im);
        seen[node * n + j] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Format(format!("missing sample {missing}")));
    }
    AngularField::from_values(grid, n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = Arc::new(SpatialGrid::new(3).unwrap());
        let f = AngularField::from_fn(g, 8, |x, phi| C64::new(x[0] + phi.sin() / 3.0, x[1] * 1e-300)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("field");
        write_field(&f, &stem).unwrap();
        let back = read_field(&stem).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.n_angles(), 8);
    }

    #[test]
    fn rejects_truncated_body() {
        let g = Arc::new(SpatialGrid::new(2).unwrap());
        let f = AngularField::from_fn(g, 4, |_, _| C64::new(1.0, 0.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("f");
        write_field(&f, &stem).unwrap();
        let csv = dir.path().join("f.csv");
        let text = fs::read_to_string(&csv).unwrap();
        let cut: Vec<&str> = text.lines().take(5).collect();
        fs::write(&csv, cut.join("\n")).unwrap();
        assert!(read_field(&stem).is_err());
    }
}
