//! Reading samples and writing deterministic JSON.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::metric::{PointCloud, TriangleCheck};

/// Rows of numbers from CSV text. A first row that does not parse as
/// numbers is taken as a header and skipped.
pub fn parse_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if k == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!(
                    "row {}: {e}",
                    record.position().map_or(k as u64 + 1, |p| p.line())
                )))
            }
        }
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)?;
    Ok(text)
}

/// One point per row, one coordinate per column.
pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    PointCloud::from_points(parse_numeric_csv(&read_text(path)?)?)
}

/// A square matrix of pairwise distances.
pub fn read_distances_csv(path: &Path, check: TriangleCheck) -> Result<PointCloud> {
    PointCloud::from_distances(parse_numeric_csv(&read_text(path)?)?, check)
}

/// One filter value per row, from the first column.
pub fn read_values_csv(path: &Path) -> Result<Vec<f64>> {
    parse_numeric_csv(&read_text(path)?)?
        .into_iter()
        .map(|row| {
            row.first()
                .copied()
                .ok_or_else(|| Error::Parse("empty row in value file".into()))
        })
        .collect()
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// Compact JSON with every float written with 17 significant digits.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes to `path`, or to standard output for `-`.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_skipped() {
        let rows = parse_numeric_csv("x,y\n0,1\n2.5, 3\n").unwrap();
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![2.5, 3.0]]);
        assert!(parse_numeric_csv("0,1\nx,y\n").is_err());
    }

    #[test]
    fn floats_round_trip() {
        let v = serde_json::json!({"a": 0.1, "b": [1.0, -2.5e-300, 1.0 / 3.0], "c": 7});
        let text = to_json_string(&v).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
    }
}
