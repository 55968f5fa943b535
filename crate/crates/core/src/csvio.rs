//! Small CSV helpers shared by the table, graph and cover formats.
//!
//! Reals are written with Rust's shortest round-trip formatting so that
//! re-reading a file reproduces every value bit for bit; `+inf` is spelled
//! literally.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::extgrid::ExtValue;

pub fn format_real(v: f64) -> String {
    format!("{v}")
}

pub fn format_ext(v: ExtValue) -> String {
    v.to_string()
}

/// Reads every record of a CSV file as trimmed strings. No header handling.
pub fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn is_numeric_field(s: &str) -> bool {
    s.parse::<ExtValue>().is_ok()
}

/// Reads `(x, value)` rows with strictly increasing `x`. A leading header
/// row (first field not numeric) is skipped.
pub fn read_xy_table(path: &Path) -> Result<Vec<(f64, ExtValue)>> {
    let rows = read_records(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        if k == 0 && row.first().is_some_and(|f| !is_numeric_field(f)) {
            continue;
        }
        if row.len() != 2 {
            return Err(Error::malformed(
                path,
                format!("row {} has {} fields, expected 2", k + 1, row.len()),
            ));
        }
        let x = parse_finite(path, &row[0], k)?;
        let v: ExtValue = row[1]
            .parse()
            .map_err(|_| Error::malformed(path, format!("row {}: bad value {:?}", k + 1, row[1])))?;
        if let Some(&(prev, _)) = out.last() {
            if x <= prev {
                return Err(Error::malformed(
                    path,
                    format!("row {}: x values must strictly increase", k + 1),
                ));
            }
        }
        out.push((x, v));
    }
    if out.is_empty() {
        return Err(Error::malformed(path, "no data rows"));
    }
    Ok(out)
}

pub(crate) fn parse_finite(path: &Path, field: &str, row: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::malformed(
            path,
            format!("row {}: expected a finite number, got {field:?}", row + 1),
        )),
    }
}

/// Writes rows of already formatted fields.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().from_writer(file);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes a plain text file.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        std::fs::write(&a, "x,value\n0,1\n1,+inf\n").unwrap();
        std::fs::write(&b, "0,1\n1,+inf\n").unwrap();
        assert_eq!(read_xy_table(&a).unwrap(), read_xy_table(&b).unwrap());
    }

    #[test]
    fn rejects_unsorted_and_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1,0\n0,1\n").unwrap();
        assert!(matches!(read_xy_table(&p), Err(Error::Malformed { .. })));
        std::fs::write(&p, "0,1,2\n").unwrap();
        assert!(matches!(read_xy_table(&p), Err(Error::Malformed { .. })));
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789e10, 2f64.sqrt()] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }
}
