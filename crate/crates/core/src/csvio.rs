//! CSV plumbing shared by every table the crate emits.
//!
//! Files may start with `#`-prefixed comment lines (the command-line front
//! end writes the config hash there). Floats are written with 17
//! significant digits so that a round trip is lossless.

use std::io::{Read, Write};

use crate::error::{Result, SleError};
use crate::numerics::fmt_f64;

fn csv_err(e: csv::Error) -> SleError {
    SleError::InvalidInput(format!("csv: {e}"))
}

/// Writes a numeric table.
pub fn write_table<W: Write>(
    out: W,
    comment: Option<&str>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut out = out;
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric table, returning the header and the rows.
pub fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| SleError::InvalidInput(format!("row {}: bad number {s:?}", i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Position of `name` in a header, or a validation error.
pub fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| SleError::InvalidInput(format!("missing column {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comment() {
        let mut buf = Vec::new();
        write_table(&mut buf, Some("config_hash=abc"), &["t", "x"], vec![vec![0.1, 1.0 / 3.0]]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# config_hash=abc\nt,x\n"));
        let (h, rows) = read_table(buf.as_slice()).unwrap();
        assert_eq!(h, vec!["t", "x"]);
        assert_eq!(rows, vec![vec![0.1, 1.0 / 3.0]]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_table("t,x\n1,abc\n".as_bytes()).is_err());
    }
}
