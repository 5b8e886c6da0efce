//! CSV ingestion and emission.
//!
//! One point per row, numeric columns. A first row that does not parse as
//! numbers is taken as a header. Parsing uses `str::parse::<f64>`, which does
//! not depend on the locale.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn read_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let file = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    parse_points(file).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_points<R: Read>(reader: R) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("parse error: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(|f| f.parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(CliError::Validation(format!(
                    "parse error on row {}: {e}",
                    line + 1
                )))
            }
        };
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!(
                "non-finite value {v} on row {}",
                line + 1
            )));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Validation(format!(
                    "row {} has {} columns, expected {}",
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Validation("parse error: no data rows".into()));
    }
    Ok(rows)
}

pub fn write_points<W: Write>(writer: W, rows: &[Vec<f64>]) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in rows {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()
}

/// Writes to `path`, or to stdout when `path` is `None` or `-`.
pub fn with_output<F>(path: Option<&Path>, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) if p != Path::new("-") => {
            let mut file = io::BufWriter::new(File::create(p).map_err(|e| {
                CliError::Validation(format!("cannot create {}: {e}", p.display()))
            })?);
            f(&mut file)?;
            file.flush()?;
        }
        _ => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    with_output(path, |w| writeln!(w, "{text}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let rows = parse_points("x,y\n1,2\n3.5,-4e-1\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![3.5, -0.4]]);
        let rows = parse_points(" 1 , 2 \n3,4\n".as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_points("".as_bytes()).is_err());
        assert!(parse_points("a,b\n".as_bytes()).is_err());
        assert!(parse_points("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_points("1,2\nx,4\n".as_bytes()).is_err());
        assert!(parse_points("1,NaN\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let rows = vec![vec![0.1, 1e-300, -7.0], vec![2.0 / 3.0, 0.0, 5e10]];
        let mut buf = Vec::new();
        write_points(&mut buf, &rows).unwrap();
        assert_eq!(parse_points(buf.as_slice()).unwrap(), rows);
    }
}
