//! Row output: CSV with a header row, or a JSON array of row objects with
//! the same field names. `None` fields are empty in CSV and `null` in JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::OutputFormat;
use crate::error::{Error, Result};

/// Incremental writer for row streams too large to hold in memory.
#[allow(clippy::large_enum_variant)]
pub enum RowSink<W: Write> {
    Csv(csv::Writer<W>),
    Json { w: W, rows: usize },
}

impl<W: Write> RowSink<W> {
    pub fn new(format: OutputFormat, w: W) -> Self {
        match format {
            OutputFormat::Csv => Self::Csv(csv::Writer::from_writer(w)),
            OutputFormat::Json => Self::Json { w, rows: 0 },
        }
    }

    pub fn push<T: Serialize>(&mut self, row: &T) -> Result<()> {
        match self {
            Self::Csv(out) => out.serialize(row).map_err(csv_error),
            Self::Json { w, rows } => {
                w.write_all(if *rows == 0 { b"[\n" } else { b",\n" })?;
                serde_json::to_writer_pretty(&mut *w, row).map_err(|e| Error::Io(e.into()))?;
                *rows += 1;
                Ok(())
            }
        }
    }

    pub fn finish(self) -> Result<()> {
        match self {
            Self::Csv(mut out) => out.flush()?,
            Self::Json { mut w, rows } => {
                w.write_all(if rows == 0 { b"[]\n" } else { b"\n]\n" })?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// A sink on `path`, or on stdout when `path` is `None`.
pub fn sink(format: OutputFormat, path: Option<&Path>) -> Result<RowSink<Box<dyn Write>>> {
    let w: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    Ok(RowSink::new(format, w))
}

/// Serializes `rows` into `w`.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, w: W) -> Result<()> {
    let mut s = RowSink::new(format, w);
    for r in rows {
        s.push(r)?;
    }
    s.finish()
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`.
pub fn emit<T: Serialize>(rows: &[T], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let mut s = sink(format, path)?;
    for r in rows {
        s.push(r)?;
    }
    s.finish()
}

/// Pretty JSON for a single document (summaries, suite reports).
pub fn emit_json<T: Serialize + ?Sized>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(io::Error::other(format!("{other:?}"))),
    }
}
