use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn open(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(format!("write failed: {e}"))
}

impl Sink {
    /// Write `value` as pretty JSON, or `rows` as CSV, depending on the format.
    pub fn emit<T: Serialize, R: Serialize>(&self, value: &T, rows: impl IntoIterator<Item = R>) -> Result<(), Failure> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => self.csv(rows),
        }
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let mut w = open(self.out.as_deref())?;
        serde_json::to_writer_pretty(&mut w, value).map_err(io_failure)?;
        writeln!(w).map_err(io_failure)?;
        w.flush().map_err(io_failure)
    }

    pub fn csv<R: Serialize>(&self, rows: impl IntoIterator<Item = R>) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(open(self.out.as_deref())?);
        for row in rows {
            w.serialize(row).map_err(io_failure)?;
        }
        w.flush().map_err(io_failure)
    }

    pub fn text(&self, text: &str) -> Result<(), Failure> {
        let mut w = open(self.out.as_deref())?;
        w.write_all(text.as_bytes()).map_err(io_failure)?;
        w.flush().map_err(io_failure)
    }
}

/// `1;2;3`, for list-valued CSV cells.
pub fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
pub struct ValueRow {
    pub index: usize,
    pub value: f64,
}

pub fn value_rows(values: &[f64]) -> impl Iterator<Item = ValueRow> + '_ {
    values.iter().enumerate().map(|(index, &value)| ValueRow { index, value })
}
