use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

const SIGNIFICANT: i32 = 12;

/// Fixed-point rendering with 12 significant digits. Non-finite values
/// become `nan`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    let decimals = (SIGNIFICANT - magnitude).clamp(0, 40) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can produce "-0.000…" for tiny negatives at low precision.
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0".into()
    } else {
        s
    }
}

/// A CSV table with a fixed column order. Missing cells are left empty.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.map(num).unwrap_or_default()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Routes the table and the summary of a command.
///
/// The table goes to `--out` when given, otherwise to stdout unless
/// `--json` is set. The summary goes to stdout as JSON with `--json`, and
/// to stderr as text otherwise.
pub struct Sink {
    pub json: bool,
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn table(&self, table: &Table) -> Result<(), CliError> {
        let text = table.to_csv();
        match &self.out {
            Some(path) => write_file(path, &text),
            None if !self.json => print_stdout(&text),
            None => Ok(()),
        }
    }

    pub fn summary<T: Serialize>(&self, human: &str, value: &T) -> Result<(), CliError> {
        if self.json {
            print_stdout(&(to_json(value)? + "\n"))
        } else {
            eprint!("{human}");
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("serializing output: {e}")))
}

pub fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input(format!("writing {}: {e}", path.display())))
}

pub fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::internal(format!("writing stdout: {e}")))
}
