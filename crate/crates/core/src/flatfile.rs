//! Pipe-delimited flat-file records: `a|b|c\n`, no trailing delimiter.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::schema::Table;

pub const DELIMITER: char = '|';

#[derive(Debug, Error)]
pub enum FlatFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    FieldCount { path: PathBuf, line: usize, expected: usize, found: usize },
}

/// Appends one record (fields joined by `|`, then `\n`) to `out`.
pub fn push_record<S: AsRef<str>>(out: &mut String, fields: &[S]) {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(DELIMITER);
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
}

pub fn format_record<S: AsRef<str>>(fields: &[S]) -> String {
    let mut s = String::new();
    push_record(&mut s, fields);
    s
}

/// Splits one line (without its terminator) into fields.
pub fn split_record(line: &str) -> Vec<&str> {
    line.split(DELIMITER).collect()
}

/// Number of fields in a record line, i.e. delimiters + 1.
pub fn field_count(line: &str) -> usize {
    line.bytes().filter(|&b| b == DELIMITER as u8).count() + 1
}

/// Streams `path` line by line, checking each record carries exactly the
/// table's column count. Calls `f` with the 1-based line number and the line.
pub fn for_each_record(
    path: &Path,
    table: Table,
    mut f: impl FnMut(usize, &str) -> Result<(), FlatFileError>,
) -> Result<u64, FlatFileError> {
    let io = |source| FlatFileError::Io { path: path.to_path_buf(), source };
    let expected = table.columns().len();
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut n = 0u64;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let found = field_count(&line);
        if found != expected {
            return Err(FlatFileError::FieldCount { path: path.to_path_buf(), line: i + 1, expected, found });
        }
        f(i + 1, &line)?;
        n += 1;
    }
    Ok(n)
}

pub fn read_records(path: &Path, table: Table) -> Result<Vec<Vec<String>>, FlatFileError> {
    let mut rows = Vec::new();
    for_each_record(path, table, |_, line| {
        rows.push(split_record(line).into_iter().map(str::to_string).collect());
        Ok(())
    })?;
    Ok(rows)
}

/// Table data file name: `<table>.tbl`, or `<table>.tbl.<part>` when split.
pub fn table_file_name(table: Table, part_index: u32, part_count: u32) -> String {
    if part_count > 1 {
        format!("{}.tbl.{}", table.name(), part_index)
    } else {
        format!("{}.tbl", table.name())
    }
}

/// Finds the data files for `table` in `dir`: either `<table>.tbl` or the
/// numbered parts, in part order.
pub fn find_table_files(dir: &Path, table: Table) -> Vec<PathBuf> {
    let single = dir.join(format!("{}.tbl", table.name()));
    if single.is_file() {
        return vec![single];
    }
    let prefix = format!("{}.tbl.", table.name());
    let mut parts: Vec<(u32, PathBuf)> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let idx: u32 = name.strip_prefix(&prefix)?.parse().ok()?;
            Some((idx, e.path()))
        })
        .collect();
    parts.sort();
    parts.into_iter().map(|(_, p)| p).collect()
}

/// Exact fixed-point amount with two fractional digits, stored in hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal2(pub i64);

impl Decimal2 {
    pub fn from_units(units: i64) -> Self {
        Decimal2(units * 100)
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }
}

impl fmt::Display for Decimal2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl std::str::FromStr for Decimal2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("not a 2-digit decimal: `{s}`");
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() || frac.len() > 2 || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: i64 = int.parse().map_err(|_| bad())?;
        let frac: i64 = if frac.is_empty() { 0 } else { format!("{frac:0<2}").parse().map_err(|_| bad())? };
        let v = int * 100 + frac;
        Ok(Decimal2(if neg { -v } else { v }))
    }
}
