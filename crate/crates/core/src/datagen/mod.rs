//! Deterministic, partitionable flat-file generator for the eight tables and
//! the refresh sets consumed by RF1/RF2.

mod domains;
mod refresh_set;
mod rows;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use domains::*;
pub use refresh_set::{generate_refresh_set, refresh_file_names, refresh_size, RefreshSet};
pub use rows::{retail_price, row_seed, splitmix64, Populations, RowFactory, MAX_LINES_PER_ORDER, SUPPLIERS_PER_PART};

use crate::flatfile::{table_file_name, FlatFileError};
use crate::par::Parallelism;
use crate::schema::{ScaleFactor, Table};

/// Environment variable that overrides the output directory.
pub const DSS_PATH: &str = "DSS_PATH";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("part index {index} out of range 1..={count}")]
    PartIndex { index: u32, count: u32 },
    #[error("scale factor {sf} yields {suppliers} suppliers; at least 4 are needed")]
    ScaleTooSmall { sf: f64, suppliers: u64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    FlatFile(#[from] FlatFileError),
    #[error("refresh set {pair}: {msg}")]
    InvalidRefreshSet { pair: u32, msg: String },
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub sf: ScaleFactor,
    /// `None` generates every table.
    pub table: Option<Table>,
    pub part_index: u32,
    pub part_count: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl GenConfig {
    pub fn new(sf: ScaleFactor, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        GenConfig { sf, table: None, part_index: 1, part_count: 1, seed, output_dir: output_dir.into() }
    }

    pub fn table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn part(mut self, index: u32, count: u32) -> Self {
        self.part_index = index;
        self.part_count = count;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.part_count == 0 || self.part_index == 0 || self.part_index > self.part_count {
            return Err(GenError::PartIndex { index: self.part_index, count: self.part_count });
        }
        Ok(())
    }

    fn tables(&self) -> Vec<Table> {
        self.table.map_or_else(|| Table::ALL.to_vec(), |t| vec![t])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFile {
    pub table: Table,
    pub part_index: u32,
    pub path: PathBuf,
    pub rows: u64,
}

#[derive(Debug, Clone, Default)]
pub struct GenSummary {
    pub files: Vec<GeneratedFile>,
}

impl GenSummary {
    pub fn rows(&self, table: Table) -> u64 {
        self.files.iter().filter(|f| f.table == table).map(|f| f.rows).sum()
    }
}

/// Inclusive 1-based unit range of part `index` out of `count`; `None` when
/// the part is empty.
pub fn partition_range(units: u64, index: u32, count: u32) -> Option<(u64, u64)> {
    let first = units * (index as u64 - 1) / count as u64 + 1;
    let last = units * index as u64 / count as u64;
    (first <= last).then_some((first, last))
}

const FLUSH_BYTES: usize = 1 << 20;

fn write_part(factory: &RowFactory, table: Table, index: u32, count: u32, dir: &Path) -> Result<GeneratedFile, GenError> {
    let path = dir.join(table_file_name(table, index, count));
    let io = |source| GenError::Io { path: path.clone(), source };
    let mut out = BufWriter::new(File::create(&path).map_err(io)?);
    let mut rows = 0;
    if let Some((first, last)) = partition_range(factory.unit_count(table), index, count) {
        let mut buf = String::with_capacity(FLUSH_BYTES + 4096);
        let mut unit = first;
        while unit <= last {
            let end = (unit + 511).min(last);
            rows += factory.write_units(table, unit, end, &mut buf);
            if buf.len() >= FLUSH_BYTES {
                out.write_all(buf.as_bytes()).map_err(io)?;
                buf.clear();
            }
            unit = end + 1;
        }
        out.write_all(buf.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)?;
    Ok(GeneratedFile { table, part_index: index, path, rows })
}

/// Writes the configured part of the configured table(s).
pub fn generate_table(cfg: &GenConfig) -> Result<GenSummary, GenError> {
    generate_table_with(cfg, Parallelism::default())
}

pub fn generate_table_with(cfg: &GenConfig, par: Parallelism) -> Result<GenSummary, GenError> {
    cfg.validate()?;
    let factory = RowFactory::new(cfg.sf, cfg.seed)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| GenError::Io { path: cfg.output_dir.clone(), source })?;
    let results = par.map(cfg.tables(), |t| write_part(&factory, t, cfg.part_index, cfg.part_count, &cfg.output_dir));
    let files = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GenSummary { files })
}

/// Writes every part `1..=part_count` of the given tables. Each `(table, part)`
/// pair is an independent unit of work with its own file.
pub fn generate_partitioned(
    sf: ScaleFactor,
    tables: &[Table],
    part_count: u32,
    seed: u64,
    dir: &Path,
    par: Parallelism,
) -> Result<GenSummary, GenError> {
    if part_count == 0 {
        return Err(GenError::PartIndex { index: 1, count: 0 });
    }
    let factory = RowFactory::new(sf, seed)?;
    std::fs::create_dir_all(dir).map_err(|source| GenError::Io { path: dir.to_path_buf(), source })?;
    let jobs: Vec<(Table, u32)> = tables.iter().flat_map(|&t| (1..=part_count).map(move |i| (t, i))).collect();
    let results = par.map(jobs, |(t, i)| write_part(&factory, t, i, part_count, dir));
    let files = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GenSummary { files })
}

/// Approximate bytes per flat-file record, for sizing partitions.
pub fn approx_record_bytes(table: Table) -> u64 {
    match table {
        Table::Region => 100,
        Table::Nation => 110,
        Table::Supplier => 145,
        Table::Part => 125,
        Table::Partsupp => 145,
        Table::Customer => 165,
        Table::Orders => 110,
        Table::Lineitem => 130,
    }
}

/// Smallest part count keeping every file of `table` under `max_file_bytes`.
pub fn suggest_part_count(table: Table, sf: ScaleFactor, max_file_bytes: u64) -> u32 {
    let rows = crate::schema::expected_cardinality(table, sf).nominal();
    let bytes = rows * approx_record_bytes(table);
    bytes.div_ceil(max_file_bytes.max(1)).max(1) as u32
}
