//! Run archives (JSON lines) and per-query result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::Local;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{connect, BackendKind};
use crate::driver::{
    ensure_data, load_test, power_test, throughput_test, Collector, DriverError, Item, LoadReport, Phase, RunConfig,
    SessionSummary, Status, ThroughputReport, TimingRecord, LOG_FILE,
};
use crate::metrics::{compute, MetricsError, MetricsInput, MetricsReport, QUERY_TIMINGS};
use crate::par::Parallelism;
use crate::querygen::RefreshFunction;
use crate::schema::ValidationReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("archive has no power or throughput records")]
    EmptyArchive,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("archive has no header line")]
    MissingHeader,
    #[error("power test has no usable timing for {0}")]
    MissingTiming(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Driver(#[from] DriverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub sf: f64,
    pub backend: BackendKind,
    pub seed: u64,
    pub streams: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub schema_seconds: f64,
    pub data_seconds: f64,
    pub index_seconds: f64,
    pub analyze_seconds: f64,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSummary {
    pub streams: u32,
    pub ts: f64,
    pub sessions: Vec<SessionSummary>,
}

/// One line of the archive file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ArchiveLine {
    Header { run_id: String, config: RunConfig, environment: Environment },
    Record(TimingRecord),
    Load(LoadSummary),
    Throughput(ThroughputSummary),
    Metrics(MetricsReport),
    Status { partial: bool, errors: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArchive {
    pub run_id: String,
    pub config: RunConfig,
    pub environment: Environment,
    pub records: Vec<TimingRecord>,
    pub load: Option<LoadSummary>,
    pub throughput: Option<ThroughputSummary>,
    pub metrics: Option<MetricsReport>,
    /// A phase aborted.
    pub partial: bool,
    /// Phase failures, failed statements and failed checks.
    pub errors: Vec<String>,
}

impl RunArchive {
    pub fn new(run_id: impl Into<String>, config: RunConfig) -> Self {
        let environment = Environment {
            sf: config.sf.value(),
            backend: config.backend.kind,
            seed: config.seed,
            streams: config.stream_count(),
        };
        RunArchive {
            run_id: run_id.into(),
            config,
            environment,
            records: Vec::new(),
            load: None,
            throughput: None,
            metrics: None,
            partial: false,
            errors: Vec::new(),
        }
    }

    /// True when every phase completed and every check passed.
    pub fn succeeded(&self) -> bool {
        !self.partial && self.errors.is_empty()
    }

    pub fn phase_records(&self, phase: Phase) -> impl Iterator<Item = &TimingRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    pub fn header(&self) -> ArchiveLine {
        ArchiveLine::Header {
            run_id: self.run_id.clone(),
            config: self.config.clone(),
            environment: self.environment.clone(),
        }
    }

    /// Lines after the records.
    fn trailer(&self) -> Vec<ArchiveLine> {
        let mut out = Vec::new();
        if let Some(l) = &self.load {
            out.push(ArchiveLine::Load(l.clone()));
        }
        if let Some(t) = &self.throughput {
            out.push(ArchiveLine::Throughput(t.clone()));
        }
        if let Some(m) = &self.metrics {
            out.push(ArchiveLine::Metrics(m.clone()));
        }
        out.push(ArchiveLine::Status { partial: self.partial, errors: self.errors.clone() });
        out
    }

    pub fn lines(&self) -> Vec<ArchiveLine> {
        let mut out = vec![self.header()];
        out.extend(self.records.iter().cloned().map(ArchiveLine::Record));
        out.extend(self.trailer());
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.lines().iter().map(|l| serde_json::to_string(l).expect("archive lines serialize") + "\n").collect()
    }

    pub fn from_lines(lines: impl IntoIterator<Item = ArchiveLine>) -> Result<Self, ReportError> {
        let mut archive: Option<RunArchive> = None;
        for line in lines {
            if let ArchiveLine::Header { run_id, config, environment } = line {
                let mut a = RunArchive::new(run_id, config);
                a.environment = environment;
                archive = Some(a);
                continue;
            }
            let a = archive.as_mut().ok_or(ReportError::MissingHeader)?;
            match line {
                ArchiveLine::Header { .. } => unreachable!(),
                ArchiveLine::Record(r) => a.records.push(r),
                ArchiveLine::Load(l) => a.load = Some(l),
                ArchiveLine::Throughput(t) => a.throughput = Some(t),
                ArchiveLine::Metrics(m) => a.metrics = Some(m),
                ArchiveLine::Status { partial, errors } => {
                    a.partial = partial;
                    a.errors = errors;
                }
            }
        }
        archive.ok_or(ReportError::MissingHeader)
    }

    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let io = |source| ReportError::Io { path: path.to_path_buf(), source };
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str(&line)
                .map_err(|e| ReportError::Parse { path: path.to_path_buf(), line: i + 1, msg: e.to_string() })?;
            lines.push(parsed);
        }
        Self::from_lines(lines)
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        fs::write(path, self.to_jsonl()).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
    }
}

/// Metric inputs from the power records (ordered by query number) and the
/// throughput summary. Timeouts enter at their bound and flag the result
/// as a lower bound.
pub fn metrics_input(
    power: &[TimingRecord],
    streams: u32,
    ts: f64,
    sf: f64,
    total_price: Option<f64>,
) -> Result<MetricsInput, ReportError> {
    let find = |item: Item| {
        power
            .iter()
            .find(|r| r.item == item && r.status != Status::Error)
            .ok_or_else(|| ReportError::MissingTiming(item.to_string()))
    };
    let qi_records = (1..=QUERY_TIMINGS as u8).map(|q| find(Item::Query(q))).collect::<Result<Vec<_>, _>>()?;
    let ri_records = [RefreshFunction::Rf1, RefreshFunction::Rf2]
        .into_iter()
        .map(|f| find(Item::Refresh(f)))
        .collect::<Result<Vec<_>, _>>()?;
    let censored = qi_records.iter().chain(&ri_records).any(|r| r.status == Status::Timeout);
    Ok(MetricsInput {
        qi: qi_records.iter().map(|r| r.elapsed).collect(),
        ri: ri_records.iter().map(|r| r.elapsed).collect(),
        streams,
        ts,
        sf,
        total_price,
        censored,
    })
}

/// Phases to run; metrics need both power and throughput.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reuse an already loaded database.
    pub skip_load: bool,
    pub skip_power: bool,
    pub skip_throughput: bool,
    pub total_price: Option<f64>,
    pub par: Parallelism,
}

impl RunOptions {
    pub fn power_only() -> Self {
        RunOptions { skip_throughput: true, ..Default::default() }
    }
}

fn append_line(file: &Mutex<File>, line: &ArchiveLine) {
    let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
    let _ = writeln!(f, "{}", serde_json::to_string(line).expect("archive lines serialize"));
}

/// Archive file of run `run_id` inside `out_dir`.
pub fn archive_path(out_dir: &Path, run_id: &str) -> PathBuf {
    out_dir.join(format!("run-{run_id}.jsonl"))
}

/// Load, power, throughput and metrics in order. Records are appended to
/// `<out>/run-<id>.jsonl` as they are collected; a failed phase marks the
/// archive partial and skips what depends on it.
pub fn run_all(cfg: &RunConfig, opts: &RunOptions) -> Result<(RunArchive, PathBuf), ReportError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.clone(), source })?;
    let run_id = Local::now().format("%Y%m%dT%H%M%S%.3f").to_string();
    let mut archive = RunArchive::new(run_id.clone(), cfg.clone());
    let path = archive_path(out, &run_id);
    let file = Arc::new(Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| ReportError::Io { path: path.clone(), source })?,
    ));
    append_line(&file, &archive.header());
    let sink_file = Arc::clone(&file);
    let collector = Collector::with_log(&out.join(LOG_FILE))?
        .with_sink(move |r| append_line(&sink_file, &ArchiveLine::Record(r.clone())));

    let result = run_phases(cfg, opts, &collector, &mut archive);
    archive.records = collector.records();
    if let Err(e) = result {
        archive.partial = true;
        archive.errors.push(e.to_string());
    }
    for r in archive.records.iter().filter(|r| r.status == Status::Error) {
        archive.errors.push(format!(
            "{:?} stream {} {}: {}",
            r.phase,
            r.stream_id,
            r.item,
            r.detail.as_deref().unwrap_or("error")
        ));
    }
    for line in archive.trailer() {
        append_line(&file, &line);
    }
    Ok((archive, path))
}

fn run_phases(cfg: &RunConfig, opts: &RunOptions, collector: &Collector, archive: &mut RunArchive) -> Result<(), ReportError> {
    let backend = connect(&cfg.backend).map_err(DriverError::from)?;
    if !opts.skip_load {
        ensure_data(cfg, opts.par)?;
        let LoadReport { schema_seconds, data_seconds, index_seconds, analyze_seconds, validation, .. } =
            load_test(cfg, backend.as_ref(), collector)?;
        if !validation.pass {
            archive.errors.push(format!("load validation failed:\n{validation}"));
        }
        archive.load = Some(LoadSummary { schema_seconds, data_seconds, index_seconds, analyze_seconds, validation });
    }
    let power = if opts.skip_power { None } else { Some(power_test(cfg, backend.as_ref(), collector)?) };
    if opts.skip_throughput {
        return Ok(());
    }
    let ThroughputReport { streams, ts, sessions, .. } = throughput_test(cfg, backend.as_ref(), collector)?;
    archive.throughput = Some(ThroughputSummary { streams, ts, sessions });
    if let Some(power) = power {
        let input = metrics_input(&power, streams, ts, cfg.sf.value(), opts.total_price)?;
        archive.metrics = Some(compute(&input)?);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Csv,
    Machine,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "human" | "text" => Ok(Format::Human),
            "csv" => Ok(Format::Csv),
            "machine" | "json" => Ok(Format::Machine),
            other => Err(format!("unknown format `{other}` (expected human, csv or machine)")),
        }
    }
}

pub const MEAN_COLUMN: &str = "Média";
pub const MAX_COLUMN: &str = "Maior";
pub const MIN_COLUMN: &str = "Menor";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub item: Item,
    pub power: Option<f64>,
    /// One cell per throughput stream.
    pub streams: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub max: Option<f64>,
    pub min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub metrics: Option<MetricsReport>,
    /// Items whose timing was censored at the timeout.
    pub censored: Vec<String>,
}

/// Rows q1..q22 then RF1, RF2. Throughput refresh pairs map onto the stream
/// columns in execution order.
pub fn report_table(archive: &RunArchive) -> Result<ReportTable, ReportError> {
    let power: Vec<&TimingRecord> = archive.phase_records(Phase::Power).collect();
    let through: Vec<&TimingRecord> = archive.phase_records(Phase::Throughput).collect();
    if power.is_empty() && through.is_empty() {
        return Err(ReportError::EmptyArchive);
    }
    let s = archive.throughput.as_ref().map_or_else(
        || through.iter().filter_map(|r| matches!(r.item, Item::Query(_)).then_some(r.stream_id)).max().unwrap_or(0),
        |t| t.streams,
    ) as usize;
    let mut columns = vec!["Query".to_string(), "Power".to_string()];
    columns.extend((1..=s).map(|i| i.to_string()));
    columns.extend([MEAN_COLUMN, MAX_COLUMN, MIN_COLUMN].map(String::from));

    let mut stream_cells: BTreeMap<Item, Vec<Option<f64>>> = BTreeMap::new();
    let mut refresh_seen: BTreeMap<Item, usize> = BTreeMap::new();
    for r in &through {
        let column = match r.item {
            Item::Query(_) => r.stream_id as usize,
            Item::Refresh(_) => {
                let n = refresh_seen.entry(r.item).or_default();
                *n += 1;
                *n
            }
            Item::Table(_) => continue,
        };
        if (1..=s).contains(&column) && r.status != Status::Error {
            stream_cells.entry(r.item).or_insert_with(|| vec![None; s])[column - 1] = Some(r.elapsed);
        }
    }
    let items = (1..=QUERY_TIMINGS as u8)
        .map(Item::Query)
        .chain([Item::Refresh(RefreshFunction::Rf1), Item::Refresh(RefreshFunction::Rf2)]);
    let mut censored = Vec::new();
    let rows = items
        .map(|item| {
            let power_rec = power.iter().find(|r| r.item == item && r.status != Status::Error);
            if power_rec.is_some_and(|r| r.status == Status::Timeout) {
                censored.push(format!("{item} (power)"));
            }
            for r in through.iter().filter(|r| r.item == item && r.status == Status::Timeout) {
                censored.push(format!("{item} (stream {})", r.stream_id));
            }
            let cells = stream_cells.remove(&item).unwrap_or_else(|| vec![None; s]);
            let present: Vec<f64> = cells.iter().flatten().copied().collect();
            let (mean, max, min) = if present.is_empty() {
                (None, None, None)
            } else {
                (
                    Some(present.iter().sum::<f64>() / present.len() as f64),
                    present.iter().copied().reduce(f64::max),
                    present.iter().copied().reduce(f64::min),
                )
            };
            ReportRow { item, power: power_rec.map(|r| r.elapsed), streams: cells, mean, max, min }
        })
        .collect();
    Ok(ReportTable { columns, rows, metrics: archive.metrics.clone(), censored })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl ReportRow {
    fn cells(&self) -> Vec<String> {
        let mut out = vec![self.item.to_string(), cell(self.power)];
        out.extend(self.streams.iter().map(|c| cell(*c)));
        out.extend([cell(self.mean), cell(self.max), cell(self.min)]);
        out
    }
}

fn footer(metrics: &MetricsReport) -> Vec<(String, String)> {
    let mut out = vec![
        ("Power@Size".to_string(), format!("{:.6}", metrics.power_at_size)),
        ("Throughput@Size".to_string(), format!("{:.6}", metrics.throughput_at_size)),
        ("Composite".to_string(), format!("{:.6}", metrics.qphh_at_size)),
    ];
    if let Some(p) = metrics.price_per_qphh {
        out.push(("Price/QphH".to_string(), format!("{p:.6}")));
    }
    out
}

pub fn render_report(archive: &RunArchive, format: Format) -> Result<String, ReportError> {
    let table = report_table(archive)?;
    Ok(match format {
        Format::Human => render_human(&table, archive),
        Format::Csv => render_csv(&table),
        Format::Machine => serde_json::to_string_pretty(&table).expect("report serializes") + "\n",
    })
}

fn render_human(table: &ReportTable, archive: &RunArchive) -> String {
    let rows: Vec<Vec<String>> = table.rows.iter().map(ReportRow::cells).collect();
    let widths: Vec<usize> = (0..table.columns.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain([table.columns[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                let pad = w - c.chars().count();
                if i == 0 {
                    format!("{c}{}", " ".repeat(pad))
                } else {
                    format!("{}{c}", " ".repeat(pad))
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = String::new();
    let env = &archive.environment;
    let _ = writeln!(out, "run {}  SF {}  backend {:?}  seed {}", archive.run_id, env.sf, env.backend, env.seed);
    let _ = writeln!(out, "{}", line(&table.columns));
    for r in &rows {
        let _ = writeln!(out, "{}", line(r));
    }
    if let Some(m) = &table.metrics {
        out.push('\n');
        for (k, v) in footer(m) {
            let _ = writeln!(out, "{k}: {v}");
        }
        if m.lower_bound {
            let _ = writeln!(out, "(lower bound: some timings were censored at the timeout)");
        }
    }
    if !table.censored.is_empty() {
        let _ = writeln!(out, "censored at timeout: {}", table.censored.join(", "));
    }
    if !archive.succeeded() {
        let _ = writeln!(out, "run incomplete:");
        for e in &archive.errors {
            let _ = writeln!(out, "  {e}");
        }
    }
    out
}

fn render_csv(table: &ReportTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", table.columns.join(","));
    for r in &table.rows {
        let _ = writeln!(out, "{}", r.cells().join(","));
    }
    if let Some(m) = &table.metrics {
        for (k, v) in footer(m) {
            let _ = writeln!(out, "{k},{v}");
        }
    }
    out
}
