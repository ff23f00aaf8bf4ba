//! Load, power and throughput phases: sessions, timeouts, plan capture and
//! the run log.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use chrono::Local;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendConfig, BackendError, ExecStatus, Session};
use crate::datagen::{generate_partitioned, GenError, RefreshSet};
use crate::flatfile::{find_table_files, table_file_name};
use crate::par::Parallelism;
use crate::querygen::{stream_instances, stream_order, QueryGenError, QueryInstance, RefreshFunction};
use crate::refresh::{rf1, rf2, RefreshOutcome, DEFAULT_BATCH};
use crate::schema::{validate_load, ScaleFactor, Table, ValidationReport};

pub const DEFAULT_TIMEOUT_SECS: f64 = 25_000.0;
pub const LOG_FILE: &str = "log.txt";
pub const START_MARKER: &str = "---Inicio teste---";
pub const END_MARKER: &str = "----Fim teste----";

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    QueryGen(#[from] QueryGenError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("missing data file {0}")]
    MissingData(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("loading {table} failed: {source}")]
    Load { table: Table, source: BackendError },
}

/// Scale factor → query stream count for the throughput test.
pub const STREAM_COUNT_RULE: [(f64, u32); 8] =
    [(1.0, 2), (10.0, 3), (30.0, 4), (100.0, 5), (300.0, 6), (1000.0, 7), (3000.0, 8), (10000.0, 9)];

/// Streams for `sf`: the entry of the largest listed SF not above it, and 2
/// below SF 1.
pub fn stream_count(sf: ScaleFactor) -> u32 {
    STREAM_COUNT_RULE.iter().rev().find(|(s, _)| *s <= sf.value()).map_or(2, |&(_, n)| n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub sf: ScaleFactor,
    pub backend: BackendConfig,
    pub seed: u64,
    /// Per-statement timeout, seconds.
    pub timeout: f64,
    pub streams: Option<u32>,
    pub out_dir: PathBuf,
    /// Flat files; `out_dir/data` when unset.
    pub data_dir: Option<PathBuf>,
    pub batch: usize,
    pub capture_plans: bool,
}

impl RunConfig {
    pub fn new(sf: ScaleFactor, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            sf,
            backend: BackendConfig::default(),
            seed: crate::querygen::DEFAULT_SEED,
            timeout: DEFAULT_TIMEOUT_SECS,
            streams: None,
            out_dir: out_dir.into(),
            data_dir: None,
            batch: DEFAULT_BATCH,
            capture_plans: false,
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(DriverError::Config(format!("timeout must be positive, got {}", self.timeout)));
        }
        if self.streams == Some(0) {
            return Err(DriverError::Config("stream count must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(DriverError::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stream_count(&self) -> u32 {
        self.streams.unwrap_or_else(|| stream_count(self.sf))
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("data"))
    }

    pub fn timeout_duration(&self) -> Duration {
        Duration::from_secs_f64(self.timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Load,
    Power,
    Throughput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Error,
}

/// What a timing record measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Item {
    Table(Table),
    Query(u8),
    Refresh(RefreshFunction),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Table(t) => f.write_str(t.upper_name()),
            Item::Query(q) => write!(f, "q{q}"),
            Item::Refresh(r) => f.write_str(r.label()),
        }
    }
}

impl FromStr for Item {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "RF1" => return Ok(Item::Refresh(RefreshFunction::Rf1)),
            "RF2" => return Ok(Item::Refresh(RefreshFunction::Rf2)),
            _ => {}
        }
        if let Some(n) = s.strip_prefix('q').and_then(|n| n.parse().ok()) {
            return Ok(Item::Query(n));
        }
        s.parse().map(Item::Table).map_err(|_| format!("unknown item `{s}`"))
    }
}

impl TryFrom<String> for Item {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Item> for String {
    fn from(i: Item) -> String {
        i.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub phase: Phase,
    pub stream_id: u32,
    pub item: Item,
    /// Wall-clock timestamps, RFC 3339.
    pub start: String,
    pub end: String,
    /// Seconds; the configured timeout when censored.
    pub elapsed: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
}

fn now() -> String {
    Local::now().format("%Y-%m-%dT%H:%M:%S%.3f%:z").to_string()
}

fn clock() -> String {
    Local::now().format("%H:%M:%S").to_string()
}

type Sink = Box<dyn Fn(&TimingRecord) + Send + Sync>;

/// Serialized collector for timing records and the human-readable log.
pub struct Collector {
    records: Mutex<Vec<TimingRecord>>,
    log: Option<Mutex<File>>,
    sink: Option<Sink>,
}

impl Collector {
    pub fn in_memory() -> Self {
        Collector { records: Mutex::default(), log: None, sink: None }
    }

    /// Appends log lines to `log_path` (created if needed).
    pub fn with_log(log_path: &Path) -> Result<Self, DriverError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|source| DriverError::Io { path: log_path.to_path_buf(), source })?;
        Ok(Collector { log: Some(Mutex::new(file)), ..Self::in_memory() })
    }

    /// Also hands every record to `sink` as it is collected.
    pub fn with_sink(mut self, sink: impl Fn(&TimingRecord) + Send + Sync + 'static) -> Self {
        self.sink = Some(Box::new(sink));
        self
    }

    /// Writes `lines` contiguously.
    pub fn log(&self, lines: &[String]) {
        if let Some(file) = &self.log {
            let mut f = file.lock().unwrap_or_else(|e| e.into_inner());
            for l in lines {
                let _ = writeln!(f, "{l}");
            }
        }
    }

    pub fn push(&self, record: TimingRecord) {
        let mut records = self.records.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(sink) = &self.sink {
            sink(&record);
        }
        records.push(record);
    }

    pub fn records(&self) -> Vec<TimingRecord> {
        self.records.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

/// Generates every table into the data directory unless all are present.
pub fn ensure_data(cfg: &RunConfig, par: Parallelism) -> Result<bool, DriverError> {
    let dir = cfg.data_dir();
    if Table::ALL.iter().all(|&t| !find_table_files(&dir, t).is_empty()) {
        return Ok(false);
    }
    generate_partitioned(cfg.sf, &Table::ALL, 1, cfg.seed, &dir, par)?;
    Ok(true)
}

/// Refresh pair `pair` from the data directory, generated if absent.
pub fn refresh_set(cfg: &RunConfig, pair: u32) -> Result<RefreshSet, DriverError> {
    let dir = cfg.data_dir();
    if RefreshSet::paths(&dir, pair).iter().all(|p| p.is_file()) {
        return Ok(RefreshSet::read(&dir, pair)?);
    }
    Ok(crate::datagen::generate_refresh_set(cfg.sf, pair, cfg.seed, &dir)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub records: Vec<TimingRecord>,
    /// Seconds spent in each step.
    pub schema_seconds: f64,
    pub data_seconds: f64,
    pub index_seconds: f64,
    pub analyze_seconds: f64,
    pub validation: ValidationReport,
}

fn timed<T>(f: impl FnOnce() -> Result<T, BackendError>) -> Result<(T, f64), BackendError> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

/// Creates the schema, bulk-loads the tables in load order, builds keys and
/// indexes, collects statistics and validates the row counts.
pub fn load_test(cfg: &RunConfig, backend: &dyn Backend, collector: &Collector) -> Result<LoadReport, DriverError> {
    cfg.validate()?;
    let dir = cfg.data_dir();
    for table in Table::LOAD_ORDER {
        if find_table_files(&dir, table).is_empty() {
            return Err(DriverError::MissingData(dir.join(table_file_name(table, 1, 1))));
        }
    }
    let mut session = backend.open_session()?;
    let ((), schema_seconds) = timed(|| session.create_schema())?;
    let mut records = Vec::new();
    let data_start = Instant::now();
    for table in Table::LOAD_ORDER {
        let start = now();
        let t0 = Instant::now();
        let result = find_table_files(&dir, table)
            .iter()
            .try_fold(0u64, |n, f| session.bulk_load(table, f).map(|k| n + k));
        let elapsed = t0.elapsed().as_secs_f64();
        collector.log(&[format!("{} {}", table.upper_name(), clock())]);
        let mut record = TimingRecord {
            phase: Phase::Load,
            stream_id: 0,
            item: Item::Table(table),
            start,
            end: now(),
            elapsed,
            status: Status::Ok,
            rows: None,
            detail: None,
            plan: None,
        };
        match result {
            Ok(rows) => {
                record.rows = Some(rows);
                collector.push(record.clone());
                records.push(record);
            }
            Err(source) => {
                record.status = Status::Error;
                record.detail = Some(source.to_string());
                collector.push(record);
                session.close();
                return Err(DriverError::Load { table, source });
            }
        }
    }
    let data_seconds = data_start.elapsed().as_secs_f64();
    let ((), index_seconds) = timed(|| session.build_constraints())?;
    let ((), analyze_seconds) = timed(|| session.analyze())?;
    let mut counts = std::collections::BTreeMap::new();
    for table in Table::ALL {
        counts.insert(table, session.count_rows(table)?);
    }
    session.close();
    let validation = validate_load(&counts, cfg.sf);
    collector.log(&[validation.to_string()]);
    Ok(LoadReport { records, schema_seconds, data_seconds, index_seconds, analyze_seconds, validation })
}

/// Plan text of `sql` through the backend's plan prefix.
pub fn capture_plan(session: &mut dyn Session, sql: &str) -> Result<String, DriverError> {
    if sql.trim().is_empty() {
        return Err(BackendError::EmptySql.into());
    }
    Ok(session.explain(sql)?)
}

fn instance(instances: &[QueryInstance], id: u8, stream: u32) -> Result<&QueryInstance, DriverError> {
    instances
        .iter()
        .find(|i| i.template_id == id)
        .ok_or(DriverError::QueryGen(QueryGenError::MissingInstance { stream, id }))
}

fn run_query(
    cfg: &RunConfig,
    session: &mut dyn Session,
    collector: &Collector,
    phase: Phase,
    stream_id: u32,
    inst: &QueryInstance,
) -> TimingRecord {
    let id = inst.template_id;
    let plan = if cfg.capture_plans {
        Some(capture_plan(session, &inst.sql).unwrap_or_else(|e| format!("plan unavailable: {e}")))
    } else {
        None
    };
    collector.log(&[format!("---q{id} ini---"), clock()]);
    let start = now();
    let result = session.execute(&inst.sql, cfg.timeout_duration());
    let end = now();
    collector.log(&[format!("---q{id} fim---")]);
    let (status, detail) = match result.status {
        ExecStatus::Ok => (Status::Ok, None),
        ExecStatus::Timeout => (Status::Timeout, None),
        ExecStatus::Error(e) => (Status::Error, Some(e)),
    };
    let record = TimingRecord {
        phase,
        stream_id,
        item: Item::Query(id),
        start,
        end,
        elapsed: result.elapsed.min(cfg.timeout),
        status,
        rows: result.rows,
        detail,
        plan,
    };
    collector.push(record.clone());
    record
}

fn refresh_record(
    collector: &Collector,
    phase: Phase,
    stream_id: u32,
    function: RefreshFunction,
    run: impl FnOnce() -> Result<RefreshOutcome, crate::refresh::RefreshError>,
) -> TimingRecord {
    let start = now();
    let t0 = Instant::now();
    let result = run();
    let mut record = TimingRecord {
        phase,
        stream_id,
        item: Item::Refresh(function),
        start,
        end: now(),
        elapsed: t0.elapsed().as_secs_f64(),
        status: Status::Ok,
        rows: None,
        detail: None,
        plan: None,
    };
    match result {
        Ok(o) => {
            record.elapsed = o.elapsed;
            record.rows = Some(o.orders_affected + o.lineitems_affected);
        }
        Err(e) => {
            record.status = Status::Error;
            record.detail = Some(e.to_string());
        }
    }
    collector.log(&[format!("{} {}", function.label(), clock())]);
    collector.push(record.clone());
    record
}

/// RF1, the 22 queries of stream 0 in reference order, then RF2, all in one
/// session.
pub fn power_test(cfg: &RunConfig, backend: &dyn Backend, collector: &Collector) -> Result<Vec<TimingRecord>, DriverError> {
    cfg.validate()?;
    let set = refresh_set(cfg, 1)?;
    let instances = stream_instances(0, cfg.seed)?;
    let schedule = stream_order(0, cfg.seed);
    let mut session = backend.open_session()?;
    let session = session.as_mut();
    collector.log(&[START_MARKER.to_string(), clock()]);
    let mut records = Vec::with_capacity(24);
    records.push(refresh_record(collector, Phase::Power, 0, RefreshFunction::Rf1, || rf1(session, &set, cfg.batch)));
    for &id in &schedule.order {
        records.push(run_query(cfg, session, collector, Phase::Power, 0, instance(&instances, id, 0)?));
    }
    records.push(refresh_record(collector, Phase::Power, 0, RefreshFunction::Rf2, || rf2(session, &set.delete_keys)));
    collector.log(&[END_MARKER.to_string(), clock()]);
    session.close();
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    /// Query stream number, or `None` for the refresh session.
    pub stream_id: Option<u32>,
    /// Wall-clock seconds from the session's first statement to its last.
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub streams: u32,
    /// Seconds from the first session start to the last session end.
    pub ts: f64,
    pub sessions: Vec<SessionSummary>,
    pub records: Vec<TimingRecord>,
}

/// Stream id that the refresh session's records carry in the throughput test.
pub const REFRESH_SESSION_ID: u32 = 0;

/// S query sessions running their own schedules concurrently, plus one
/// refresh session running S RF1/RF2 pairs serially.
pub fn throughput_test(cfg: &RunConfig, backend: &dyn Backend, collector: &Collector) -> Result<ThroughputReport, DriverError> {
    cfg.validate()?;
    let s = cfg.stream_count();
    let mut streams = Vec::with_capacity(s as usize);
    for id in 1..=s {
        streams.push((id, stream_order(id, cfg.seed), stream_instances(id, cfg.seed)?, backend.open_session()?));
    }
    let sets = (2..=s + 1).map(|pair| refresh_set(cfg, pair)).collect::<Result<Vec<_>, _>>()?;
    let mut refresh_session = backend.open_session()?;
    let records = Arc::new(Mutex::new(Vec::new()));
    collector.log(&[START_MARKER.to_string(), clock()]);
    let start = Instant::now();
    let sessions = thread::scope(|scope| {
        let mut handles = Vec::new();
        for (id, schedule, instances, mut session) in streams {
            let records = Arc::clone(&records);
            handles.push(scope.spawn(move || {
                let t0 = Instant::now();
                for &q in &schedule.order {
                    if let Some(inst) = instances.iter().find(|i| i.template_id == q) {
                        let r = run_query(cfg, session.as_mut(), collector, Phase::Throughput, id, inst);
                        records.lock().unwrap_or_else(|e| e.into_inner()).push(r);
                    }
                }
                session.close();
                SessionSummary { stream_id: Some(id), elapsed: t0.elapsed().as_secs_f64() }
            }));
        }
        let refresh_records = Arc::clone(&records);
        handles.push(scope.spawn(move || {
            let t0 = Instant::now();
            let session = refresh_session.as_mut();
            for set in &sets {
                let id = REFRESH_SESSION_ID;
                let a = refresh_record(collector, Phase::Throughput, id, RefreshFunction::Rf1, || rf1(session, set, cfg.batch));
                let b = refresh_record(collector, Phase::Throughput, id, RefreshFunction::Rf2, || rf2(session, &set.delete_keys));
                refresh_records.lock().unwrap_or_else(|e| e.into_inner()).extend([a, b]);
            }
            session.close();
            SessionSummary { stream_id: None, elapsed: t0.elapsed().as_secs_f64() }
        }));
        handles.into_iter().map(|h| h.join().expect("session thread panicked")).collect::<Vec<_>>()
    });
    let ts = start.elapsed().as_secs_f64();
    collector.log(&[END_MARKER.to_string(), clock()]);
    let records = std::mem::take(&mut *records.lock().unwrap_or_else(|e| e.into_inner()));
    Ok(ThroughputReport { streams: s, ts, sessions, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(v: f64) -> ScaleFactor {
        ScaleFactor::new(v).unwrap()
    }

    #[test]
    fn stream_counts() {
        let cases = [(0.01, 2), (0.5, 2), (1.0, 2), (5.0, 2), (10.0, 3), (30.0, 4), (100.0, 5), (299.0, 5), (300.0, 6)];
        for (v, n) in cases {
            assert_eq!(stream_count(sf(v)), n, "sf={v}");
        }
        assert_eq!(stream_count(sf(1000.0)), 7);
        assert_eq!(stream_count(sf(3000.0)), 8);
        assert_eq!(stream_count(sf(10000.0)), 9);
        assert_eq!(stream_count(sf(1e6)), 9);
    }

    #[test]
    fn item_round_trip() {
        for item in [Item::Query(14), Item::Refresh(RefreshFunction::Rf2), Item::Table(Table::Lineitem)] {
            assert_eq!(item.to_string().parse::<Item>().unwrap(), item);
        }
        assert_eq!(serde_json::to_string(&Item::Query(3)).unwrap(), "\"q3\"");
    }

    #[test]
    fn config_checks() {
        let mut cfg = RunConfig::new(sf(0.01), "/tmp/x");
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.stream_count(), 2);
        cfg.streams = Some(0);
        assert!(cfg.validate().is_err());
        cfg.streams = Some(4);
        cfg.timeout = 0.0;
        assert!(cfg.validate().is_err());
    }
}
