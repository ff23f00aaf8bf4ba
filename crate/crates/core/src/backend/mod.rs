//! Execution interface shared by a real SQL database and the in-process
//! simulator used for hermetic runs.

#[cfg(feature = "postgres")]
mod pg;
mod simulator;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flatfile::FlatFileError;
use crate::schema::Table;

#[cfg(feature = "postgres")]
pub use pg::PgBackend;
pub use simulator::{Simulator, SimulatorSnapshot};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("session closed")]
    Closed,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("{0}")]
    Sql(String),
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("{path}:{line}: {msg}")]
    BulkLoad { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    FlatFile(#[from] FlatFileError),
    #[error("{0} is not supported by this backend")]
    Unsupported(String),
    #[error("empty SQL text")]
    EmptySql,
    #[error("backend kind `{0}` is not compiled in")]
    NotCompiled(&'static str),
    #[error("a DSN is required for the sql_dbms backend")]
    MissingDsn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    SqlDbms,
    #[default]
    Simulator,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sql_dbms" | "sql" | "postgres" | "pg" => Ok(BackendKind::SqlDbms),
            "simulator" | "sim" => Ok(BackendKind::Simulator),
            other => Err(format!("unknown backend `{other}` (expected sql_dbms or simulator)")),
        }
    }
}

/// Simulated statement latencies: the first pattern found in the SQL text
/// wins, otherwise `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub patterns: Vec<(String, f64)>,
    pub default: f64,
    /// Rows reported for every successful SELECT.
    pub rows: u64,
    /// Relative spread of the seeded multiplicative jitter, in `[0, 1)`.
    pub jitter: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { patterns: Vec::new(), default: 0.01, rows: 1, jitter: 0.0 }
    }
}

impl LatencyModel {
    pub fn with_pattern(mut self, pattern: impl Into<String>, seconds: f64) -> Self {
        self.patterns.push((pattern.into(), seconds));
        self
    }

    pub fn latency_for(&self, sql: &str) -> f64 {
        self.patterns.iter().find(|(p, _)| sql.contains(p.as_str())).map_or(self.default, |(_, s)| *s)
    }

    /// Pattern matching the header comment of query template `id`.
    pub fn query_pattern(id: u8) -> String {
        format!("(Q{id})")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub dsn: Option<String>,
    pub latency: LatencyModel,
    pub plan_prefix: String,
    pub seed: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Simulator,
            dsn: None,
            latency: LatencyModel::default(),
            plan_prefix: "EXPLAIN".into(),
            seed: crate::querygen::DEFAULT_SEED,
        }
    }
}

impl BackendConfig {
    pub fn simulator(latency: LatencyModel) -> Self {
        BackendConfig { latency, ..Default::default() }
    }

    pub fn sql(dsn: impl Into<String>) -> Self {
        BackendConfig { kind: BackendKind::SqlDbms, dsn: Some(dsn.into()), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "detail")]
pub enum ExecStatus {
    Ok,
    Timeout,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    /// Rows returned or affected; only set when the statement succeeded.
    pub rows: Option<u64>,
    /// Seconds; equals the timeout when the statement was cancelled.
    pub elapsed: f64,
    pub status: ExecStatus,
}

impl ExecResult {
    pub fn ok(rows: u64, elapsed: f64) -> Self {
        ExecResult { rows: Some(rows), elapsed, status: ExecStatus::Ok }
    }

    pub fn timeout(timeout: Duration) -> Self {
        ExecResult { rows: None, elapsed: timeout.as_secs_f64(), status: ExecStatus::Timeout }
    }

    pub fn error(msg: impl Into<String>, elapsed: f64) -> Self {
        ExecResult { rows: None, elapsed, status: ExecStatus::Error(msg.into()) }
    }
}

/// One connection. Sessions are used from a single thread at a time; distinct
/// sessions may run in parallel.
pub trait Session: Send {
    /// Runs `sql` (possibly several statements), giving up and cancelling it
    /// at `timeout`. Failures are reported in the status, never as `Err`.
    fn execute(&mut self, sql: &str, timeout: Duration) -> ExecResult;

    /// Plan text for `sql` without executing it.
    fn explain(&mut self, sql: &str) -> Result<String, BackendError>;

    /// Drops and recreates the eight tables, without keys or indexes.
    fn create_schema(&mut self) -> Result<(), BackendError>;

    /// Primary keys and secondary indexes.
    fn build_constraints(&mut self) -> Result<(), BackendError>;

    /// Optimizer statistics collection.
    fn analyze(&mut self) -> Result<(), BackendError>;

    /// Ingests one flat file through the bulk path; returns its row count.
    fn bulk_load(&mut self, table: Table, file: &Path) -> Result<u64, BackendError>;

    fn begin(&mut self) -> Result<(), BackendError>;
    fn commit(&mut self) -> Result<(), BackendError>;
    fn rollback(&mut self) -> Result<(), BackendError>;

    /// Inserts flat-file style records in batches of `batch` rows.
    fn insert_rows(&mut self, table: Table, rows: &[Vec<String>], batch: usize) -> Result<u64, BackendError>;

    /// `delete from table where column in (keys)`; returns rows deleted.
    fn delete_where_in(&mut self, table: Table, column: &str, keys: &[i64]) -> Result<u64, BackendError>;

    fn count_rows(&mut self, table: Table) -> Result<u64, BackendError>;

    /// A statement could not be cancelled and the connection state is unknown.
    fn tainted(&self) -> bool {
        false
    }

    fn close(&mut self);
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn open_session(&self) -> Result<Box<dyn Session>, BackendError>;
}

pub fn connect(cfg: &BackendConfig) -> Result<Arc<dyn Backend>, BackendError> {
    match cfg.kind {
        BackendKind::Simulator => Ok(Arc::new(Simulator::new(cfg.latency.clone(), &cfg.plan_prefix, cfg.seed))),
        BackendKind::SqlDbms => connect_sql(cfg),
    }
}

#[cfg(feature = "postgres")]
fn connect_sql(cfg: &BackendConfig) -> Result<Arc<dyn Backend>, BackendError> {
    let dsn = cfg.dsn.clone().ok_or(BackendError::MissingDsn)?;
    Ok(Arc::new(PgBackend::new(dsn, &cfg.plan_prefix)))
}

#[cfg(not(feature = "postgres"))]
fn connect_sql(_cfg: &BackendConfig) -> Result<Arc<dyn Backend>, BackendError> {
    Err(BackendError::NotCompiled("sql_dbms"))
}

/// SQL string literal with embedded quotes doubled.
pub fn quote_literal(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Multi-row INSERT statements of at most `batch` rows each.
pub fn insert_statements(table: Table, rows: &[Vec<String>], batch: usize) -> Vec<String> {
    rows.chunks(batch.max(1))
        .map(|chunk| {
            let values: Vec<String> = chunk
                .iter()
                .map(|r| format!("({})", r.iter().map(|v| quote_literal(v)).collect::<Vec<_>>().join(", ")))
                .collect();
            format!("insert into {} values {}", table.name(), values.join(", "))
        })
        .collect()
}
