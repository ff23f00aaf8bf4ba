//! PostgreSQL backend over the native wire protocol.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use postgres::error::SqlState;
use postgres::{Client, NoTls, SimpleQueryMessage};

use super::{insert_statements, Backend, BackendError, BackendKind, ExecResult, Session};
use crate::flatfile::{for_each_record, FlatFileError};
use crate::schema::{constraints_ddl, create_tables_ddl, Table, TableSpec, SCHEMA};

pub struct PgBackend {
    dsn: String,
    plan_prefix: String,
}

impl PgBackend {
    pub fn new(dsn: String, plan_prefix: &str) -> Self {
        PgBackend { dsn, plan_prefix: plan_prefix.to_string() }
    }
}

impl Backend for PgBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::SqlDbms
    }

    fn open_session(&self) -> Result<Box<dyn Session>, BackendError> {
        let client = Client::connect(&self.dsn, NoTls).map_err(|e| BackendError::Connect(e.to_string()))?;
        Ok(Box::new(PgSession { client: Some(client), plan_prefix: self.plan_prefix.clone(), tainted: false }))
    }
}

struct PgSession {
    client: Option<Client>,
    plan_prefix: String,
    tainted: bool,
}

fn sql_error(e: postgres::Error) -> BackendError {
    match e.as_db_error() {
        Some(db) if db.code() == &SqlState::UNIQUE_VIOLATION || db.code() == &SqlState::FOREIGN_KEY_VIOLATION => {
            BackendError::Constraint(db.message().to_string())
        }
        Some(db) => BackendError::Sql(db.message().to_string()),
        None => BackendError::Sql(e.to_string()),
    }
}

fn schema() -> Vec<&'static TableSpec> {
    SCHEMA.iter().collect()
}

impl PgSession {
    fn client(&mut self) -> Result<&mut Client, BackendError> {
        self.client.as_mut().ok_or(BackendError::Closed)
    }

    fn batch(&mut self, sql: &str) -> Result<(), BackendError> {
        self.client()?.batch_execute(sql).map_err(sql_error)
    }

    fn rows_of(messages: &[SimpleQueryMessage]) -> u64 {
        let returned = messages.iter().filter(|m| matches!(m, SimpleQueryMessage::Row(_))).count() as u64;
        if returned > 0 {
            return returned;
        }
        messages
            .iter()
            .filter_map(|m| match m {
                SimpleQueryMessage::CommandComplete(n) => Some(*n),
                _ => None,
            })
            .sum()
    }
}

impl Session for PgSession {
    fn execute(&mut self, sql: &str, timeout: Duration) -> ExecResult {
        let Some(client) = self.client.as_mut() else {
            return ExecResult::error("session closed", 0.0);
        };
        if sql.trim().is_empty() {
            return ExecResult::error("empty query", 0.0);
        }
        let token = client.cancel_token();
        let (done, wait) = mpsc::channel::<()>();
        let watchdog = thread::spawn(move || match wait.recv_timeout(timeout) {
            Err(RecvTimeoutError::Timeout) => Some(token.cancel_query(NoTls).is_ok()),
            _ => None,
        });
        let start = Instant::now();
        let result = client.simple_query(sql);
        let elapsed = start.elapsed();
        let _ = done.send(());
        let fired = watchdog.join().unwrap_or(Some(false));
        if let Some(cancelled) = fired {
            if !cancelled {
                self.tainted = true;
            }
            // A multi-statement script may have left a transaction open.
            let _ = client.batch_execute("rollback");
            return ExecResult::timeout(timeout);
        }
        match result {
            Ok(messages) => ExecResult::ok(Self::rows_of(&messages), elapsed.as_secs_f64()),
            Err(e) if e.code() == Some(&SqlState::QUERY_CANCELED) => ExecResult::timeout(timeout),
            Err(e) => {
                let _ = client.batch_execute("rollback");
                ExecResult::error(sql_error(e).to_string(), elapsed.as_secs_f64())
            }
        }
    }

    fn explain(&mut self, sql: &str) -> Result<String, BackendError> {
        if sql.trim().is_empty() {
            return Err(BackendError::EmptySql);
        }
        let text = format!("{} {}", self.plan_prefix, sql.trim().trim_end_matches(';'));
        let messages = self.client()?.simple_query(&text).map_err(sql_error)?;
        let lines: Vec<String> = messages
            .iter()
            .filter_map(|m| match m {
                SimpleQueryMessage::Row(r) => r.get(0).map(str::to_string),
                _ => None,
            })
            .collect();
        Ok(lines.join("\n"))
    }

    fn create_schema(&mut self) -> Result<(), BackendError> {
        let drops: String = Table::ALL.iter().map(|t| format!("drop table if exists {} cascade;\n", t.name())).collect();
        self.batch(&drops)?;
        self.batch(&create_tables_ddl(&schema()))
    }

    fn build_constraints(&mut self) -> Result<(), BackendError> {
        self.batch(&constraints_ddl(&schema()))
    }

    fn analyze(&mut self) -> Result<(), BackendError> {
        self.batch("analyze")
    }

    fn bulk_load(&mut self, table: Table, file: &Path) -> Result<u64, BackendError> {
        // Reject malformed files before streaming anything.
        for_each_record(file, table, |_, _| Ok(())).map_err(|e| match e {
            FlatFileError::FieldCount { path, line, expected, found } => {
                BackendError::BulkLoad { path, line, msg: format!("expected {expected} fields, found {found}") }
            }
            other => other.into(),
        })?;
        let io = |e: std::io::Error| BackendError::FlatFile(FlatFileError::Io { path: file.to_path_buf(), source: e });
        let mut reader = BufReader::new(File::open(file).map_err(io)?);
        let copy = format!("copy {} from stdin with (format text, delimiter '|')", table.name());
        let mut writer = self.client()?.copy_in(&copy).map_err(sql_error)?;
        let mut buf = vec![0u8; 1 << 16];
        loop {
            let n = reader.read(&mut buf).map_err(io)?;
            if n == 0 {
                break;
            }
            writer.write_all(&buf[..n]).map_err(|e| BackendError::Sql(e.to_string()))?;
        }
        writer.finish().map_err(sql_error)
    }

    fn begin(&mut self) -> Result<(), BackendError> {
        self.batch("begin")
    }

    fn commit(&mut self) -> Result<(), BackendError> {
        self.batch("commit")
    }

    fn rollback(&mut self) -> Result<(), BackendError> {
        self.batch("rollback")
    }

    fn insert_rows(&mut self, table: Table, rows: &[Vec<String>], batch: usize) -> Result<u64, BackendError> {
        let client = self.client()?;
        let mut n = 0;
        for stmt in insert_statements(table, rows, batch) {
            n += Self::rows_of(&client.simple_query(&stmt).map_err(sql_error)?);
        }
        Ok(n)
    }

    fn delete_where_in(&mut self, table: Table, column: &str, keys: &[i64]) -> Result<u64, BackendError> {
        let client = self.client()?;
        let mut n = 0;
        for chunk in keys.chunks(1000) {
            let list: Vec<String> = chunk.iter().map(i64::to_string).collect();
            let stmt = format!("delete from {} where {} in ({})", table.name(), column, list.join(", "));
            n += Self::rows_of(&client.simple_query(&stmt).map_err(sql_error)?);
        }
        Ok(n)
    }

    fn count_rows(&mut self, table: Table) -> Result<u64, BackendError> {
        let messages = self.client()?.simple_query(&format!("select count(*) from {}", table.name())).map_err(sql_error)?;
        messages
            .iter()
            .find_map(|m| match m {
                SimpleQueryMessage::Row(r) => r.get(0).and_then(|v| v.parse().ok()),
                _ => None,
            })
            .ok_or_else(|| BackendError::Sql(format!("count(*) on {table} returned no row")))
    }

    fn tainted(&self) -> bool {
        self.tainted
    }

    fn close(&mut self) {
        if let Some(c) = self.client.take() {
            let _ = c.close();
        }
    }
}
