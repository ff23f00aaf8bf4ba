//! Deterministic in-process backend. SELECTs cost a configured latency and
//! return a configured row count; loads and refreshes update row counters
//! so load validation and the refresh round trip can be checked hermetically.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backend, BackendError, BackendKind, ExecResult, LatencyModel, Session};
use crate::datagen::splitmix64;
use crate::flatfile::{for_each_record, split_record};
use crate::schema::{primary_key_name, Table};

#[derive(Debug, Default)]
struct SimState {
    counts: BTreeMap<Table, u64>,
    orders: HashSet<i64>,
    /// Lineitems per order key.
    lines: HashMap<i64, u64>,
    /// Full rows of the two tiny tables.
    small: BTreeMap<Table, Vec<Vec<String>>>,
}

impl SimState {
    fn add(&mut self, table: Table, n: u64) {
        *self.counts.entry(table).or_default() += n;
    }

    fn sub(&mut self, table: Table, n: u64) {
        let c = self.counts.entry(table).or_default();
        *c = c.saturating_sub(n);
    }

    fn undo(&mut self, op: Undo) {
        match op {
            Undo::Rows(table, n) => self.sub(table, n),
            Undo::Order(k) => {
                self.orders.remove(&k);
                self.sub(Table::Orders, 1);
            }
            Undo::Lines(k, n) => {
                if let Some(c) = self.lines.get_mut(&k) {
                    *c -= n;
                    if *c == 0 {
                        self.lines.remove(&k);
                    }
                }
                self.sub(Table::Lineitem, n);
            }
            Undo::DeletedOrder(k) => {
                self.orders.insert(k);
                self.add(Table::Orders, 1);
            }
            Undo::DeletedLines(k, n) => {
                *self.lines.entry(k).or_default() += n;
                self.add(Table::Lineitem, n);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Undo {
    Rows(Table, u64),
    Order(i64),
    Lines(i64, u64),
    DeletedOrder(i64),
    DeletedLines(i64, u64),
}

/// Row counts of a simulator, for before/after comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatorSnapshot {
    pub counts: BTreeMap<Table, u64>,
}

impl SimulatorSnapshot {
    pub fn rows(&self, table: Table) -> u64 {
        self.counts.get(&table).copied().unwrap_or(0)
    }
}

pub struct Simulator {
    latency: LatencyModel,
    plan_prefix: String,
    seed: u64,
    next_session: AtomicU64,
    state: Arc<Mutex<SimState>>,
}

impl Simulator {
    pub fn new(latency: LatencyModel, plan_prefix: &str, seed: u64) -> Self {
        Simulator {
            latency,
            plan_prefix: plan_prefix.to_string(),
            seed,
            next_session: AtomicU64::new(0),
            state: Arc::default(),
        }
    }

    pub fn snapshot(&self) -> SimulatorSnapshot {
        SimulatorSnapshot { counts: lock(&self.state).counts.clone() }
    }

    /// Stored rows of REGION or NATION; larger tables keep counters only.
    pub fn small_table_rows(&self, table: Table) -> Vec<Vec<String>> {
        lock(&self.state).small.get(&table).cloned().unwrap_or_default()
    }

    /// Order keys that have at least one lineitem but no order row.
    pub fn orphan_lineitem_orders(&self) -> usize {
        let s = lock(&self.state);
        s.lines.keys().filter(|k| !s.orders.contains(k)).count()
    }

    /// Concrete session, for callers that want simulator-specific access.
    pub fn session(&self) -> SimSession {
        let id = self.next_session.fetch_add(1, Ordering::Relaxed);
        SimSession {
            latency: self.latency.clone(),
            plan_prefix: self.plan_prefix.clone(),
            rng: ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(id))),
            state: Arc::clone(&self.state),
            undo: None,
            open: true,
        }
    }
}

impl Backend for Simulator {
    fn kind(&self) -> BackendKind {
        BackendKind::Simulator
    }

    fn open_session(&self) -> Result<Box<dyn Session>, BackendError> {
        Ok(Box::new(self.session()))
    }
}

fn lock(state: &Mutex<SimState>) -> MutexGuard<'_, SimState> {
    state.lock().unwrap_or_else(|e| e.into_inner())
}

pub struct SimSession {
    latency: LatencyModel,
    plan_prefix: String,
    rng: ChaCha8Rng,
    state: Arc<Mutex<SimState>>,
    /// Undo log of the open transaction.
    undo: Option<Vec<Undo>>,
    open: bool,
}

fn parse_key(field: &str, table: Table, line: usize) -> Result<i64, BackendError> {
    field.parse().map_err(|_| BackendError::Sql(format!("{table} row {line}: bad key `{field}`")))
}

impl SimSession {
    fn check_open(&self) -> Result<(), BackendError> {
        if self.open {
            Ok(())
        } else {
            Err(BackendError::Closed)
        }
    }

    fn record(&mut self, op: Undo) {
        if let Some(log) = &mut self.undo {
            log.push(op);
        }
    }

    /// Applies one row to the shared state.
    fn apply_row(&mut self, table: Table, row: &[&str], line: usize) -> Result<(), BackendError> {
        let mut s = lock(&self.state);
        let op = match table {
            Table::Orders => {
                let k = parse_key(row[0], table, line)?;
                if !s.orders.insert(k) {
                    return Err(BackendError::Constraint(format!(
                        "duplicate key value violates unique constraint \"{}\": o_orderkey={k}",
                        primary_key_name(table)
                    )));
                }
                s.add(table, 1);
                Undo::Order(k)
            }
            Table::Lineitem => {
                let k = parse_key(row[0], table, line)?;
                *s.lines.entry(k).or_default() += 1;
                s.add(table, 1);
                Undo::Lines(k, 1)
            }
            Table::Region | Table::Nation => {
                s.small.entry(table).or_default().push(row.iter().map(|f| f.to_string()).collect());
                s.add(table, 1);
                Undo::Rows(table, 1)
            }
            _ => {
                s.add(table, 1);
                Undo::Rows(table, 1)
            }
        };
        drop(s);
        self.record(op);
        Ok(())
    }
}

impl Session for SimSession {
    fn execute(&mut self, sql: &str, timeout: Duration) -> ExecResult {
        if !self.open {
            return ExecResult::error("session closed", 0.0);
        }
        if sql.trim().is_empty() {
            return ExecResult::error("empty query", 0.0);
        }
        let mut seconds = self.latency.latency_for(sql);
        if self.latency.jitter > 0.0 {
            seconds *= 1.0 + self.latency.jitter * (2.0 * self.rng.random::<f64>() - 1.0);
        }
        let latency = Duration::from_secs_f64(seconds.max(0.0));
        let start = Instant::now();
        if latency > timeout {
            std::thread::sleep(timeout);
            return ExecResult::timeout(timeout);
        }
        std::thread::sleep(latency);
        ExecResult::ok(self.latency.rows, start.elapsed().as_secs_f64())
    }

    fn explain(&mut self, sql: &str) -> Result<String, BackendError> {
        self.check_open()?;
        if sql.trim().is_empty() {
            return Err(BackendError::EmptySql);
        }
        Ok(format!("{} (simulated plan)\n{}", self.plan_prefix, sql.trim()))
    }

    fn create_schema(&mut self) -> Result<(), BackendError> {
        self.check_open()?;
        *lock(&self.state) = SimState::default();
        Ok(())
    }

    fn build_constraints(&mut self) -> Result<(), BackendError> {
        self.check_open()
    }

    fn analyze(&mut self) -> Result<(), BackendError> {
        self.check_open()
    }

    fn bulk_load(&mut self, table: Table, file: &Path) -> Result<u64, BackendError> {
        self.check_open()?;
        let mut failed = None;
        let n = for_each_record(file, table, |line, text| {
            if failed.is_some() {
                return Ok(());
            }
            if let Err(e) = self.apply_row(table, &split_record(text), line) {
                failed = Some(BackendError::BulkLoad { path: file.to_path_buf(), line, msg: e.to_string() });
            }
            Ok(())
        })
        .map_err(|e| match e {
            crate::flatfile::FlatFileError::FieldCount { path, line, expected, found } => {
                BackendError::BulkLoad { path, line, msg: format!("expected {expected} fields, found {found}") }
            }
            other => other.into(),
        })?;
        match failed {
            Some(e) => Err(e),
            None => Ok(n),
        }
    }

    fn begin(&mut self) -> Result<(), BackendError> {
        self.check_open()?;
        self.undo = Some(Vec::new());
        Ok(())
    }

    fn commit(&mut self) -> Result<(), BackendError> {
        self.check_open()?;
        self.undo = None;
        Ok(())
    }

    fn rollback(&mut self) -> Result<(), BackendError> {
        self.check_open()?;
        if let Some(log) = self.undo.take() {
            let mut s = lock(&self.state);
            for op in log.into_iter().rev() {
                s.undo(op);
            }
        }
        Ok(())
    }

    fn insert_rows(&mut self, table: Table, rows: &[Vec<String>], _batch: usize) -> Result<u64, BackendError> {
        self.check_open()?;
        let width = table.columns().len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(BackendError::Sql(format!("{table} row {}: {} values for {width} columns", i + 1, row.len())));
            }
            let fields: Vec<&str> = row.iter().map(String::as_str).collect();
            self.apply_row(table, &fields, i + 1)?;
        }
        Ok(rows.len() as u64)
    }

    fn delete_where_in(&mut self, table: Table, column: &str, keys: &[i64]) -> Result<u64, BackendError> {
        self.check_open()?;
        let mut s = lock(&self.state);
        let mut ops = Vec::new();
        let mut deleted = 0;
        match (table, column) {
            (Table::Orders, "o_orderkey") => {
                for &k in keys {
                    if s.orders.remove(&k) {
                        s.sub(table, 1);
                        deleted += 1;
                        ops.push(Undo::DeletedOrder(k));
                    }
                }
            }
            (Table::Lineitem, "l_orderkey") => {
                for &k in keys {
                    if let Some(n) = s.lines.remove(&k) {
                        s.sub(table, n);
                        deleted += n;
                        ops.push(Undo::DeletedLines(k, n));
                    }
                }
            }
            _ => return Err(BackendError::Unsupported(format!("simulated delete on {table}.{column}"))),
        }
        drop(s);
        for op in ops {
            self.record(op);
        }
        Ok(deleted)
    }

    fn count_rows(&mut self, table: Table) -> Result<u64, BackendError> {
        self.check_open()?;
        Ok(lock(&self.state).counts.get(&table).copied().unwrap_or(0))
    }

    fn close(&mut self) {
        if self.undo.is_some() {
            let _ = self.rollback();
        }
        self.open = false;
    }
}
