//! RF1 (insert new orders and their lineitems) and RF2 (delete orders and
//! their lineitems by key), each in one transaction.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, Session};
use crate::datagen::{RefreshSet, MAX_LINES_PER_ORDER};
use crate::querygen::RefreshFunction;
use crate::schema::Table;

pub const DEFAULT_BATCH: usize = 1000;

#[derive(Debug, Error)]
pub enum RefreshError {
    #[error("{function:?} rolled back: {source}")]
    RolledBack { function: RefreshFunction, source: BackendError },
    #[error("{function:?} failed and rollback also failed: {source}")]
    RollbackFailed { function: RefreshFunction, source: BackendError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshOutcome {
    pub function: RefreshFunction,
    pub orders_affected: u64,
    pub lineitems_affected: u64,
    /// Seconds.
    pub elapsed: f64,
}

impl RefreshOutcome {
    /// Lineitem count lies within `[1, 7]` per order (RF1 only).
    pub fn lines_in_bounds(&self) -> bool {
        self.lineitems_affected >= self.orders_affected
            && self.lineitems_affected <= MAX_LINES_PER_ORDER as u64 * self.orders_affected
    }
}

fn in_transaction(
    session: &mut dyn Session,
    function: RefreshFunction,
    body: impl FnOnce(&mut dyn Session) -> Result<(u64, u64), BackendError>,
) -> Result<RefreshOutcome, RefreshError> {
    let start = Instant::now();
    let run = |s: &mut dyn Session| {
        s.begin()?;
        let counts = body(s)?;
        s.commit()?;
        Ok(counts)
    };
    match run(session) {
        Ok((orders_affected, lineitems_affected)) => Ok(RefreshOutcome {
            function,
            orders_affected,
            lineitems_affected,
            elapsed: start.elapsed().as_secs_f64(),
        }),
        Err(source) => match session.rollback() {
            Ok(()) => Err(RefreshError::RolledBack { function, source }),
            Err(_) => Err(RefreshError::RollbackFailed { function, source }),
        },
    }
}

/// Inserts the new orders, then their lineitems, in batches of `batch` rows.
pub fn rf1(session: &mut dyn Session, set: &RefreshSet, batch: usize) -> Result<RefreshOutcome, RefreshError> {
    in_transaction(session, RefreshFunction::Rf1, |s| {
        let orders = s.insert_rows(Table::Orders, &set.new_orders, batch)?;
        let lines = s.insert_rows(Table::Lineitem, &set.new_lineitems, batch)?;
        Ok((orders, lines))
    })
}

/// Deletes the lineitems of `keys`, then the orders. Absent keys are no-ops.
pub fn rf2(session: &mut dyn Session, keys: &[i64]) -> Result<RefreshOutcome, RefreshError> {
    in_transaction(session, RefreshFunction::Rf2, |s| {
        let lines = s.delete_where_in(Table::Lineitem, "l_orderkey", keys)?;
        let orders = s.delete_where_in(Table::Orders, "o_orderkey", keys)?;
        Ok((orders, lines))
    })
}
