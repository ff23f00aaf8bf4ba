//! Refresh sets: new orders (with 1..=7 lineitems each) for RF1 and base
//! order keys to delete for RF2.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::rows::{RowFactory, MAX_LINES_PER_ORDER};
use super::GenError;
use crate::flatfile::{format_record, read_records};
use crate::schema::{ScaleFactor, Table};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefreshSet {
    pub pair_index: u32,
    pub new_orders: Vec<Vec<String>>,
    pub new_lineitems: Vec<Vec<String>>,
    pub delete_keys: Vec<i64>,
}

/// Orders per refresh pair: 0.1% of the ORDERS base population, at least one.
pub fn refresh_size(sf: ScaleFactor) -> u64 {
    let orders = super::Populations::at(sf).orders;
    ((orders as f64 * 0.001).round() as u64).max(1)
}

/// `(orders.tbl.u<i>, lineitem.tbl.u<i>, delete.<i>)`.
pub fn refresh_file_names(pair: u32) -> [String; 3] {
    [format!("orders.tbl.u{pair}"), format!("lineitem.tbl.u{pair}"), format!("delete.{pair}")]
}

/// Builds refresh pair `pair_index` and writes its three files to `dir`.
pub fn generate_refresh_set(sf: ScaleFactor, pair_index: u32, seed: u64, dir: &Path) -> Result<RefreshSet, GenError> {
    let set = RefreshSet::build(sf, pair_index, seed)?;
    set.write(dir)?;
    Ok(set)
}

fn order_key(row: &[String]) -> Option<i64> {
    row.first()?.parse().ok()
}

impl RefreshSet {
    pub fn build(sf: ScaleFactor, pair_index: u32, seed: u64) -> Result<Self, GenError> {
        if pair_index == 0 {
            return Err(GenError::PartIndex { index: 0, count: 0 });
        }
        let factory = RowFactory::new(sf, seed)?;
        let base = factory.pop.orders as i64;
        let k = refresh_size(sf) as i64;
        let offset = (pair_index as i64 - 1) * k;
        let mut new_orders = Vec::with_capacity(k as usize);
        let mut new_lineitems = Vec::new();
        for j in 1..=k {
            let (o, lines) = factory.order_with_lineitems(base + offset + j);
            new_orders.push(o);
            new_lineitems.extend(lines);
        }
        let delete_keys = (0..k).map(|j| (offset + j).rem_euclid(base) + 1).collect();
        Ok(RefreshSet { pair_index, new_orders, new_lineitems, delete_keys })
    }

    pub fn paths(dir: &Path, pair: u32) -> [PathBuf; 3] {
        refresh_file_names(pair).map(|n| dir.join(n))
    }

    pub fn write(&self, dir: &Path) -> Result<(), GenError> {
        fs::create_dir_all(dir).map_err(|source| GenError::Io { path: dir.to_path_buf(), source })?;
        let [orders, lineitems, deletes] = Self::paths(dir, self.pair_index);
        let write = |path: &PathBuf, text: String| {
            fs::write(path, text).map_err(|source| GenError::Io { path: path.clone(), source })
        };
        write(&orders, self.new_orders.iter().map(|r| format_record(r)).collect())?;
        write(&lineitems, self.new_lineitems.iter().map(|r| format_record(r)).collect())?;
        write(&deletes, self.delete_keys.iter().map(|k| format!("{k}\n")).collect())?;
        Ok(())
    }

    /// Reads a refresh pair back from its files and checks its invariants.
    pub fn read(dir: &Path, pair_index: u32) -> Result<Self, GenError> {
        let [orders, lineitems, deletes] = Self::paths(dir, pair_index);
        let new_orders = read_records(&orders, Table::Orders)?;
        let new_lineitems = read_records(&lineitems, Table::Lineitem)?;
        let text = fs::read_to_string(&deletes).map_err(|source| GenError::Io { path: deletes.clone(), source })?;
        let delete_keys = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim().parse().map_err(|_| GenError::InvalidRefreshSet {
                    pair: pair_index,
                    msg: format!("bad delete key `{l}`"),
                })
            })
            .collect::<Result<Vec<i64>, _>>()?;
        let set = RefreshSet { pair_index, new_orders, new_lineitems, delete_keys };
        set.check()?;
        Ok(set)
    }

    pub fn new_order_keys(&self) -> Vec<i64> {
        self.new_orders.iter().filter_map(|r| order_key(r)).collect()
    }

    /// Lineitems per new order, keyed by order key.
    pub fn lines_per_order(&self) -> BTreeMap<i64, u32> {
        let mut m: BTreeMap<i64, u32> = self.new_order_keys().into_iter().map(|k| (k, 0)).collect();
        for l in &self.new_lineitems {
            if let Some(k) = order_key(l) {
                *m.entry(k).or_default() += 1;
            }
        }
        m
    }

    /// Every lineitem belongs to a new order, each order has 1..=7 lines,
    /// and no delete key collides with a new order key.
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |msg: String| GenError::InvalidRefreshSet { pair: self.pair_index, msg };
        let keys = self.new_order_keys();
        if keys.len() != self.new_orders.len() {
            return Err(bad("unparseable order key".into()));
        }
        for (k, n) in self.lines_per_order() {
            if !keys.contains(&k) {
                return Err(bad(format!("lineitem references unknown order {k}")));
            }
            if n == 0 || n > MAX_LINES_PER_ORDER {
                return Err(bad(format!("order {k} has {n} lineitems")));
            }
        }
        if let Some(k) = self.delete_keys.iter().find(|k| keys.contains(k)) {
            return Err(bad(format!("delete key {k} is also a new order")));
        }
        Ok(())
    }
}
