//! Row construction. Every row is a pure function of `(seed, table, key)`:
//! each key gets its own ChaCha8 stream, so any partitioning of a key range
//! produces exactly the rows of the unpartitioned run.

use chrono::{Duration, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::domains::*;
use super::GenError;
use crate::flatfile::{push_record, Decimal2};
use crate::schema::{ScaleFactor, Table};

/// Suppliers per part in PARTSUPP.
pub const SUPPLIERS_PER_PART: u64 = 4;
pub const MAX_LINES_PER_ORDER: u32 = 7;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the substream seed for one row.
pub fn row_seed(seed: u64, table: Table, key: i64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(table as u64 + 1)) ^ key as u64)
}

/// Population sizes at a given scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Populations {
    pub suppliers: u64,
    pub parts: u64,
    pub customers: u64,
    pub orders: u64,
    pub clerks: u64,
}

impl Populations {
    pub fn at(sf: ScaleFactor) -> Self {
        Populations {
            suppliers: sf.scale(10_000),
            parts: sf.scale(200_000),
            customers: sf.scale(150_000),
            orders: sf.scale(1_500_000),
            clerks: sf.scale(1_000),
        }
    }
}

/// Row factory for one `(sf, seed)` database instance.
#[derive(Debug, Clone)]
pub struct RowFactory {
    pub sf: ScaleFactor,
    pub seed: u64,
    pub pop: Populations,
    brands: Vec<String>,
    types: Vec<String>,
    containers: Vec<String>,
}

fn date_str(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn comment(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let target = rng.random_range(min..=max);
    let mut s = String::new();
    loop {
        let w = COMMENT_WORDS.choose(rng).unwrap();
        let extra = w.len() + usize::from(!s.is_empty());
        if s.len() + extra > target {
            if s.is_empty() {
                s.push_str(&w[..target.min(w.len())]);
            }
            return s;
        }
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(w);
    }
}

fn address(rng: &mut impl Rng) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789,. ";
    let n = rng.random_range(10..=40);
    (0..n).map(|_| *CHARS.choose(rng).unwrap() as char).collect()
}

fn phone(rng: &mut impl Rng, nation_key: i64) -> String {
    format!(
        "{:02}-{:03}-{:03}-{:04}",
        country_code(nation_key),
        rng.random_range(100..=999),
        rng.random_range(100..=999),
        rng.random_range(1000..=9999)
    )
}

fn acctbal(rng: &mut impl Rng) -> Decimal2 {
    Decimal2(rng.random_range(-99_999..=999_999))
}

/// Deterministic retail price of a part, in hundredths.
pub fn retail_price(partkey: i64) -> Decimal2 {
    Decimal2(90_000 + (partkey / 10) % 20_001 + 100 * (partkey % 1_000))
}

impl RowFactory {
    pub fn new(sf: ScaleFactor, seed: u64) -> Result<Self, GenError> {
        let pop = Populations::at(sf);
        if pop.suppliers < SUPPLIERS_PER_PART {
            return Err(GenError::ScaleTooSmall { sf: sf.value(), suppliers: pop.suppliers });
        }
        Ok(RowFactory {
            sf,
            seed,
            pop,
            brands: brands(),
            types: part_types(),
            containers: containers(),
        })
    }

    fn rng(&self, table: Table, key: i64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(row_seed(self.seed, table, key))
    }

    /// Number of generation units for a table: rows, except PARTSUPP (parts)
    /// and LINEITEM (orders).
    pub fn unit_count(&self, table: Table) -> u64 {
        match table {
            Table::Region => REGIONS.len() as u64,
            Table::Nation => NATIONS.len() as u64,
            Table::Supplier => self.pop.suppliers,
            Table::Part | Table::Partsupp => self.pop.parts,
            Table::Customer => self.pop.customers,
            Table::Orders | Table::Lineitem => self.pop.orders,
        }
    }

    /// Appends the records of units `first..=last` (1-based) to `out` and
    /// returns the number of records written.
    pub fn write_units(&self, table: Table, first: u64, last: u64, out: &mut String) -> u64 {
        let mut n = 0;
        for unit in first..=last {
            let key = unit as i64;
            match table {
                Table::Partsupp => {
                    for row in self.partsupp_rows(key) {
                        push_record(out, &row);
                        n += 1;
                    }
                }
                Table::Lineitem => {
                    for row in self.order_with_lineitems(key).1 {
                        push_record(out, &row);
                        n += 1;
                    }
                }
                Table::Orders => {
                    push_record(out, &self.order_with_lineitems(key).0);
                    n += 1;
                }
                _ => {
                    push_record(out, &self.simple_row(table, key));
                    n += 1;
                }
            }
        }
        n
    }

    /// Tables with one row per key.
    pub fn simple_row(&self, table: Table, key: i64) -> Vec<String> {
        match table {
            Table::Region => self.region_row(key),
            Table::Nation => self.nation_row(key),
            Table::Supplier => self.supplier_row(key),
            Table::Part => self.part_row(key),
            Table::Customer => self.customer_row(key),
            Table::Orders => self.order_with_lineitems(key).0,
            Table::Partsupp | Table::Lineitem => panic!("{table} is not keyed one row per unit"),
        }
    }

    pub fn region_row(&self, key: i64) -> Vec<String> {
        let mut rng = self.rng(Table::Region, key);
        vec![key.to_string(), REGIONS[(key - 1) as usize].to_string(), comment(&mut rng, 31, 115)]
    }

    pub fn nation_row(&self, key: i64) -> Vec<String> {
        let mut rng = self.rng(Table::Nation, key);
        let (name, region) = NATIONS[(key - 1) as usize];
        vec![key.to_string(), name.to_string(), (region + 1).to_string(), comment(&mut rng, 31, 114)]
    }

    pub fn supplier_row(&self, key: i64) -> Vec<String> {
        let mut rng = self.rng(Table::Supplier, key);
        let nation = rng.random_range(1..=25i64);
        let addr = address(&mut rng);
        let ph = phone(&mut rng, nation);
        let bal = acctbal(&mut rng);
        let text = if rng.random_ratio(1, 20) {
            format!("{} Customer {} Complaints {}", comment(&mut rng, 5, 30), comment(&mut rng, 5, 20), comment(&mut rng, 5, 30))
        } else {
            comment(&mut rng, 25, 100)
        };
        vec![key.to_string(), format!("Supplier#{key:09}"), addr, nation.to_string(), ph, bal.to_string(), text]
    }

    pub fn part_row(&self, key: i64) -> Vec<String> {
        let mut rng = self.rng(Table::Part, key);
        let name = COLORS.choose_multiple(&mut rng, 5).copied().collect::<Vec<_>>().join(" ");
        let mfgr = rng.random_range(1..=5);
        let brand = format!("Brand#{mfgr}{}", rng.random_range(1..=5));
        debug_assert!(self.brands.contains(&brand));
        let ty = self.types.choose(&mut rng).unwrap().clone();
        let size = rng.random_range(1..=50);
        let container = self.containers.choose(&mut rng).unwrap().clone();
        vec![
            key.to_string(),
            name,
            format!("Manufacturer#{mfgr}"),
            brand,
            ty,
            size.to_string(),
            container,
            retail_price(key).to_string(),
            comment(&mut rng, 5, 22),
        ]
    }

    /// Supplier keys stocking a part. Offsets `0, k, 2k, 3k` with `k = S/4`
    /// are distinct modulo `S`, so the pairs are unique.
    pub fn part_suppliers(&self, partkey: i64) -> [i64; SUPPLIERS_PER_PART as usize] {
        let s = self.pop.suppliers as i64;
        let k = s / SUPPLIERS_PER_PART as i64;
        let base = (partkey - 1) + (partkey - 1) / s;
        std::array::from_fn(|i| (base + i as i64 * k).rem_euclid(s) + 1)
    }

    pub fn partsupp_rows(&self, partkey: i64) -> Vec<Vec<String>> {
        let mut rng = self.rng(Table::Partsupp, partkey);
        self.part_suppliers(partkey)
            .into_iter()
            .map(|supp| {
                vec![
                    partkey.to_string(),
                    supp.to_string(),
                    rng.random_range(1..=9_999).to_string(),
                    Decimal2(rng.random_range(100..=100_000)).to_string(),
                    comment(&mut rng, 49, 198),
                ]
            })
            .collect()
    }

    pub fn customer_row(&self, key: i64) -> Vec<String> {
        let mut rng = self.rng(Table::Customer, key);
        let nation = rng.random_range(1..=25i64);
        let addr = address(&mut rng);
        let ph = phone(&mut rng, nation);
        let bal = acctbal(&mut rng);
        vec![
            key.to_string(),
            format!("Customer#{key:09}"),
            addr,
            nation.to_string(),
            ph,
            bal.to_string(),
            SEGMENTS.choose(&mut rng).unwrap().to_string(),
            comment(&mut rng, 29, 116),
        ]
    }

    /// Customer keys that are multiples of three never place orders.
    fn order_customer(&self, rng: &mut impl Rng) -> i64 {
        let c = self.pop.customers as i64;
        let eligible = c - c / 3;
        let j = rng.random_range(0..eligible.max(1));
        j + j / 2 + 1
    }

    /// One ORDERS row and its 1..=7 LINEITEM rows. Keys beyond the base
    /// population produce refresh-set orders.
    pub fn order_with_lineitems(&self, key: i64) -> (Vec<String>, Vec<Vec<String>>) {
        let mut rng = self.rng(Table::Orders, key);
        let custkey = self.order_customer(&mut rng);
        let span = (last_order_date() - start_date()).num_days();
        let orderdate = start_date() + Duration::days(rng.random_range(0..=span));
        let priority = PRIORITIES.choose(&mut rng).unwrap();
        let clerk = format!("Clerk#{:09}", rng.random_range(1..=self.pop.clerks));
        let ocomment = comment(&mut rng, 19, 78);
        let nlines = rng.random_range(1..=MAX_LINES_PER_ORDER);

        let today = current_date();
        let mut total: i64 = 0;
        let (mut all_f, mut all_o) = (true, true);
        let mut lines = Vec::with_capacity(nlines as usize);
        for line in 1..=nlines {
            let partkey = rng.random_range(1..=self.pop.parts as i64);
            let supp = self.part_suppliers(partkey)[rng.random_range(0..SUPPLIERS_PER_PART as usize)];
            let qty: i64 = rng.random_range(1..=50);
            let ext = qty * retail_price(partkey).hundredths();
            let discount: i64 = rng.random_range(0..=10);
            let tax: i64 = rng.random_range(0..=8);
            let ship = orderdate + Duration::days(rng.random_range(1..=121));
            let commit = orderdate + Duration::days(rng.random_range(30..=90));
            let receipt = ship + Duration::days(rng.random_range(1..=30));
            let returnflag = if receipt <= today {
                if rng.random_bool(0.5) { "R" } else { "A" }
            } else {
                "N"
            };
            let linestatus = if ship > today { "O" } else { "F" };
            all_f &= linestatus == "F";
            all_o &= linestatus == "O";
            // ext * (1 + tax) * (1 - discount), rounded half-up to hundredths
            let gross = ext * (100 + tax) * (100 - discount);
            total += (gross + 5_000) / 10_000;
            lines.push(vec![
                key.to_string(),
                partkey.to_string(),
                supp.to_string(),
                line.to_string(),
                Decimal2::from_units(qty).to_string(),
                Decimal2(ext).to_string(),
                Decimal2(discount).to_string(),
                Decimal2(tax).to_string(),
                returnflag.to_string(),
                linestatus.to_string(),
                date_str(ship),
                date_str(commit),
                date_str(receipt),
                SHIP_INSTRUCTIONS.choose(&mut rng).unwrap().to_string(),
                SHIP_MODES.choose(&mut rng).unwrap().to_string(),
                comment(&mut rng, 10, 43),
            ]);
        }
        let status = if all_f {
            "F"
        } else if all_o {
            "O"
        } else {
            "P"
        };
        let order = vec![
            key.to_string(),
            custkey.to_string(),
            status.to_string(),
            Decimal2(total).to_string(),
            date_str(orderdate),
            priority.to_string(),
            clerk,
            "0".to_string(),
            ocomment,
        ];
        (order, lines)
    }
}
