//! The eight-table decision-support schema, cardinality rules and load
//! validation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("scale factor must be a positive finite number, got {0}")]
    InvalidScaleFactor(f64),
    #[error("unknown table name `{0}`")]
    UnknownTable(String),
    #[error("DDL parse error at line {line}: {msg}")]
    Ddl { line: usize, msg: String },
}

/// Published scale factors. Anything else is accepted but flagged non-official.
pub const OFFICIAL_SCALE_FACTORS: [f64; 8] = [1.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0];

/// Database size multiplier; 1.0 is roughly 1 GB of raw data.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub fn new(value: f64) -> Result<Self, SchemaError> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(SchemaError::InvalidScaleFactor(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_official(self) -> bool {
        OFFICIAL_SCALE_FACTORS.contains(&self.0)
    }

    /// `base * sf` rounded to nearest, never below one row.
    pub fn scale(self, base: u64) -> u64 {
        ((base as f64 * self.0).round() as u64).max(1)
    }
}

impl TryFrom<f64> for ScaleFactor {
    type Error = SchemaError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ScaleFactor> for f64 {
    fn from(sf: ScaleFactor) -> f64 {
        sf.0
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for ScaleFactor {
    type Err = SchemaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: f64 = s.trim().parse().map_err(|_| SchemaError::InvalidScaleFactor(f64::NAN))?;
        Self::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Table {
    Region,
    Nation,
    Supplier,
    Part,
    Partsupp,
    Customer,
    Orders,
    Lineitem,
}

impl Table {
    pub const ALL: [Table; 8] = [
        Table::Region,
        Table::Nation,
        Table::Supplier,
        Table::Part,
        Table::Partsupp,
        Table::Customer,
        Table::Orders,
        Table::Lineitem,
    ];

    /// Order in which the load phase ingests tables.
    pub const LOAD_ORDER: [Table; 8] = [
        Table::Lineitem,
        Table::Orders,
        Table::Region,
        Table::Nation,
        Table::Part,
        Table::Supplier,
        Table::Partsupp,
        Table::Customer,
    ];

    /// Lower-case SQL name, also the flat-file stem.
    pub fn name(self) -> &'static str {
        match self {
            Table::Region => "region",
            Table::Nation => "nation",
            Table::Supplier => "supplier",
            Table::Part => "part",
            Table::Partsupp => "partsupp",
            Table::Customer => "customer",
            Table::Orders => "orders",
            Table::Lineitem => "lineitem",
        }
    }

    pub fn upper_name(self) -> &'static str {
        match self {
            Table::Region => "REGION",
            Table::Nation => "NATION",
            Table::Supplier => "SUPPLIER",
            Table::Part => "PART",
            Table::Partsupp => "PARTSUPP",
            Table::Customer => "CUSTOMER",
            Table::Orders => "ORDERS",
            Table::Lineitem => "LINEITEM",
        }
    }

    pub fn spec(self) -> &'static TableSpec {
        &SCHEMA[self as usize]
    }

    pub fn columns(self) -> &'static [ColumnSpec] {
        self.spec().columns
    }

    pub fn column_index(self, column: &str) -> Option<usize> {
        self.columns().iter().position(|c| c.name.eq_ignore_ascii_case(column))
    }

    pub fn cardinality_rule(self) -> CardinalityRule {
        use CardinalityKind::*;
        let (kind, base) = match self {
            Table::Region => (Fixed, 5),
            Table::Nation => (Fixed, 25),
            Table::Supplier => (Linear, 10_000),
            Table::Part => (Linear, 200_000),
            Table::Partsupp => (Linear, 800_000),
            Table::Customer => (Linear, 150_000),
            Table::Orders => (Linear, 1_500_000),
            Table::Lineitem => (Stochastic, 6_000_000),
        };
        CardinalityRule {
            table: self,
            kind,
            base,
            tolerance: if kind == Stochastic { LINEITEM_TOLERANCE } else { 0.0 },
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.upper_name())
    }
}

impl FromStr for Table {
    type Err = SchemaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Table::ALL
            .into_iter()
            .find(|table| table.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| SchemaError::UnknownTable(t.to_string()))
    }
}

/// Semantic column type. Widths are character counts for text columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Integer,
    /// Exact fixed-point with two fractional digits.
    Money,
    Date,
    FixedText(u16),
    VarText(u16),
}

impl ColumnType {
    pub fn sql(self) -> String {
        match self {
            ColumnType::Integer => "integer".into(),
            ColumnType::Money => "decimal(15,2)".into(),
            ColumnType::Date => "date".into(),
            ColumnType::FixedText(w) => format!("char({w})"),
            ColumnType::VarText(w) => format!("varchar({w})"),
        }
    }

    fn parse_sql(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        let width = |prefix: &str| -> Option<u16> {
            s.strip_prefix(prefix)?.strip_suffix(')')?.parse().ok()
        };
        match s.as_str() {
            "integer" => Some(ColumnType::Integer),
            "decimal(15,2)" => Some(ColumnType::Money),
            "date" => Some(ColumnType::Date),
            _ => width("char(")
                .map(ColumnType::FixedText)
                .or_else(|| width("varchar(").map(ColumnType::VarText)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: &'static str,
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForeignKey {
    pub columns: &'static [&'static str],
    pub references: Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSpec {
    pub table: Table,
    pub columns: &'static [ColumnSpec],
    pub primary_key: &'static [&'static str],
    pub foreign_keys: &'static [ForeignKey],
}

const fn col(name: &'static str, ty: ColumnType) -> ColumnSpec {
    ColumnSpec { name, ty }
}

use ColumnType::{Date, FixedText, Integer, Money, VarText};

pub static SCHEMA: [TableSpec; 8] = [
    TableSpec {
        table: Table::Region,
        columns: &[
            col("r_regionkey", Integer),
            col("r_name", FixedText(25)),
            col("r_comment", VarText(152)),
        ],
        primary_key: &["r_regionkey"],
        foreign_keys: &[],
    },
    TableSpec {
        table: Table::Nation,
        columns: &[
            col("n_nationkey", Integer),
            col("n_name", FixedText(25)),
            col("n_regionkey", Integer),
            col("n_comment", VarText(152)),
        ],
        primary_key: &["n_nationkey"],
        foreign_keys: &[ForeignKey { columns: &["n_regionkey"], references: Table::Region }],
    },
    TableSpec {
        table: Table::Supplier,
        columns: &[
            col("s_suppkey", Integer),
            col("s_name", FixedText(25)),
            col("s_address", VarText(40)),
            col("s_nationkey", Integer),
            col("s_phone", FixedText(15)),
            col("s_acctbal", Money),
            col("s_comment", VarText(101)),
        ],
        primary_key: &["s_suppkey"],
        foreign_keys: &[ForeignKey { columns: &["s_nationkey"], references: Table::Nation }],
    },
    TableSpec {
        table: Table::Part,
        columns: &[
            col("p_partkey", Integer),
            col("p_name", VarText(55)),
            col("p_mfgr", FixedText(25)),
            col("p_brand", FixedText(10)),
            col("p_type", VarText(25)),
            col("p_size", Integer),
            col("p_container", FixedText(10)),
            col("p_retailprice", Money),
            col("p_comment", VarText(23)),
        ],
        primary_key: &["p_partkey"],
        foreign_keys: &[],
    },
    TableSpec {
        table: Table::Partsupp,
        columns: &[
            col("ps_partkey", Integer),
            col("ps_suppkey", Integer),
            col("ps_availqty", Integer),
            col("ps_supplycost", Money),
            col("ps_comment", VarText(199)),
        ],
        primary_key: &["ps_partkey", "ps_suppkey"],
        foreign_keys: &[
            ForeignKey { columns: &["ps_partkey"], references: Table::Part },
            ForeignKey { columns: &["ps_suppkey"], references: Table::Supplier },
        ],
    },
    TableSpec {
        table: Table::Customer,
        columns: &[
            col("c_custkey", Integer),
            col("c_name", VarText(25)),
            col("c_address", VarText(40)),
            col("c_nationkey", Integer),
            col("c_phone", FixedText(15)),
            col("c_acctbal", Money),
            col("c_mktsegment", FixedText(10)),
            col("c_comment", VarText(117)),
        ],
        primary_key: &["c_custkey"],
        foreign_keys: &[ForeignKey { columns: &["c_nationkey"], references: Table::Nation }],
    },
    TableSpec {
        table: Table::Orders,
        columns: &[
            col("o_orderkey", Integer),
            col("o_custkey", Integer),
            col("o_orderstatus", FixedText(1)),
            col("o_totalprice", Money),
            col("o_orderdate", Date),
            col("o_orderpriority", FixedText(15)),
            col("o_clerk", FixedText(15)),
            col("o_shippriority", Integer),
            col("o_comment", VarText(79)),
        ],
        primary_key: &["o_orderkey"],
        foreign_keys: &[ForeignKey { columns: &["o_custkey"], references: Table::Customer }],
    },
    TableSpec {
        table: Table::Lineitem,
        columns: &[
            col("l_orderkey", Integer),
            col("l_partkey", Integer),
            col("l_suppkey", Integer),
            col("l_linenumber", Integer),
            col("l_quantity", Money),
            col("l_extendedprice", Money),
            col("l_discount", Money),
            col("l_tax", Money),
            col("l_returnflag", FixedText(1)),
            col("l_linestatus", FixedText(1)),
            col("l_shipdate", Date),
            col("l_commitdate", Date),
            col("l_receiptdate", Date),
            col("l_shipinstruct", FixedText(25)),
            col("l_shipmode", FixedText(10)),
            col("l_comment", VarText(44)),
        ],
        primary_key: &["l_orderkey", "l_linenumber"],
        foreign_keys: &[
            ForeignKey { columns: &["l_orderkey"], references: Table::Orders },
            ForeignKey { columns: &["l_partkey", "l_suppkey"], references: Table::Partsupp },
        ],
    },
];

/// Primary-key constraint names, by table.
pub fn primary_key_name(table: Table) -> &'static str {
    match table {
        Table::Region => "region_pkey",
        Table::Nation => "nation_pkey",
        Table::Supplier => "supp_pkey",
        Table::Part => "part_pkey",
        Table::Partsupp => "ps_pkey",
        Table::Customer => "customer_pkey",
        Table::Orders => "orders_pkey",
        Table::Lineitem => "lineitem_pkey",
    }
}

/// Secondary indexes built after the data load: (name, table, column).
pub const SECONDARY_INDEXES: [(&str, Table, &str); 6] = [
    ("i_o_orderdate", Table::Orders, "o_orderdate"),
    ("i_l_shipdate", Table::Lineitem, "l_shipdate"),
    ("i_l_receiptdate", Table::Lineitem, "l_receiptdate"),
    ("i_l_partkey", Table::Lineitem, "l_partkey"),
    ("i_l_orderkey", Table::Lineitem, "l_orderkey"),
    ("i_n_nationkey", Table::Nation, "n_nationkey"),
];

pub const LINEITEM_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardinalityKind {
    Fixed,
    Linear,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardinalityRule {
    pub table: Table,
    pub kind: CardinalityKind,
    pub base: u64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Expected {
    Exact { rows: u64 },
    /// Inclusive band around `center`.
    Range { lo: u64, center: u64, hi: u64 },
}

impl Expected {
    pub fn contains(self, n: u64) -> bool {
        match self {
            Expected::Exact { rows } => n == rows,
            Expected::Range { lo, hi, .. } => lo <= n && n <= hi,
        }
    }

    /// Signed distance from the admissible set (0 when admitted).
    pub fn delta(self, n: u64) -> i64 {
        let n = n as i64;
        match self {
            Expected::Exact { rows } => n - rows as i64,
            Expected::Range { lo, hi, .. } => {
                if n < lo as i64 {
                    n - lo as i64
                } else if n > hi as i64 {
                    n - hi as i64
                } else {
                    0
                }
            }
        }
    }

    pub fn nominal(self) -> u64 {
        match self {
            Expected::Exact { rows } => rows,
            Expected::Range { center, .. } => center,
        }
    }
}

pub fn expected_cardinality(table: Table, sf: ScaleFactor) -> Expected {
    let rule = table.cardinality_rule();
    match rule.kind {
        CardinalityKind::Fixed => Expected::Exact { rows: rule.base },
        CardinalityKind::Linear => Expected::Exact { rows: sf.scale(rule.base) },
        CardinalityKind::Stochastic => {
            let center = rule.base as f64 * sf.value();
            Expected::Range {
                lo: (center * (1.0 - rule.tolerance)).floor().max(1.0) as u64,
                center: sf.scale(rule.base),
                hi: (center * (1.0 + rule.tolerance)).ceil().max(1.0) as u64,
            }
        }
    }
}

/// Same as [`expected_cardinality`] but keyed by a free-form table name.
pub fn expected_cardinality_by_name(name: &str, sf: ScaleFactor) -> Result<Expected, SchemaError> {
    Ok(expected_cardinality(name.parse()?, sf))
}

/// Renders CREATE TABLE statements, plus primary keys and secondary indexes
/// when `include_constraints` is set.
pub fn emit_ddl(schema: &[&TableSpec], include_constraints: bool) -> String {
    let mut out = create_tables_ddl(schema);
    if include_constraints {
        out.push_str(&constraints_ddl(schema));
    }
    out
}

pub fn create_tables_ddl(schema: &[&TableSpec]) -> String {
    let mut out = String::new();
    for spec in schema {
        out.push_str(&format!("create table {} (\n", spec.table.name()));
        let n = spec.columns.len();
        for (i, c) in spec.columns.iter().enumerate() {
            let sep = if i + 1 < n { "," } else { "" };
            out.push_str(&format!("    {} {} not null{}\n", c.name, c.ty.sql(), sep));
        }
        out.push_str(");\n");
    }
    out
}

pub fn constraints_ddl(schema: &[&TableSpec]) -> String {
    let mut out = String::new();
    for spec in schema {
        out.push_str(&format!(
            "alter table {} add constraint {} primary key ({});\n",
            spec.table.name(),
            primary_key_name(spec.table),
            spec.primary_key.join(", ")
        ));
    }
    for (name, table, column) in SECONDARY_INDEXES {
        if schema.iter().any(|s| s.table == table) {
            out.push_str(&format!("create index {name} on {} ({column});\n", table.name()));
        }
    }
    out
}

/// Table layout recovered from DDL text produced by [`emit_ddl`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTable {
    pub table: Table,
    pub columns: Vec<(String, ColumnType)>,
    pub primary_key: Vec<String>,
}

impl ParsedTable {
    pub fn matches(&self, spec: &TableSpec) -> bool {
        self.table == spec.table
            && self.columns.len() == spec.columns.len()
            && self.columns.iter().zip(spec.columns).all(|((n, t), c)| n == c.name && *t == c.ty)
            && self.primary_key.iter().map(String::as_str).eq(spec.primary_key.iter().copied())
    }
}

/// Parses the DDL subset this module emits. Not a general SQL parser.
pub fn parse_ddl(text: &str) -> Result<Vec<ParsedTable>, SchemaError> {
    let mut tables: Vec<ParsedTable> = Vec::new();
    let mut current: Option<ParsedTable> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: &str| SchemaError::Ddl { line: line_no, msg: msg.to_string() };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("create table ") {
            let name = rest.trim_end_matches('(').trim();
            current = Some(ParsedTable {
                table: name.parse()?,
                columns: Vec::new(),
                primary_key: Vec::new(),
            });
        } else if line == ");" {
            tables.push(current.take().ok_or_else(|| err("unbalanced `);`"))?);
        } else if let Some(cur) = current.as_mut() {
            let body = line.trim_end_matches(',');
            let body = body.strip_suffix(" not null").ok_or_else(|| err("expected `not null`"))?;
            let (name, ty) = body.split_once(' ').ok_or_else(|| err("expected `<name> <type>`"))?;
            let ty = ColumnType::parse_sql(ty).ok_or_else(|| err("unknown column type"))?;
            cur.columns.push((name.to_string(), ty));
        } else if let Some(rest) = line.strip_prefix("alter table ") {
            let (name, rest) = rest.split_once(' ').ok_or_else(|| err("malformed alter"))?;
            let table: Table = name.parse()?;
            let cols = rest
                .split_once("primary key (")
                .and_then(|(_, c)| c.strip_suffix(");"))
                .ok_or_else(|| err("expected primary key list"))?;
            let t = tables
                .iter_mut()
                .find(|t| t.table == table)
                .ok_or_else(|| err("primary key on undeclared table"))?;
            t.primary_key = cols.split(',').map(|c| c.trim().to_string()).collect();
        } else if line.starts_with("create index ") {
            // secondary indexes are implied by the table set
        } else {
            return Err(err("unexpected statement"));
        }
    }
    if current.is_some() {
        return Err(SchemaError::Ddl { line: text.lines().count(), msg: "unterminated create table".into() });
    }
    Ok(tables)
}

pub fn full_schema() -> Vec<&'static TableSpec> {
    SCHEMA.iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableValidation {
    pub table: Table,
    pub observed: Option<u64>,
    pub expected: Expected,
    pub delta: Option<i64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub sf: ScaleFactor,
    pub tables: Vec<TableValidation>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &TableValidation> {
        self.tables.iter().filter(|t| !t.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tables {
            let obs = t.observed.map_or_else(|| "missing".to_string(), |n| n.to_string());
            let delta = t.delta.map_or_else(String::new, |d| format!(" (delta {d:+})"));
            writeln!(
                f,
                "{:<9} {:>12} expected {:>12}{} {}",
                t.table.upper_name(),
                obs,
                t.expected.nominal(),
                delta,
                if t.pass { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "load validation: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Compares observed row counts with the cardinality rules. A missing table
/// fails the report rather than erroring.
pub fn validate_load(observed: &BTreeMap<Table, u64>, sf: ScaleFactor) -> ValidationReport {
    let tables: Vec<TableValidation> = Table::ALL
        .into_iter()
        .map(|table| {
            let expected = expected_cardinality(table, sf);
            match observed.get(&table) {
                Some(&n) => TableValidation {
                    table,
                    observed: Some(n),
                    expected,
                    delta: Some(expected.delta(n)),
                    pass: expected.contains(n),
                },
                None => TableValidation { table, observed: None, expected, delta: None, pass: false },
            }
        })
        .collect();
    let pass = tables.iter().all(|t| t.pass);
    ValidationReport { sf, tables, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(v: f64) -> ScaleFactor {
        ScaleFactor::new(v).unwrap()
    }

    #[test]
    fn scale_factor_rejects_nonpositive() {
        assert!(ScaleFactor::new(0.0).is_err());
        assert!(ScaleFactor::new(-1.0).is_err());
        assert!(ScaleFactor::new(f64::NAN).is_err());
        assert!(sf(100.0).is_official());
        assert!(!sf(0.01).is_official());
    }

    #[test]
    fn cardinalities_at_sf100() {
        assert_eq!(expected_cardinality(Table::Region, sf(100.0)), Expected::Exact { rows: 5 });
        assert_eq!(expected_cardinality(Table::Supplier, sf(100.0)), Expected::Exact { rows: 1_000_000 });
        assert_eq!(expected_cardinality(Table::Orders, sf(1.0)), Expected::Exact { rows: 1_500_000 });
        assert!(expected_cardinality(Table::Lineitem, sf(100.0)).contains(600_038_000));
        assert!(expected_cardinality_by_name("bogus", sf(1.0)).is_err());
    }

    #[test]
    fn tiny_scale_keeps_one_row() {
        assert_eq!(expected_cardinality(Table::Supplier, sf(1e-9)), Expected::Exact { rows: 1 });
    }

    #[test]
    fn region_only_ddl() {
        let ddl = emit_ddl(&[Table::Region.spec()], false);
        assert_eq!(ddl.matches("create table").count(), 1);
        assert!(ddl.contains("r_regionkey") && ddl.contains("r_name") && ddl.contains("r_comment"));
        assert_eq!(ddl.lines().filter(|l| l.ends_with("not null,") || l.ends_with("not null")).count(), 3);
    }

    #[test]
    fn full_ddl_counts_and_determinism() {
        let ddl = emit_ddl(&full_schema(), true);
        assert_eq!(ddl.matches("create table").count(), 8);
        assert_eq!(ddl.matches("primary key").count(), 8);
        assert_eq!(ddl.matches("create index").count(), 6);
        for (name, _, _) in SECONDARY_INDEXES {
            assert!(ddl.contains(name));
        }
        assert_eq!(ddl, emit_ddl(&full_schema(), true));
    }

    #[test]
    fn ddl_round_trips() {
        let parsed = parse_ddl(&emit_ddl(&full_schema(), true)).unwrap();
        assert_eq!(parsed.len(), 8);
        for (p, spec) in parsed.iter().zip(SCHEMA.iter()) {
            assert!(p.matches(spec), "{:?}", p.table);
        }
    }

    #[test]
    fn ddl_parse_error_has_line() {
        let err = parse_ddl("create table region (\n    r_regionkey integer\n);").unwrap_err();
        assert!(matches!(err, SchemaError::Ddl { line: 2, .. }));
    }

    fn exact_counts(s: ScaleFactor) -> BTreeMap<Table, u64> {
        Table::ALL.into_iter().map(|t| (t, expected_cardinality(t, s).nominal())).collect()
    }

    #[test]
    fn validate_sf100_from_table_of_sizes() {
        let mut counts = exact_counts(sf(100.0));
        counts.insert(Table::Lineitem, 600_038_000);
        assert!(validate_load(&counts, sf(100.0)).pass);
    }

    #[test]
    fn validate_region_short_by_one() {
        let mut counts = exact_counts(sf(1.0));
        counts.insert(Table::Region, 4);
        let report = validate_load(&counts, sf(1.0));
        assert!(!report.pass);
        let region = report.failures().next().unwrap();
        assert_eq!(region.table, Table::Region);
        assert_eq!(region.delta, Some(-1));
    }

    #[test]
    fn validate_lineitem_band_edges() {
        let s = sf(0.01);
        let Expected::Range { lo, hi, .. } = expected_cardinality(Table::Lineitem, s) else { panic!() };
        // ±5% of 60 000, evaluated by hand.
        assert_eq!((lo, hi), (57_000, 63_000));
        for (n, ok) in [(lo, true), (hi, true), (lo - 1, false), (hi + 1, false)] {
            let mut counts = exact_counts(s);
            counts.insert(Table::Lineitem, n);
            assert_eq!(validate_load(&counts, s).pass, ok, "lineitem={n}");
        }
    }

    #[test]
    fn validate_missing_table_is_report_failure() {
        let mut counts = exact_counts(sf(1.0));
        counts.remove(&Table::Nation);
        let report = validate_load(&counts, sf(1.0));
        assert!(!report.pass);
        assert_eq!(report.failures().next().unwrap().observed, None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_in_sf(a in 1e-4f64..2000.0, b in 1e-4f64..2000.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                for t in Table::ALL {
                    let el = expected_cardinality(t, sf(lo));
                    let eh = expected_cardinality(t, sf(hi));
                    prop_assert!(el.nominal() <= eh.nominal());
                    if let (Expected::Range { lo: l1, hi: h1, .. }, Expected::Range { lo: l2, hi: h2, .. }) = (el, eh) {
                        prop_assert!(l1 <= l2 && h1 <= h2);
                    }
                }
            }

            #[test]
            fn linear_rule_exact(k in 1u32..10_000) {
                let s = sf(k as f64);
                prop_assert_eq!(expected_cardinality(Table::Orders, s), Expected::Exact { rows: 1_500_000 * k as u64 });
                prop_assert_eq!(expected_cardinality(Table::Customer, s), Expected::Exact { rows: 150_000 * k as u64 });
            }
        }
    }
}
