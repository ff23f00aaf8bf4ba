//! Query templates, per-stream parameter substitution and stream scripts.
//!
//! Stream 0 carries a fixed parameter table, so its 22 instances are the
//! classic reference texts. Every other stream draws its parameters
//! uniformly from the generator's vocabularies with a seeded ChaCha8 stream.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{self, splitmix64, value_domains};

/// Seed announced at the top of the reference stream.
pub const DEFAULT_SEED: u64 = 1_782_942_327;

pub const QUERY_COUNT: u8 = 22;

/// Stream 0 execution order.
pub const STREAM0_ORDER: [u8; 22] = [14, 2, 9, 20, 6, 17, 18, 8, 21, 13, 3, 22, 16, 4, 11, 15, 1, 10, 19, 5, 7, 12];

pub const DSS_CONFIG: &str = "DSS_CONFIG";
pub const DSS_DIST: &str = "DSS_DIST";
pub const DSS_QUERY: &str = "DSS_QUERY";

pub const DEFAULT_INIT: &str = "\\timing\n\\! echo \"---Inicio teste---\" >> log.txt\n\\! echo |date +%H:%M:%S >> log.txt\n";
pub const DEFAULT_COMPLETE: &str = "\\! echo \"----Fim teste----\" >> log.txt\n\\! echo |date +%H:%M:%S >> log.txt\n";

const BODIES: [&str; 22] = [
    include_str!("../queries/q1.sql"),
    include_str!("../queries/q2.sql"),
    include_str!("../queries/q3.sql"),
    include_str!("../queries/q4.sql"),
    include_str!("../queries/q5.sql"),
    include_str!("../queries/q6.sql"),
    include_str!("../queries/q7.sql"),
    include_str!("../queries/q8.sql"),
    include_str!("../queries/q9.sql"),
    include_str!("../queries/q10.sql"),
    include_str!("../queries/q11.sql"),
    include_str!("../queries/q12.sql"),
    include_str!("../queries/q13.sql"),
    include_str!("../queries/q14.sql"),
    include_str!("../queries/q15.sql"),
    include_str!("../queries/q16.sql"),
    include_str!("../queries/q17.sql"),
    include_str!("../queries/q18.sql"),
    include_str!("../queries/q19.sql"),
    include_str!("../queries/q20.sql"),
    include_str!("../queries/q21.sql"),
    include_str!("../queries/q22.sql"),
];

/// Q19 written the long way: join and shared selections repeated inside
/// every disjunct. This is the input the rewriter factors.
pub const Q19_ORIGINAL: &str = include_str!("../queries/q19_original.sql");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryGenError {
    #[error("no query template {0}; ids run 1..=22")]
    UnknownTemplate(u8),
    #[error("template {id}: placeholder [{name}] has an empty domain")]
    EmptyDomain { id: u8, name: String },
    #[error("template {id}: placeholders in body {body:?} do not match parameter specs {specs:?}")]
    PlaceholderMismatch { id: u8, body: Vec<String>, specs: Vec<String> },
    #[error("template {id}: placeholder [{name}] left unsubstituted")]
    Unsubstituted { id: u8, name: String },
    #[error("schedule for stream {stream} needs query {id} but no instance was supplied")]
    MissingInstance { stream: u32, id: u8 },
    #[error("{what} directory {path} does not exist")]
    MissingDir { what: &'static str, path: PathBuf },
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

/// How the values of one group of placeholders are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Integer in `lo..=hi`.
    IntRange { lo: i64, hi: i64 },
    /// Each placeholder independently picks one entry.
    Choice(Vec<String>),
    /// The placeholders take pairwise distinct entries.
    Distinct(Vec<String>),
    /// Date in `first..=last`.
    Day { first: NaiveDate, last: NaiveDate },
    /// First day of a month between the two `(year, month)` bounds.
    MonthStart { first: (i32, u32), last: (i32, u32) },
    /// January 1st of a year in `first..=last`.
    YearStart { first: i32, last: i32 },
    /// Decimal with two places, `lo..=hi` hundredths.
    Hundredths { lo: i64, hi: i64 },
    Constant(String),
    /// `[NATION]` plus the `[REGION]` that nation belongs to.
    NationWithRegion,
    /// The stream number itself.
    StreamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub names: Vec<&'static str>,
    pub rule: Rule,
}

impl ParamSpec {
    fn new(names: &[&'static str], rule: Rule) -> Self {
        ParamSpec { names: names.to_vec(), rule }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryTemplate {
    pub id: u8,
    pub body: String,
    pub param_specs: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryInstance {
    pub template_id: u8,
    pub stream_id: u32,
    pub sql: String,
    /// Substituted values in placeholder order, as written to the `.par` file.
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSchedule {
    pub stream_id: u32,
    pub order: Vec<u8>,
}

/// The two refresh functions that bracket the power test and run
/// alongside the throughput streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RefreshFunction {
    Rf1,
    Rf2,
}

impl RefreshFunction {
    pub fn label(self) -> &'static str {
        match self {
            RefreshFunction::Rf1 => "RF1",
            RefreshFunction::Rf2 => "RF2",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            RefreshFunction::Rf1 => "insert new ORDERS rows with 1 to 7 LINEITEM rows each",
            RefreshFunction::Rf2 => "delete ORDERS rows and their LINEITEM rows by order key",
        }
    }
}

fn strings<S: ToString>(items: impl IntoIterator<Item = S>) -> Vec<String> {
    items.into_iter().map(|s| s.to_string()).collect()
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

fn param_specs(id: u8) -> Vec<ParamSpec> {
    use Rule::*;
    let d = value_domains();
    let years = YearStart { first: 1993, last: 1997 };
    let p = ParamSpec::new;
    match id {
        1 => vec![p(&["DELTA"], IntRange { lo: 60, hi: 120 })],
        2 => vec![
            p(&["SIZE"], IntRange { lo: 1, hi: 50 }),
            p(&["TYPE"], Choice(strings(datagen::TYPE_MATERIAL))),
            p(&["REGION"], Choice(strings(d.regions))),
        ],
        3 => vec![
            p(&["SEGMENT"], Choice(strings(d.segments))),
            p(&["DATE"], Day { first: date(1995, 3, 1), last: date(1995, 3, 31) }),
        ],
        4 => vec![p(&["DATE"], MonthStart { first: (1993, 1), last: (1997, 10) })],
        5 => vec![p(&["REGION"], Choice(strings(d.regions))), p(&["DATE"], years)],
        6 => vec![
            p(&["DATE"], years),
            p(&["DISCOUNT"], Hundredths { lo: 2, hi: 9 }),
            p(&["QUANTITY"], IntRange { lo: 24, hi: 25 }),
        ],
        7 => vec![p(&["NATION1", "NATION2"], Distinct(strings(d.nations)))],
        8 => vec![p(&["NATION", "REGION"], NationWithRegion), p(&["TYPE"], Choice(d.part_types))],
        9 => vec![p(&["COLOR"], Choice(strings(d.colors)))],
        10 => vec![p(&["DATE"], MonthStart { first: (1993, 2), last: (1995, 1) })],
        11 => vec![
            p(&["NATION"], Choice(strings(d.nations))),
            p(&["FRACTION"], Constant("0.0001000000".into())),
        ],
        12 => vec![p(&["SHIPMODE1", "SHIPMODE2"], Distinct(strings(d.ship_modes))), p(&["DATE"], years)],
        13 => vec![
            p(&["WORD1"], Choice(strings(["special", "pending", "unusual", "express"]))),
            p(&["WORD2"], Choice(strings(["packages", "requests", "accounts", "deposits"]))),
        ],
        14 => vec![p(&["DATE"], MonthStart { first: (1993, 1), last: (1997, 12) })],
        15 => vec![p(&["STREAM"], StreamId), p(&["DATE"], MonthStart { first: (1993, 1), last: (1997, 10) })],
        16 => {
            let types = datagen::TYPE_SIZE
                .iter()
                .flat_map(|s| datagen::TYPE_FINISH.iter().map(move |f| format!("{s} {f}")));
            vec![
                p(&["BRAND"], Choice(d.brands)),
                p(&["TYPE"], Choice(types.collect())),
                p(
                    &["SIZE1", "SIZE2", "SIZE3", "SIZE4", "SIZE5", "SIZE6", "SIZE7", "SIZE8"],
                    Distinct(strings(1..=50)),
                ),
            ]
        }
        17 => vec![p(&["BRAND"], Choice(d.brands)), p(&["CONTAINER"], Choice(d.containers))],
        18 => vec![p(&["QUANTITY"], IntRange { lo: 312, hi: 315 })],
        19 => vec![
            p(&["BRAND1", "BRAND2", "BRAND3"], Choice(d.brands)),
            p(&["QUANTITY1"], IntRange { lo: 1, hi: 10 }),
            p(&["QUANTITY2"], IntRange { lo: 10, hi: 20 }),
            p(&["QUANTITY3"], IntRange { lo: 20, hi: 30 }),
        ],
        20 => vec![
            p(&["COLOR"], Choice(strings(d.colors))),
            p(&["DATE"], years),
            p(&["NATION"], Choice(strings(d.nations))),
        ],
        21 => vec![p(&["NATION"], Choice(strings(d.nations)))],
        22 => {
            let codes = (1..=25).map(datagen::country_code);
            vec![p(&["I1", "I2", "I3", "I4", "I5", "I6", "I7"], Distinct(strings(codes)))]
        }
        _ => Vec::new(),
    }
}

/// Parameters of the reference stream.
fn stream0_params(id: u8) -> &'static [(&'static str, &'static str)] {
    match id {
        1 => &[("DELTA", "64")],
        2 => &[("SIZE", "23"), ("TYPE", "STEEL"), ("REGION", "AFRICA")],
        3 => &[("SEGMENT", "FURNITURE"), ("DATE", "1995-03-01")],
        4 => &[("DATE", "1993-03-01")],
        5 => &[("REGION", "AFRICA"), ("DATE", "1995-01-01")],
        6 => &[("DATE", "1995-01-01"), ("DISCOUNT", "0.02"), ("QUANTITY", "25")],
        7 => &[("NATION1", "ALGERIA"), ("NATION2", "JORDAN")],
        8 => &[("NATION", "JORDAN"), ("REGION", "MIDDLE EAST"), ("TYPE", "PROMO PLATED BRASS")],
        9 => &[("COLOR", "tan")],
        10 => &[("DATE", "1993-12-01")],
        11 => &[("NATION", "BRAZIL"), ("FRACTION", "0.0001000000")],
        12 => &[("SHIPMODE1", "FOB"), ("SHIPMODE2", "AIR"), ("DATE", "1997-01-01")],
        13 => &[("WORD1", "special"), ("WORD2", "deposits")],
        14 => &[("DATE", "1998-01-01")],
        15 => &[("STREAM", "0"), ("DATE", "1994-08-01")],
        16 => &[
            ("BRAND", "Brand#41"),
            ("TYPE", "LARGE BURNISHED"),
            ("SIZE1", "26"),
            ("SIZE2", "48"),
            ("SIZE3", "45"),
            ("SIZE4", "7"),
            ("SIZE5", "41"),
            ("SIZE6", "46"),
            ("SIZE7", "31"),
            ("SIZE8", "17"),
        ],
        17 => &[("BRAND", "Brand#13"), ("CONTAINER", "MED PACK")],
        18 => &[("QUANTITY", "314")],
        19 => &[
            ("BRAND1", "Brand#34"),
            ("BRAND2", "Brand#51"),
            ("BRAND3", "Brand#14"),
            ("QUANTITY1", "9"),
            ("QUANTITY2", "13"),
            ("QUANTITY3", "23"),
        ],
        20 => &[("COLOR", "royal"), ("DATE", "1997-01-01"), ("NATION", "EGYPT")],
        21 => &[("NATION", "RUSSIA")],
        22 => &[("I1", "11"), ("I2", "14"), ("I3", "25"), ("I4", "15"), ("I5", "21"), ("I6", "17"), ("I7", "20")],
        _ => &[],
    }
}

/// Bracketed upper-case names appearing in `body`, in first-appearance order.
pub fn placeholders(body: &str) -> Vec<String> {
    let mut seen = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find('[') {
        let tail = &rest[start + 1..];
        match tail.find(']') {
            Some(end) => {
                let name = &tail[..end];
                let valid = !name.is_empty()
                    && name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
                    && name.starts_with(|c: char| c.is_ascii_uppercase());
                if valid && !seen.iter().any(|s| s == name) {
                    seen.push(name.to_string());
                }
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    seen
}

impl QueryTemplate {
    /// Built-in template `id` (1..=22).
    pub fn get(id: u8) -> Result<Self, QueryGenError> {
        if !(1..=QUERY_COUNT).contains(&id) {
            return Err(QueryGenError::UnknownTemplate(id));
        }
        Self::with_body(id, BODIES[id as usize - 1].to_string())
    }

    /// Template `id` with a caller-supplied body; the body must use exactly
    /// the built-in placeholders.
    pub fn with_body(id: u8, body: String) -> Result<Self, QueryGenError> {
        if !(1..=QUERY_COUNT).contains(&id) {
            return Err(QueryGenError::UnknownTemplate(id));
        }
        let t = QueryTemplate { id, body, param_specs: param_specs(id) };
        t.validate()?;
        Ok(t)
    }

    /// The long-form Q19, sharing Q19's parameters.
    pub fn q19_original() -> Self {
        QueryTemplate { id: 19, body: Q19_ORIGINAL.to_string(), param_specs: param_specs(19) }
    }

    pub fn validate(&self) -> Result<(), QueryGenError> {
        let body: BTreeSet<String> = placeholders(&self.body).into_iter().collect();
        let specs: BTreeSet<String> =
            self.param_specs.iter().flat_map(|s| s.names.iter().map(|n| n.to_string())).collect();
        if body != specs {
            return Err(QueryGenError::PlaceholderMismatch {
                id: self.id,
                body: body.into_iter().collect(),
                specs: specs.into_iter().collect(),
            });
        }
        Ok(())
    }
}

/// All 22 built-in templates in id order.
pub fn templates() -> Vec<QueryTemplate> {
    (1..=QUERY_COUNT).map(|id| QueryTemplate::get(id).expect("built-in template")).collect()
}

/// Templates read from `<dir>/<id>.sql`.
pub fn templates_from_dir(dir: &Path) -> Result<Vec<QueryTemplate>, QueryGenError> {
    if !dir.is_dir() {
        return Err(QueryGenError::MissingDir { what: "query template", path: dir.to_path_buf() });
    }
    (1..=QUERY_COUNT)
        .map(|id| {
            let path = dir.join(format!("{id}.sql"));
            let body = std::fs::read_to_string(&path)
                .map_err(|e| QueryGenError::Io { path: path.clone(), msg: e.to_string() })?;
            QueryTemplate::with_body(id, body)
        })
        .collect()
}

fn stream_rng(seed: u64, stream_id: u32, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed ^ splitmix64(stream_id as u64)) ^ salt))
}

/// Query order of a stream: the reference order for stream 0, a seeded
/// Fisher–Yates shuffle otherwise.
pub fn stream_order(stream_id: u32, seed: u64) -> StreamSchedule {
    if stream_id == 0 {
        return StreamSchedule { stream_id, order: STREAM0_ORDER.to_vec() };
    }
    let mut order: Vec<u8> = (1..=QUERY_COUNT).collect();
    order.shuffle(&mut stream_rng(seed, stream_id, 0));
    StreamSchedule { stream_id, order }
}

fn month_index(y: i32, m: u32) -> i64 {
    y as i64 * 12 + m as i64 - 1
}

fn draw(rule: &Rule, names: &[&'static str], id: u8, stream_id: u32, rng: &mut ChaCha8Rng) -> Result<Vec<String>, QueryGenError> {
    let empty = || QueryGenError::EmptyDomain { id, name: names.first().copied().unwrap_or("").to_string() };
    let per_name = |rng: &mut ChaCha8Rng, f: &dyn Fn(&mut ChaCha8Rng) -> String| -> Vec<String> {
        names.iter().map(|_| f(rng)).collect()
    };
    Ok(match rule {
        Rule::IntRange { lo, hi } => {
            if lo > hi {
                return Err(empty());
            }
            per_name(rng, &|r| r.random_range(*lo..=*hi).to_string())
        }
        Rule::Choice(values) => {
            if values.is_empty() {
                return Err(empty());
            }
            per_name(rng, &|r| values.choose(r).expect("non-empty").clone())
        }
        Rule::Distinct(values) => {
            if values.len() < names.len() {
                return Err(empty());
            }
            values.choose_multiple(rng, names.len()).cloned().collect()
        }
        Rule::Day { first, last } => {
            let span = (*last - *first).num_days();
            if span < 0 {
                return Err(empty());
            }
            per_name(rng, &|r| (*first + chrono::Duration::days(r.random_range(0..=span))).to_string())
        }
        Rule::MonthStart { first, last } => {
            let (a, b) = (month_index(first.0, first.1), month_index(last.0, last.1));
            if a > b {
                return Err(empty());
            }
            per_name(rng, &|r| {
                let m = r.random_range(a..=b);
                date((m / 12) as i32, (m % 12) as u32 + 1, 1).to_string()
            })
        }
        Rule::YearStart { first, last } => {
            if first > last {
                return Err(empty());
            }
            per_name(rng, &|r| date(r.random_range(*first..=*last), 1, 1).to_string())
        }
        Rule::Hundredths { lo, hi } => {
            if lo > hi {
                return Err(empty());
            }
            per_name(rng, &|r| crate::flatfile::Decimal2(r.random_range(*lo..=*hi)).to_string())
        }
        Rule::Constant(v) => per_name(rng, &|_| v.clone()),
        Rule::NationWithRegion => {
            let (nation, region) = datagen::NATIONS.choose(rng).expect("nations");
            vec![nation.to_string(), datagen::REGIONS[*region].to_string()]
        }
        Rule::StreamId => per_name(rng, &|_| stream_id.to_string()),
    })
}

fn fill(template: &QueryTemplate, stream_id: u32, params: Vec<(String, String)>) -> Result<QueryInstance, QueryGenError> {
    let mut sql = template.body.clone();
    for (name, value) in &params {
        sql = sql.replace(&format!("[{name}]"), value);
    }
    if let Some(name) = placeholders(&sql).into_iter().next() {
        return Err(QueryGenError::Unsubstituted { id: template.id, name });
    }
    Ok(QueryInstance { template_id: template.id, stream_id, sql, params })
}

/// Instantiates `template` for `stream_id`. Stream 0 uses the reference
/// parameter table regardless of `seed`.
pub fn substitute_params(template: &QueryTemplate, stream_id: u32, seed: u64) -> Result<QueryInstance, QueryGenError> {
    template.validate()?;
    let params = if stream_id == 0 {
        stream0_params(template.id).iter().map(|(n, v)| (n.to_string(), v.to_string())).collect()
    } else {
        let mut rng = stream_rng(seed, stream_id, template.id as u64);
        let mut params = Vec::new();
        for spec in &template.param_specs {
            let values = draw(&spec.rule, &spec.names, template.id, stream_id, &mut rng)?;
            params.extend(spec.names.iter().map(|n| n.to_string()).zip(values));
        }
        params
    };
    fill(template, stream_id, params)
}

/// Every built-in query instantiated for one stream, in template id order.
pub fn stream_instances(stream_id: u32, seed: u64) -> Result<Vec<QueryInstance>, QueryGenError> {
    templates().iter().map(|t| substitute_params(t, stream_id, seed)).collect()
}

/// Script: `init`, then one marker-wrapped block per scheduled query, then
/// `complete`.
pub fn render_stream(
    schedule: &StreamSchedule,
    instances: &[QueryInstance],
    init: &str,
    complete: &str,
) -> Result<String, QueryGenError> {
    let mut out = String::from(init);
    for &id in &schedule.order {
        let inst = instances
            .iter()
            .find(|i| i.template_id == id)
            .ok_or(QueryGenError::MissingInstance { stream: schedule.stream_id, id })?;
        let _ = writeln!(out, "\\! echo \"---q{id} ini---\" >> log.txt");
        let _ = writeln!(out, "\\! echo |date \"+%H-%M-%S\" >> log.txt");
        out.push('\n');
        out.push_str(inst.sql.trim_end());
        out.push('\n');
        let _ = writeln!(out, "\\! echo \"---q{id} fim---\" >> log.txt");
    }
    out.push_str(complete);
    Ok(out)
}

/// Parameter sidecar: one line per query in schedule order,
/// `q<N> NAME=value NAME=value ...`.
pub fn render_par(schedule: &StreamSchedule, instances: &[QueryInstance]) -> Result<String, QueryGenError> {
    let mut out = String::new();
    for &id in &schedule.order {
        let inst = instances
            .iter()
            .find(|i| i.template_id == id)
            .ok_or(QueryGenError::MissingInstance { stream: schedule.stream_id, id })?;
        let _ = write!(out, "q{id}");
        for (n, v) in &inst.params {
            let _ = write!(out, " {n}={v}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// `(stream<NN>.sql, stream<NN>.par)`.
pub fn stream_file_names(stream_id: u32) -> (String, String) {
    (format!("stream{stream_id:02}.sql"), format!("stream{stream_id:02}.par"))
}

/// Writes the script and sidecar of one stream into `dir`.
pub fn write_stream(dir: &Path, stream_id: u32, seed: u64, init: &str, complete: &str) -> Result<(PathBuf, PathBuf), QueryGenError> {
    let schedule = stream_order(stream_id, seed);
    let instances = stream_instances(stream_id, seed)?;
    let (sql_name, par_name) = stream_file_names(stream_id);
    let io = |path: &Path, e: std::io::Error| QueryGenError::Io { path: path.to_path_buf(), msg: e.to_string() };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let (sql_path, par_path) = (dir.join(sql_name), dir.join(par_name));
    std::fs::write(&sql_path, render_stream(&schedule, &instances, init, complete)?).map_err(|e| io(&sql_path, e))?;
    std::fs::write(&par_path, render_par(&schedule, &instances)?).map_err(|e| io(&par_path, e))?;
    Ok((sql_path, par_path))
}

/// Explicit overrides for the four tool paths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnvOverrides {
    pub config_dir: Option<PathBuf>,
    pub dist_file: Option<PathBuf>,
    pub data_path: Option<PathBuf>,
    pub query_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvPaths {
    pub config_dir: PathBuf,
    pub dist_file: PathBuf,
    pub data_path: PathBuf,
    pub query_dir: PathBuf,
}

impl Default for EnvPaths {
    fn default() -> Self {
        EnvPaths {
            config_dir: PathBuf::from("."),
            dist_file: PathBuf::from("dists.dss"),
            data_path: PathBuf::from("."),
            query_dir: PathBuf::from("queries"),
        }
    }
}

impl EnvPaths {
    pub fn require_dir(&self, what: &'static str, path: &Path) -> Result<(), QueryGenError> {
        if path.is_dir() {
            Ok(())
        } else {
            Err(QueryGenError::MissingDir { what, path: path.to_path_buf() })
        }
    }

    pub fn query_dir_checked(&self) -> Result<&Path, QueryGenError> {
        self.require_dir("query template", &self.query_dir)?;
        Ok(&self.query_dir)
    }

    pub fn data_path_checked(&self) -> Result<&Path, QueryGenError> {
        self.require_dir("data", &self.data_path)?;
        Ok(&self.data_path)
    }
}

/// Argument, then environment (through `lookup`), then the default.
pub fn resolve_env(overrides: &EnvOverrides, lookup: impl Fn(&str) -> Option<String>) -> EnvPaths {
    let d = EnvPaths::default();
    let pick = |arg: &Option<PathBuf>, var: &str, default: PathBuf| {
        arg.clone().or_else(|| lookup(var).filter(|v| !v.is_empty()).map(PathBuf::from)).unwrap_or(default)
    };
    EnvPaths {
        config_dir: pick(&overrides.config_dir, DSS_CONFIG, d.config_dir),
        dist_file: pick(&overrides.dist_file, DSS_DIST, d.dist_file),
        data_path: pick(&overrides.data_path, datagen::DSS_PATH, d.data_path),
        query_dir: pick(&overrides.query_dir, DSS_QUERY, d.query_dir),
    }
}

/// [`resolve_env`] against the process environment.
pub fn resolve_env_from_process(overrides: &EnvOverrides) -> EnvPaths {
    resolve_env(overrides, |k| std::env::var(k).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn every_template_validates() {
        for t in templates() {
            t.validate().unwrap();
        }
        QueryTemplate::q19_original().validate().unwrap();
        assert_eq!(QueryTemplate::get(23), Err(QueryGenError::UnknownTemplate(23)));
    }

    #[test]
    fn placeholder_scan() {
        assert_eq!(placeholders("a = '[X1]' and [Y] [X1] [lower] [] [1A]"), vec!["X1", "Y"]);
    }

    #[test]
    fn stream0_literals() {
        let q6 = substitute_params(&QueryTemplate::get(6).unwrap(), 0, 1).unwrap();
        assert!(q6.sql.contains("date '1995-01-01'"));
        assert!(q6.sql.contains("0.02 - 0.01 and 0.02 + 0.01"));
        assert!(q6.sql.contains("l_quantity < 25"));
        let q1 = substitute_params(&QueryTemplate::get(1).unwrap(), 0, 1).unwrap();
        assert!(q1.sql.contains("interval '64 day'"));
    }

    #[test]
    fn orders_are_permutations() {
        for s in 0..20 {
            let mut o = stream_order(s, DEFAULT_SEED).order;
            o.sort_unstable();
            assert_eq!(o, (1..=22).collect::<Vec<u8>>());
        }
        assert_eq!(stream_order(3, 9), stream_order(3, 9));
        assert_ne!(stream_order(1, 9).order, stream_order(2, 9).order);
    }

    #[test]
    fn drawn_params_stay_in_domain() {
        for stream in 1..=30 {
            let qs = stream_instances(stream, 77).unwrap();
            let get = |id: u8, n: &str| {
                qs[id as usize - 1].params.iter().find(|(k, _)| k == n).map(|(_, v)| v.clone()).unwrap()
            };
            let delta: i64 = get(1, "DELTA").parse().unwrap();
            assert!((60..=120).contains(&delta));
            assert_ne!(get(7, "NATION1"), get(7, "NATION2"));
            assert_eq!(datagen::region_of_nation(&get(8, "NATION")).unwrap(), get(8, "REGION"));
            let sizes: BTreeSet<String> = (1..=8).map(|i| get(16, &format!("SIZE{i}"))).collect();
            assert_eq!(sizes.len(), 8);
            let q3 = get(19, "QUANTITY3").parse::<i64>().unwrap();
            assert!((20..=30).contains(&q3));
            assert_eq!(get(15, "STREAM"), stream.to_string());
            assert!(qs[14].sql.contains(&format!("revenue{stream}")));
            let disc = get(6, "DISCOUNT");
            assert!(disc.starts_with("0.0"), "{disc}");
        }
    }

    #[test]
    fn empty_domain_reported() {
        let mut t = QueryTemplate::get(9).unwrap();
        t.param_specs[0].rule = Rule::Choice(Vec::new());
        assert!(matches!(substitute_params(&t, 1, 1), Err(QueryGenError::EmptyDomain { id: 9, .. })));
    }

    #[test]
    fn mismatched_body_rejected() {
        let err = QueryTemplate::with_body(9, "select 1 where a = '[NOPE]'".into()).unwrap_err();
        assert!(matches!(err, QueryGenError::PlaceholderMismatch { id: 9, .. }));
    }

    #[test]
    fn render_markers_and_determinism() {
        let sched = stream_order(0, DEFAULT_SEED);
        let inst = stream_instances(0, DEFAULT_SEED).unwrap();
        let a = render_stream(&sched, &inst, "", "").unwrap();
        let b = render_stream(&sched, &inst, "", "").unwrap();
        assert_eq!(a, b);
        let ini: Vec<&str> = a.lines().filter(|l| l.contains(" ini---")).collect();
        assert_eq!(ini.len(), 22);
        assert!(ini[0].contains("---q14 ini---"));
        assert!(ini[21].contains("---q12 ini---"));
        let missing = render_stream(&sched, &inst[1..], "", "");
        assert_eq!(missing, Err(QueryGenError::MissingInstance { stream: 0, id: 1 }));
    }

    #[test]
    fn env_precedence() {
        let env: HashMap<&str, &str> = [(DSS_QUERY, "/env/q"), (DSS_CONFIG, "/env/c")].into();
        let lookup = |k: &str| env.get(k).map(|v| v.to_string());
        let none = resolve_env(&EnvOverrides::default(), lookup);
        assert_eq!(none.query_dir, PathBuf::from("/env/q"));
        assert_eq!(none.dist_file, PathBuf::from("dists.dss"));
        let flag = EnvOverrides { query_dir: Some("/flag/q".into()), ..Default::default() };
        assert_eq!(resolve_env(&flag, lookup).query_dir, PathBuf::from("/flag/q"));
        let bare = resolve_env(&EnvOverrides::default(), |_| None);
        assert_eq!(bare, EnvPaths::default());
        let absent = EnvPaths { query_dir: "/definitely/not/here".into(), ..EnvPaths::default() };
        assert!(matches!(absent.query_dir_checked(), Err(QueryGenError::MissingDir { .. })));
    }

    #[test]
    fn template_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for t in templates() {
            std::fs::write(dir.path().join(format!("{}.sql", t.id)), &t.body).unwrap();
        }
        assert_eq!(templates_from_dir(dir.path()).unwrap(), templates());
        assert!(templates_from_dir(&dir.path().join("nope")).is_err());
    }
}
