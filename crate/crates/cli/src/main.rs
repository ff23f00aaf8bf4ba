mod config;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dssbench::backend::BackendKind;
use dssbench::bitmap::{profile_flat_column, EncodedBitmap, SimpleBitmap};
use dssbench::datagen::{generate_refresh_set, generate_table, GenConfig};
use dssbench::driver::{Phase, RunConfig};
use dssbench::metrics::{compute, MetricsInput};
use dssbench::querygen::{substitute_params, write_stream, QueryTemplate, DEFAULT_COMPLETE, DEFAULT_INIT};
use dssbench::report::{metrics_input, render_report, run_all, Format, RunArchive, RunOptions};
use dssbench::rewriter::{check_equivalence, rewrite_query, where_predicate};
use dssbench::{Parallelism, Table};

use config::GlobalArgs;

#[derive(Debug, Parser)]
#[command(name = "dssbench", version, about = "Decision-support benchmark harness")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate flat files, refresh sets and query stream scripts.
    Gen {
        /// Only this table.
        #[arg(long)]
        table: Option<Table>,
        /// Split each table into this many files.
        #[arg(long, default_value_t = 1)]
        parts: u32,
        /// Only write part N of --parts.
        #[arg(long)]
        part: Option<u32>,
        /// Refresh pairs to write (default: streams + 1).
        #[arg(long)]
        refresh_pairs: Option<u32>,
        /// Also write stream00..streamNN query scripts into <out>/queries.
        #[arg(long)]
        query_streams: bool,
    },
    /// Load test: bulk load, keys and indexes, statistics, validation.
    Load,
    /// Power test (the simulator is loaded first, as it keeps no state).
    Power,
    /// Throughput test (the simulator is loaded first).
    Throughput,
    /// Load, power, throughput and metrics.
    Run {
        /// Total system price, for price per QphH.
        #[arg(long)]
        price: Option<f64>,
        /// Skip the throughput test.
        #[arg(long)]
        power_only: bool,
    },
    /// Compute metrics from an archive or from explicit timings.
    Metrics {
        /// Run archive to read timings from.
        #[arg(long, conflicts_with_all = ["qi", "ri", "ts"])]
        archive: Option<PathBuf>,
        /// 22 comma-separated power-test query intervals, seconds.
        #[arg(long, value_delimiter = ',')]
        qi: Vec<f64>,
        /// RF1,RF2 power-test intervals, seconds.
        #[arg(long, value_delimiter = ',')]
        ri: Vec<f64>,
        /// Throughput-test elapsed time, seconds.
        #[arg(long)]
        ts: Option<f64>,
        #[arg(long)]
        price: Option<f64>,
    },
    /// Hoist conjuncts shared by every branch of a disjunction in a WHERE clause.
    Rewrite {
        /// SQL file, or `-` for stdin; the original Q19 when omitted.
        file: Option<PathBuf>,
        /// Report hoisted conjuncts and the equivalence check on stderr.
        #[arg(long)]
        check: bool,
    },
    /// Bitmap index profile of a column, or the vectors of an inline column.
    Bitmap {
        #[arg(long, required_unless_present = "values")]
        table: Option<Table>,
        #[arg(long, required_unless_present = "values")]
        column: Option<String>,
        /// Comma-separated values to index instead of a table column.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Render a run archive.
    Report {
        archive: PathBuf,
        /// human, csv or machine.
        #[arg(long, default_value = "human")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn par(cli: &Cli) -> Parallelism {
    if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

/// Runs the command; `Ok(false)` means it completed but a check failed.
fn dispatch(cli: Cli) -> Result<bool> {
    let par = par(&cli);
    match &cli.command {
        Command::Gen { table, parts, part, refresh_pairs, query_streams } => {
            let cfg = config::load(&cli.global)?;
            gen(&cfg, *table, *parts, *part, *refresh_pairs, *query_streams)
        }
        Command::Load => {
            let cfg = config::load(&cli.global)?;
            let opts = RunOptions { skip_power: true, skip_throughput: true, par, ..Default::default() };
            finish(run_all(&cfg, &opts)?)
        }
        Command::Power | Command::Throughput => {
            let cfg = config::load(&cli.global)?;
            let power = matches!(cli.command, Command::Power);
            let opts = RunOptions {
                skip_load: cfg.backend.kind == BackendKind::SqlDbms,
                skip_power: !power,
                skip_throughput: power,
                par,
                ..Default::default()
            };
            finish(run_all(&cfg, &opts)?)
        }
        Command::Run { price, power_only } => {
            let cfg = config::load(&cli.global)?;
            let opts = RunOptions { skip_throughput: *power_only, total_price: *price, par, ..Default::default() };
            finish(run_all(&cfg, &opts)?)
        }
        Command::Metrics { archive, qi, ri, ts, price } => metrics(&cli.global, archive.as_deref(), qi, ri, *ts, *price),
        Command::Rewrite { file, check } => rewrite(file.as_deref(), *check, par),
        Command::Bitmap { table, column, values } => {
            if values.is_empty() {
                let cfg = config::load(&cli.global)?;
                let (table, column) = (table.expect("required by clap"), column.as_deref().expect("required by clap"));
                bitmap_profile(&cfg, table, column, par)
            } else {
                bitmap_values(values, par)
            }
        }
        Command::Report { archive, format } => {
            let a = RunArchive::read(archive)?;
            print!("{}", render_report(&a, *format)?);
            Ok(a.succeeded())
        }
    }
}

fn finish((archive, path): (RunArchive, PathBuf)) -> Result<bool> {
    match render_report(&archive, Format::Human) {
        Ok(text) => print!("{text}"),
        Err(_) => {
            if let Some(load) = &archive.load {
                println!("{}", load.validation);
            }
        }
    }
    println!("archive: {}", path.display());
    for e in &archive.errors {
        eprintln!("{e}");
    }
    Ok(archive.succeeded())
}

fn gen(
    cfg: &RunConfig,
    table: Option<Table>,
    parts: u32,
    part: Option<u32>,
    refresh_pairs: Option<u32>,
    query_streams: bool,
) -> Result<bool> {
    let dir = cfg.data_dir();
    let indices: Vec<u32> = match part {
        Some(p) => vec![p],
        None => (1..=parts).collect(),
    };
    for index in indices {
        let mut g = GenConfig::new(cfg.sf, cfg.seed, &dir).part(index, parts);
        if let Some(t) = table {
            g = g.table(t);
        }
        for f in generate_table(&g)?.files {
            println!("{} {} rows", f.path.display(), f.rows);
        }
    }
    let streams = cfg.stream_count();
    if table.is_none() && part.is_none() {
        for pair in 1..=refresh_pairs.unwrap_or(streams + 1) {
            let set = generate_refresh_set(cfg.sf, pair, cfg.seed, &dir)?;
            println!("refresh pair {pair}: {} orders, {} lineitems", set.new_orders.len(), set.new_lineitems.len());
        }
    }
    if query_streams {
        let qdir = cfg.out_dir.join("queries");
        std::fs::create_dir_all(&qdir).with_context(|| format!("creating {}", qdir.display()))?;
        for s in 0..=streams {
            let (sql, _) = write_stream(&qdir, s, cfg.seed, DEFAULT_INIT, DEFAULT_COMPLETE)?;
            println!("{}", sql.display());
        }
    }
    Ok(true)
}

fn metrics(
    global: &GlobalArgs,
    archive: Option<&Path>,
    qi: &[f64],
    ri: &[f64],
    ts: Option<f64>,
    price: Option<f64>,
) -> Result<bool> {
    let input = match archive {
        Some(path) => {
            let a = RunArchive::read(path)?;
            let power: Vec<_> = a.records.iter().filter(|r| r.phase == Phase::Power).cloned().collect();
            let t = a.throughput.as_ref().context("archive has no throughput summary")?;
            metrics_input(&power, t.streams, t.ts, a.environment.sf, price)?
        }
        None => {
            let cfg = config::load(global)?;
            let Some(ts) = ts else { bail!("--ts is required without --archive") };
            MetricsInput {
                qi: qi.to_vec(),
                ri: ri.to_vec(),
                streams: cfg.stream_count(),
                ts,
                sf: cfg.sf.value(),
                total_price: price,
                censored: false,
            }
        }
    };
    let m = compute(&input)?;
    println!("Power@Size: {:.6}", m.power_at_size);
    println!("Throughput@Size: {:.6}", m.throughput_at_size);
    println!("Composite: {:.6}", m.qphh_at_size);
    if let Some(p) = m.price_per_qphh {
        println!("Price/QphH: {p:.6}");
    }
    if m.lower_bound {
        println!("(lower bound: some timings were censored at the timeout)");
    }
    Ok(true)
}

fn rewrite(file: Option<&Path>, check: bool, par: Parallelism) -> Result<bool> {
    let sql = match file {
        None => substitute_params(&QueryTemplate::q19_original(), 0, 0)?.sql,
        Some(p) if p == Path::new("-") => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
    };
    let (out, report) = rewrite_query(&sql)?;
    print!("{out}");
    if !out.ends_with('\n') {
        println!();
    }
    if !check {
        return Ok(true);
    }
    eprintln!("hoisted {} conjunct(s):", report.hoisted.len());
    for h in &report.hoisted {
        eprintln!("  {h}");
    }
    let (Some(before), Some(after)) = (where_predicate(&sql)?, where_predicate(&out)?) else {
        eprintln!("no WHERE clause");
        return Ok(true);
    };
    let verdict = check_equivalence(&before, &after, par, 100_000, 1);
    eprintln!("equivalence: {verdict:?}");
    Ok(verdict.holds())
}

fn bitmap_profile(cfg: &RunConfig, table: Table, column: &str, par: Parallelism) -> Result<bool> {
    let p = profile_flat_column(&cfg.data_dir(), table, column, par)?;
    println!("{}.{}", table.name(), p.column);
    println!("rows: {}", p.rows);
    println!("distinct: {}", p.distinct);
    println!("cardinality: {:.6}%", p.advice.ratio_percent());
    println!("bitmap advised: {}", if p.advice.bitmap_eligible { "yes" } else { "no" });
    println!("simple index: {} vectors, {} bytes", p.distinct, p.simple_bytes);
    println!("encoded index: {} slices, {} bytes", p.encoded_width, p.encoded_bytes);
    Ok(true)
}

fn bitmap_values(values: &[String], par: Parallelism) -> Result<bool> {
    let simple = SimpleBitmap::build_with(values, par)?;
    let encoded = EncodedBitmap::build_with(values, par)?;
    println!("simple:");
    for (v, bits) in simple.domain.iter().zip(&simple.vectors) {
        println!("  B{v} = {bits}");
    }
    println!("encoded ({} bits):", encoded.width);
    for j in (0..encoded.width as usize).rev() {
        println!("  B{j} = {}", encoded.slices[j]);
    }
    println!("mapping:");
    for v in &encoded.domain {
        println!("  {v} = {}", encoded.code_string(v).expect("domain value has a code"));
    }
    Ok(true)
}
