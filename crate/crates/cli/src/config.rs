//! Settings resolution: command-line flag, then `DSS_*` environment
//! variable (both via clap), then the TOML config file, then the default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use dssbench::backend::{BackendConfig, BackendKind, LatencyModel};
use dssbench::driver::{RunConfig, DEFAULT_TIMEOUT_SECS};
use dssbench::querygen::DEFAULT_SEED;
use dssbench::refresh::DEFAULT_BATCH;
use dssbench::ScaleFactor;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with defaults for any of the settings below.
    #[arg(long, global = true, env = "DSS_CONFIG_FILE")]
    pub config: Option<PathBuf>,
    /// Scale factor (1.0 is about 1 GB of raw data).
    #[arg(long, global = true, env = "DSS_SF")]
    pub sf: Option<f64>,
    #[arg(long, global = true, env = "DSS_SEED")]
    pub seed: Option<u64>,
    /// Per-statement timeout in seconds.
    #[arg(long, global = true, env = "DSS_TIMEOUT")]
    pub timeout: Option<f64>,
    /// Throughput query streams (default from the scale factor).
    #[arg(long, global = true, env = "DSS_STREAMS")]
    pub streams: Option<u32>,
    /// `simulator` or `sql_dbms`.
    #[arg(long, global = true, env = "DSS_BACKEND")]
    pub backend: Option<BackendKind>,
    /// Connection string for `sql_dbms`.
    #[arg(long, global = true, env = "DSS_DSN")]
    pub dsn: Option<String>,
    /// Output directory for logs and archives.
    #[arg(long, global = true, env = "DSS_OUT")]
    pub out: Option<PathBuf>,
    /// Flat-file directory (default `<out>/data`).
    #[arg(long, global = true, env = "DSS_PATH")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileLatency {
    pub default: Option<f64>,
    pub rows: Option<u64>,
    pub jitter: Option<f64>,
    #[serde(default)]
    pub patterns: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sf: Option<f64>,
    pub seed: Option<u64>,
    pub timeout: Option<f64>,
    pub streams: Option<u32>,
    pub backend: Option<BackendKind>,
    pub dsn: Option<String>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub batch: Option<usize>,
    pub plan_prefix: Option<String>,
    pub capture_plans: Option<bool>,
    pub latency: Option<FileLatency>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Combines parsed flags/environment with the config file.
pub fn resolve(args: &GlobalArgs, file: &FileConfig) -> Result<RunConfig> {
    let sf = ScaleFactor::new(args.sf.or(file.sf).unwrap_or(1.0))?;
    let out = args.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut latency = LatencyModel::default();
    if let Some(l) = &file.latency {
        latency.default = l.default.unwrap_or(latency.default);
        latency.rows = l.rows.unwrap_or(latency.rows);
        latency.jitter = l.jitter.unwrap_or(latency.jitter);
        latency.patterns = l.patterns.iter().map(|(k, v)| (k.clone(), *v)).collect();
    }
    let mut cfg = RunConfig::new(sf, out);
    cfg.seed = seed;
    cfg.timeout = args.timeout.or(file.timeout).unwrap_or(DEFAULT_TIMEOUT_SECS);
    cfg.streams = args.streams.or(file.streams);
    cfg.data_dir = args.data.clone().or_else(|| file.data.clone());
    cfg.batch = file.batch.unwrap_or(DEFAULT_BATCH);
    cfg.capture_plans = file.capture_plans.unwrap_or(false);
    cfg.backend = BackendConfig {
        kind: args.backend.or(file.backend).unwrap_or_default(),
        dsn: args.dsn.clone().or_else(|| file.dsn.clone()),
        latency,
        plan_prefix: file.plan_prefix.clone().unwrap_or_else(|| "EXPLAIN".into()),
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(args: &GlobalArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(p) => FileConfig::read(p)?,
        None => FileConfig::default(),
    };
    resolve(args, &file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file: FileConfig = toml::from_str(
            "sf = 0.1\nseed = 5\nstreams = 3\nbackend = \"simulator\"\n[latency]\ndefault = 0.5\n[latency.patterns]\n\"(Q9)\" = 2.0\n",
        )
        .unwrap();
        let args = GlobalArgs { sf: Some(0.01), ..Default::default() };
        let cfg = resolve(&args, &file).unwrap();
        assert_eq!(cfg.sf.value(), 0.01);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.streams, Some(3));
        assert_eq!(cfg.timeout, DEFAULT_TIMEOUT_SECS);
        assert_eq!(cfg.backend.latency.latency_for("x (Q9) y"), 2.0);
        assert_eq!(cfg.backend.latency.default, 0.5);
        let cfg = resolve(&GlobalArgs::default(), &FileConfig::default()).unwrap();
        assert_eq!(cfg.sf.value(), 1.0);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("scale = 3").is_err());
    }
}
