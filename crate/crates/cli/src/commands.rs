//! Argument parsing and the one-shot commands.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evolex_bench::experiment::{write_effectiveness_csv, write_ranking_csv};
use evolex_bench::{run_bench, BenchConfig, SyntheticDataset, ALL_METRICS};
use evolex_core::{explain_evolving, KChoice, Relation};
use serde_json::{json, Map, Value};

use crate::config::{merge_request, Config};
use crate::error::{CliError, CliResult};
use crate::plot::render_svg;
use crate::service::{self, ServiceOptions};

/// JSON schema that every bench report conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../schema/bench-report.schema.json");

#[derive(Debug, Parser)]
#[command(name = "evolex", version, about = "Explain how an aggregated time series evolves")]
pub struct Cli {
    /// JSON file with defaults for explain requests, ingestion and the service.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a series and write its per-segment explanations as JSON.
    Explain(ExplainArgs),
    /// Write synthetic datasets with ground-truth sidecars.
    Synth(SynthArgs),
    /// Run the accuracy experiments on synthetic data.
    Bench(BenchArgs),
    /// Serve the HTTP API and optional static assets.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Agg {
    Sum,
    Count,
    Avg,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Time attribute column.
    #[arg(long, value_name = "NAME")]
    pub time: String,
    #[arg(long, value_name = "NAME")]
    pub measure: Option<String>,
    #[arg(long, value_enum)]
    pub agg: Option<Agg>,
    #[arg(long, value_name = "A,B,...", value_delimiter = ',', required = true)]
    pub explain_by: Vec<String>,
    /// Explanations per segment.
    #[arg(long)]
    pub m: Option<usize>,
    /// Maximum number of predicates per explanation.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Segment count, or "auto" to pick the elbow of the variance curve.
    #[arg(long, value_name = "auto|N")]
    pub k: Option<KChoice>,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Moving-average window applied before explaining.
    #[arg(long, value_name = "N")]
    pub smooth: Option<usize>,
    #[arg(long, value_name = "F")]
    pub filter_ratio: Option<f64>,
    #[arg(long)]
    pub no_guess_verify: bool,
    #[arg(long)]
    pub no_sketch: bool,
    /// Variance metric id.
    #[arg(long, value_name = "ID")]
    pub metric: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// SNR levels in dB; "none" gives noiseless data.
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    pub snr: Vec<String>,
    /// Datasets per level.
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub categories: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "20,25,30,35,40,45,50")]
    pub snr: Vec<f64>,
    /// Datasets per level.
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "tse,bottomup")]
    pub methods: Vec<String>,
    /// Metric ids for the ranking experiment, or "all".
    #[arg(long, value_name = "LIST", value_delimiter = ',', default_value = "all")]
    pub metrics: Vec<String>,
    /// Random schemes drawn per dataset for the ranking experiment.
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub categories: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long, env = "EVOLEX_PORT")]
    pub port: Option<u16>,
    /// Directory of static assets served under `/`.
    #[arg(long, value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, value_name = "MB")]
    pub upload_limit_mb: Option<usize>,
    /// Maximum concurrent explain computations.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parse `args` and run the command. Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Explain(args) => explain(&args, &config),
        Command::Synth(args) => synth(&args),
        Command::Bench(args) => bench(&args),
        Command::Serve(args) => serve(&args, &config),
    }
}

/// Load a CSV and apply the configured type hints and derived columns.
pub fn load_relation(path: &Path, time: &str, config: &Config) -> CliResult<Relation> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let relation = evolex_core::load_csv(BufReader::new(file), time, &config.type_hints)?;
    Ok(relation.with_derived(&config.derived)?)
}

fn explain_fields(args: &ExplainArgs) -> Map<String, Value> {
    let mut fields = Map::new();
    let mut set = |key: &str, value: Value| {
        fields.insert(key.to_string(), value);
    };
    set("time_attr", json!(args.time));
    set("explain_by", json!(args.explain_by));
    if let Some(v) = &args.measure {
        set("measure", json!(v));
    }
    if let Some(agg) = args.agg {
        set("agg", json!(format!("{agg:?}").to_ascii_lowercase()));
    }
    if let Some(v) = args.m {
        set("m", json!(v));
    }
    if let Some(v) = args.max_order {
        set("beta_max", json!(v));
    }
    if let Some(v) = args.k {
        set("k", json!(v));
    }
    if let Some(v) = args.k_max {
        set("k_max", json!(v));
    }
    if let Some(v) = args.smooth {
        set("smooth_window", json!(v));
    }
    let mut opts = Map::new();
    if let Some(v) = args.filter_ratio {
        opts.insert("filter_ratio".into(), json!(v));
    }
    if args.no_guess_verify {
        opts.insert("guess_verify".into(), json!(false));
    }
    if args.no_sketch {
        opts.insert("sketching".into(), json!(false));
    }
    if let Some(v) = &args.metric {
        opts.insert("variance_metric".into(), json!(v));
    }
    if !opts.is_empty() {
        set("opts", Value::Object(opts));
    }
    fields
}

fn explain(args: &ExplainArgs, config: &Config) -> CliResult<()> {
    let request = merge_request(&config.explain, explain_fields(args))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    request.validate()?;
    let relation = load_relation(&args.input, &args.time, config)?;
    for name in request.explain_by.iter().chain(&request.measure) {
        relation.attribute(name)?;
    }
    let result = explain_evolving(&relation, &request)?;
    fs::write(&args.out, service::render(&result)?)?;
    if let Some(path) = &args.plot {
        fs::write(path, render_svg(&result))?;
    }
    println!(
        "k = {} ({:?}), {} explanations, {:.1} ms -> {}",
        result.k,
        result.k_selection,
        result.stats.explanations_after_filter,
        result.timings_ms.total,
        args.out.display()
    );
    Ok(())
}

fn parse_level(text: &str) -> CliResult<Option<f64>> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("none") || t.eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(CliError::Usage(format!("invalid SNR level {t:?}"))),
    }
}

fn level_name(snr: Option<f64>) -> String {
    snr.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn write_dataset(dir: &Path, snr: Option<f64>, index: usize, data: &SyntheticDataset) -> CliResult<()> {
    let stem = format!("snr{}_{index:03}", level_name(snr));
    let csv = File::create(dir.join(format!("{stem}.csv")))?;
    data.write_csv(csv)?;
    let sidecar = serde_json::to_string_pretty(&data.sidecar())
        .map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(dir.join(format!("{stem}.truth.json")), sidecar)?;
    Ok(())
}

fn synth(args: &SynthArgs) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let levels: Vec<Option<f64>> = args.snr.iter().map(|s| parse_level(s)).collect::<CliResult<_>>()?;
    let config = BenchConfig {
        n: args.n,
        categories: args.categories,
        datasets_per_level: args.seeds,
        seed: args.seed,
        ..BenchConfig::default()
    };
    fs::create_dir_all(&args.out)?;
    let mut written = 0;
    for snr in levels {
        for (i, data) in config.datasets(snr)?.iter().enumerate() {
            write_dataset(&args.out, snr, i, data)?;
            written += 1;
        }
    }
    println!("{written} datasets -> {}", args.out.display());
    Ok(())
}

/// Expand "all" and check the remaining bench flags.
pub fn bench_config(args: &BenchArgs) -> CliResult<BenchConfig> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if let Some(bad) = args.snr.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("invalid SNR level {bad}")));
    }
    let metrics = if args.metrics.iter().any(|m| m.eq_ignore_ascii_case("all")) {
        ALL_METRICS.iter().map(|s| s.to_string()).collect()
    } else {
        args.metrics.clone()
    };
    Ok(BenchConfig {
        n: args.n,
        categories: args.categories,
        snr_levels: args.snr.clone(),
        datasets_per_level: args.seeds,
        seed: args.seed,
        methods: args.methods.clone(),
        metrics,
        samples: args.samples,
    })
}

fn bench(args: &BenchArgs) -> CliResult<()> {
    let config = bench_config(args)?;
    let report = run_bench(&config)?;
    fs::create_dir_all(&args.out)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(args.out.join("report.json"), text)?;
    fs::write(args.out.join("report.schema.json"), REPORT_SCHEMA)?;
    write_effectiveness_csv(&report.effectiveness, File::create(args.out.join("effectiveness.csv"))?)?;
    write_ranking_csv(&report.ranking, File::create(args.out.join("ranking.csv"))?)?;
    for row in &report.effectiveness.rows {
        println!(
            "snr {:>4}  {:<10} distance {:6.2}%",
            level_name(row.snr_db),
            row.method,
            row.mean_distance_percent
        );
    }
    for row in &report.ranking.rows {
        println!(
            "snr {:>4}  {:<10} rank {:5.2}  truth rank {:8.1}",
            level_name(row.snr_db),
            row.metric,
            row.mean_rank,
            row.mean_gt_rank
        );
    }
    println!("report -> {}", args.out.display());
    Ok(())
}

fn serve(args: &ServeArgs, config: &Config) -> CliResult<()> {
    let defaults = ServiceOptions::default();
    let options = ServiceOptions {
        upload_limit: args
            .upload_limit_mb
            .or(config.serve.upload_limit_mb)
            .map_or(defaults.upload_limit, |mb| mb << 20),
        workers: args.workers.or(config.serve.workers).unwrap_or(defaults.workers),
        static_dir: args.static_dir.clone().or_else(|| config.serve.static_dir.clone()),
        config: config.clone(),
    };
    if options.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let host = args.host.clone().or_else(|| config.serve.host.clone()).unwrap_or_else(|| "127.0.0.1".into());
    let port = args.port.or(config.serve.port).unwrap_or(8080);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid listen address {host}:{port}")))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, service::router(options))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(())
}
