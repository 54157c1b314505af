//! `gridsafe` command-line tool. Every command talks to the HTTP service;
//! without `--endpoint` an embedded server is started on a loopback port.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridsafe_client::{Client, ClientError};
use gridsafe_core::api::{HullRow, SafeSetRequest, SimulateRequest};
use gridsafe_core::config::Config;
use gridsafe_core::env::agents::AgentKind;
use gridsafe_core::env::ShieldMode;
use gridsafe_server::{serve_http, serve_ndjson, serve_ndjson_stream, AppState, ServerHandle};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "gridsafe", version, about = "Islanding-safe micro-grid dispatch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; the reference grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base URL of a running service, e.g. http://127.0.0.1:8080.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; falls back to the configuration's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the islanding safe-set sequence for one window.
    Safeset {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        day: usize,
        /// Step within the day at which the window starts.
        #[arg(long, default_value_t = 0)]
        t0: usize,
        /// Also write the hull of the first safe set at every step of the day.
        #[arg(long)]
        band: bool,
    },
    /// Run shielded episodes and report metrics.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Day indices to run, comma-separated or repeated.
        #[arg(long, value_delimiter = ',')]
        day: Option<Vec<usize>>,
        /// Run the first N days.
        #[arg(long, conflicts_with = "day")]
        days: Option<usize>,
        /// full_shield, baseline_shield, or external to let a remote agent
        /// drive one session over stdin/stdout.
        #[arg(long)]
        mode: Option<SimMode>,
        #[arg(long)]
        agent: Option<AgentKind>,
        /// Write one trace CSV per day into the output directory.
        #[arg(long)]
        traces: bool,
    },
    /// Run the service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, alias = "endpoint", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Also accept session-protocol connections on this address.
        #[arg(long)]
        ndjson: Option<SocketAddr>,
        /// Serve a single session over stdin/stdout instead of HTTP.
        #[arg(long)]
        stdio: bool,
    },
}

#[derive(Debug, Clone, Copy)]
enum SimMode {
    Shield(ShieldMode),
    External,
}

impl std::str::FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "external" => Ok(SimMode::External),
            other => other.parse().map(SimMode::Shield),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error(transparent)]
    Core(#[from] gridsafe_core::Error),
    #[error("config {path}: {source}")]
    Config {
        path: String,
        source: gridsafe_core::Error,
    },
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0} of the requested days aborted")]
    Aborted(usize),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) => e.exit_code() as u8,
            Failure::Config { source, .. } => source.exit_code() as u8,
            Failure::Client(e) => e.exit_code() as u8,
            Failure::Io { .. } => 1,
            Failure::Aborted(_) => 3,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Failure {
    let context = context.into();
    move |source| Failure::Io { context, source }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match rt.block_on(run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    Ok(match path {
        Some(p) => Config::load(p).map_err(|source| Failure::Config {
            path: p.display().to_string(),
            source,
        })?,
        None => Config::default(),
    })
}

/// Connects to `endpoint`, or starts an embedded server for this run.
async fn connect(endpoint: Option<&str>, cfg: &Config) -> Result<(Client, Option<ServerHandle>), Failure> {
    if let Some(url) = endpoint {
        return Ok((Client::new(url), None));
    }
    let server = gridsafe_server::spawn(AppState::new(cfg.clone()), SocketAddr::from(([127, 0, 0, 1], 0)))
        .await
        .map_err(io_err("starting embedded server"))?;
    Ok((Client::new(server.base_url()), Some(server)))
}

async fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Safeset { common, day, t0, band } => {
            let cfg = load_config(common.config.as_deref())?;
            let out = common.out.clone().or_else(|| cfg.out.clone());
            let (client, server) = connect(common.endpoint.as_deref(), &cfg).await?;
            let req = SafeSetRequest {
                config: Some(cfg),
                day,
                t0,
                seed: common.seed,
                band,
            };
            let result = client.safeset(&req).await;
            stop(server).await;
            let resp = result?;
            println!(
                "day {} t0 {}: {} safe sets, first hull [{}] .. [{}]",
                resp.day,
                resp.t0,
                resp.hulls.len(),
                fmt_vec(&resp.hulls[0].lower),
                fmt_vec(&resp.hulls[0].upper)
            );
            if let Some(dir) = out {
                create_dir(&dir)?;
                write_hulls(&dir.join("safeset_hulls.csv"), &resp.hulls)?;
                let set = serde_json::json!({
                    "day": resp.day,
                    "t0": resp.t0,
                    "d_lower": resp.d_lower,
                    "set": resp.set,
                });
                let path = dir.join("safeset.json");
                std::fs::write(&path, serde_json::to_string_pretty(&set).expect("serializable"))
                    .map_err(io_err(path.display().to_string()))?;
                if let Some(rows) = &resp.band {
                    write_hulls(&dir.join("safe_band.csv"), rows)?;
                }
                println!("wrote results to {}", dir.display());
            }
            Ok(())
        }
        Command::Simulate {
            common,
            day,
            days,
            mode,
            agent,
            traces,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let mode = match mode {
                Some(SimMode::External) => return serve_stdio(cfg).await,
                Some(SimMode::Shield(m)) => Some(m),
                None => None,
            };
            let out = common.out.clone().or_else(|| cfg.out.clone());
            let (client, server) = connect(common.endpoint.as_deref(), &cfg).await?;
            let req = SimulateRequest {
                config: Some(cfg),
                agent,
                mode,
                days: day,
                n_days: days,
                seed: common.seed,
                traces: traces && out.is_some(),
            };
            let result = client.simulate(&req).await;
            stop(server).await;
            let resp = result?;
            print!("{}", resp.metrics.to_table());
            println!("{} days, {} steps in {:.1} s", resp.metrics.days, resp.metrics.steps, resp.elapsed_s);
            if let Some(dir) = out {
                create_dir(&dir)?;
                resp.metrics.write_csv(&dir.join("metrics.csv"))?;
                let path = dir.join("metrics.txt");
                std::fs::write(&path, resp.metrics.to_table()).map_err(io_err(path.display().to_string()))?;
                for t in &resp.traces {
                    t.write_csv(&dir.join(format!("trace_day{:03}.csv", t.day)))?;
                }
                println!("wrote results to {}", dir.display());
            }
            if !resp.metrics.aborted_days.is_empty() {
                return Err(Failure::Aborted(resp.metrics.aborted_days.len()));
            }
            Ok(())
        }
        Command::Serve {
            config,
            listen,
            ndjson,
            stdio,
        } => {
            let cfg = load_config(config.as_deref())?;
            if stdio {
                return serve_stdio(cfg).await;
            }
            let state = AppState::new(cfg);
            if let Some(addr) = ndjson {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .map_err(io_err(format!("binding {addr}")))?;
                let st = state.clone();
                tokio::spawn(async move {
                    if let Err(e) = serve_ndjson(listener, st, shutdown_signal()).await {
                        tracing::error!(error = %e, "session protocol listener stopped");
                    }
                });
            }
            let listener = tokio::net::TcpListener::bind(listen)
                .await
                .map_err(io_err(format!("binding {listen}")))?;
            eprintln!("listening on http://{}", listener.local_addr().map_err(io_err("local address"))?);
            serve_http(listener, state, shutdown_signal()).await.map_err(io_err("http service"))
        }
    }
}

async fn serve_stdio(cfg: Config) -> Result<(), Failure> {
    serve_ndjson_stream(tokio::io::stdin(), tokio::io::stdout(), AppState::new(cfg))
        .await
        .map_err(io_err("stdio session"))
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
    tracing::info!("shutting down");
}

async fn stop(server: Option<ServerHandle>) {
    if let Some(s) = server {
        if let Err(e) = s.shutdown().await {
            tracing::warn!(error = %e, "embedded server did not stop cleanly");
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(io_err(dir.display().to_string()))
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

fn write_hulls(path: &Path, rows: &[HullRow]) -> Result<(), Failure> {
    let err = io_err(path.display().to_string());
    let write = || -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let n = rows.first().map_or(0, |r| r.lower.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("lower_{i}")));
        header.extend((1..=n).map(|i| format!("upper_{i}")));
        writeln!(f, "{}", header.join(","))?;
        for r in rows {
            let cells: Vec<String> = std::iter::once(r.t.to_string())
                .chain(r.lower.iter().chain(&r.upper).map(|x| format!("{x}")))
                .collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()
    };
    write().map_err(err)
}
