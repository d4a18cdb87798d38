use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use revtp_cli::api::router;
use revtp_cli::commands::{self, CliError, SimulateArgs};
use revtp_cli::store::Store;

#[derive(Parser)]
#[command(name = "revtp", version, about = "Learn a planner's cost direction from the transport plans they choose")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a transport instance (JSON with costs, supply, demand).
    Solve { instance: PathBuf },
    /// Print the reduced objective of an instance.
    Reduce { instance: PathBuf },
    /// Classify the feasible region of a situation.
    Classify {
        /// Situation as JSON, e.g. '{"supply":[5,3],"demand":[4,2,2]}'.
        #[arg(long, conflicts_with = "dms_file", required_unless_present = "dms_file")]
        dms: Option<String>,
        #[arg(long)]
        dms_file: Option<PathBuf>,
    },
    /// Situation whose region has every constraint as an edge.
    Polygon {
        m: usize,
        n: usize,
        #[arg(default_value_t = 1.0)]
        rho: f64,
    },
    /// Estimate the objective direction from an observation log (CSV).
    Estimate {
        log: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        /// Also write the estimate trace as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulated experiment.
    Simulate {
        /// Use the bundled study data.
        #[arg(long, conflicts_with = "config")]
        fixture: bool,
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        /// Directory for result.csv and result.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Informativeness of every 2x3 region type (CSV).
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "REVTP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "REVTP_BIND", default_value = "127.0.0.1")]
        bind: String,
        /// Where session logs are kept.
        #[arg(long, env = "REVTP_DATA_DIR", default_value = "revtp-data")]
        data_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Option<String>, CliError> {
    let json = cli.json;
    let out = match cli.command {
        Command::Solve { instance } => commands::solve(&instance, json)?,
        Command::Reduce { instance } => commands::reduce(&instance, json)?,
        Command::Classify { dms, dms_file } => {
            let text = match (dms, dms_file) {
                (Some(t), _) => t,
                (None, Some(p)) => std::fs::read_to_string(&p).map_err(|source| CliError::Io { path: p, source })?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::classify(&commands::parse_dms(&text)?, json)?
        }
        Command::Polygon { m, n, rho } => commands::polygon(m, n, rho, json)?,
        Command::Estimate { log, window, out } => commands::estimate(&log, window, out.as_deref(), json)?,
        Command::Simulate { fixture, config, seed, steps, window, out_dir } => {
            let args = SimulateArgs {
                fixture,
                config: config.as_deref(),
                seed,
                steps,
                window,
                out_dir: out_dir.as_deref(),
            };
            commands::simulate(&args, json)?
        }
        Command::Report { out } => commands::report(out.as_deref())?,
        Command::Serve { port, bind, data_dir } => {
            serve(&bind, port, data_dir).map_err(|source| CliError::Io { path: PathBuf::from(&bind), source })?;
            return Ok(None);
        }
    };
    Ok(Some(out))
}

fn serve(bind: &str, port: u16, data_dir: PathBuf) -> std::io::Result<()> {
    let addr: SocketAddr = format!("{bind}:{port}")
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let store = Arc::new(Store::open(&data_dir)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}, sessions in {}", listener.local_addr()?, data_dir.display());
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Some(out)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}
