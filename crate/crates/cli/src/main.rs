use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use piqos_cli::config::{load_credentials, ServiceConfig};
use piqos_cli::ops::{self, QueryArgs, RegisterArgs};
use piqos_cli::output::Format;
use piqos_cli::server;

#[derive(Parser)]
#[command(
    name = "piqos",
    version,
    about = "Multi-domain logistics QoS: SLA registry and end-to-end path ranking"
)]
struct Cli {
    /// Registry document path.
    #[arg(long, global = true, value_name = "FILE")]
    registry: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Credentials file: a JSON object mapping domain ids to secrets.
    #[arg(long, global = true, env = "PIQOS_CREDENTIALS", value_name = "FILE")]
    credentials: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank candidate paths for a shipment.
    Query {
        #[arg(long)]
        origin: String,
        #[arg(long)]
        dest: String,
        /// Command string, e.g. "(w=3/5, w=2/5, >60%)".
        #[arg(long)]
        command: String,
        /// Deadline in hours for on-time probabilities.
        #[arg(long)]
        deadline: Option<f64>,
        /// Hop budget for path enumeration.
        #[arg(long, default_value_t = piqos_core::DEFAULT_MAX_HOPS)]
        max_hops: usize,
        /// Keep constraint-violating candidates, flagged as not allowed.
        #[arg(long)]
        all: bool,
        /// Report normalized display scores and withhold composed values.
        #[arg(long)]
        obfuscate: bool,
    },
    /// Register an offering on a segment (requires the domain's secret).
    Register {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value = "")]
        label: String,
        /// Offering id; derived from the segment and label when omitted.
        #[arg(long)]
        id: Option<String>,
        /// JSON array of parameter values in schema order,
        /// e.g. '[80, 60, {"mean": 35, "var": 12}]'.
        #[arg(long)]
        values: String,
        /// The registering domain's secret.
        #[arg(long)]
        secret: String,
    },
    /// Remove an offering owned by the caller's domain.
    Remove {
        #[arg(long)]
        id: String,
        /// The owning domain's secret.
        #[arg(long)]
        secret: String,
    },
    /// Check a registry document and report every violation.
    Validate {
        /// Document to check; defaults to --registry.
        path: Option<PathBuf>,
    },
    /// Load a document and write its canonical form to the registry path.
    Import {
        input: PathBuf,
        /// Drop dominated offerings instead of failing on them.
        #[arg(long)]
        prune: bool,
    },
    /// Run the HTTP gateway.
    Serve {
        /// Config file; flags override its values.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Listen address, e.g. 127.0.0.1:8080.
        #[arg(long)]
        listen: Option<String>,
        /// Hop budget for queries that do not state one.
        #[arg(long)]
        max_hops: Option<usize>,
        /// Obfuscate scores for queries that do not state a preference.
        #[arg(long)]
        obfuscate_default: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let Cli { registry, format, credentials, command } = cli;
    let registry_path = registry.clone().unwrap_or_else(|| PathBuf::from("registry.json"));
    match command {
        Command::Query { origin, dest, command, deadline, max_hops, all, obfuscate } => {
            let args = QueryArgs {
                origin,
                destination: dest,
                command,
                deadline,
                max_hops,
                all,
                obfuscate,
            };
            print!("{}", ops::cmd_query(&registry_path, args, format)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Register { from, to, label, id, values, secret } => {
            let args = RegisterArgs { from, to, label, id, values, secret };
            let (out, code) = ops::cmd_register(&registry_path, credentials.as_deref(), args)?;
            println!("{out}");
            Ok(ExitCode::from(code as u8))
        }
        Command::Remove { id, secret } => {
            println!("{}", ops::cmd_remove(&registry_path, credentials.as_deref(), &id, secret)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { path } => {
            let target = path.unwrap_or(registry_path);
            let (out, code) = ops::cmd_validate(&target);
            if code == 2 {
                eprintln!("{out}");
            } else {
                println!("{out}");
            }
            Ok(ExitCode::from(code as u8))
        }
        Command::Import { input, prune } => {
            println!("{}", ops::cmd_import(&input, &registry_path, prune)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { config, listen, max_hops, obfuscate_default } => {
            let mut service = match config {
                Some(path) => ServiceConfig::from_file(&path)?,
                None => ServiceConfig::default(),
            };
            if let Some(path) = registry {
                service.registry_path = path;
            }
            if let Some(listen) = listen {
                service.listen_address = listen;
            }
            if let Some(hops) = max_hops {
                service.default_max_hops = hops;
            }
            if obfuscate_default {
                service.obfuscate_default = true;
            }
            if let Some(creds) = credentials.as_deref() {
                service.domain_credentials = load_credentials(creds)?;
            }
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(server::serve(service))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
