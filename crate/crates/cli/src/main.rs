//! `mrisk`: reproducible pricing, model-comparison, FVA and inventory runs.

mod commands;
mod config;
mod exit;
mod inventory;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mrisk_core::governance::Inventory;

use crate::commands::Run;
use crate::config::Loaded;
use crate::exit::{Failure, CONFIG, SUCCESS};
use crate::inventory::InventoryCommand;

/// Exit codes: 0 success, 1 runtime failure, 2 governance block,
/// 3 invalid configuration, 4 breach of a blocking risk limit.
#[derive(Debug, Parser)]
#[command(name = "mrisk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Price through a blocked mapping or feature limit; the bypass is audit-logged.
    #[arg(long, global = true)]
    override_governance: bool,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price the product; writes price.json.
    Price,
    /// HWLV minus LV over tenors and correlations; writes grid.csv and grid.json.
    Grid,
    /// Fair value adjustments; writes fva_report.json and fva_report.md.
    Fva,
    /// Delta-hedging simulation; writes pnl.csv and hedge_component.json.
    Hedge,
    /// Query or change the model inventory.
    Inventory {
        /// Store file; defaults to the config's governance store.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Audit log; defaults to the store path with an `audit.jsonl` extension.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[command(subcommand)]
        command: InventoryCommand,
    },
}

fn open_inventory(cli: &Cli, store: &Option<PathBuf>, audit: &Option<PathBuf>) -> Result<Inventory, Failure> {
    let (store, configured_audit) = match (store, &cli.config) {
        (Some(s), _) => (s.clone(), None),
        (None, Some(path)) => {
            let loaded = Loaded::read(path)?;
            let g = loaded
                .config
                .governance
                .as_ref()
                .ok_or_else(|| Failure::config("config has no governance section"))?;
            (loaded.resolve(&g.store), g.audit_log.as_ref().map(|a| loaded.resolve(a)))
        }
        (None, None) => return Err(Failure::config("inventory needs --store or --config")),
    };
    let audit = audit
        .clone()
        .or(configured_audit)
        .unwrap_or_else(|| store.with_extension("audit.jsonl"));
    Ok(Inventory::open(store, audit)?)
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    if let Command::Inventory { store, audit, command } = &cli.command {
        return inventory::run(open_inventory(cli, store, audit)?, command);
    }
    let path = cli.config.as_ref().ok_or_else(|| Failure::config("--config is required"))?;
    let run = Run::new(Loaded::read(path)?, cli.seed, cli.out.clone(), cli.override_governance);
    match cli.command {
        Command::Price => commands::price_cmd(&run),
        Command::Grid => commands::grid_cmd(&run),
        Command::Fva => commands::fva_cmd(&run),
        Command::Hedge => commands::hedge_cmd(&run),
        Command::Inventory { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG } else { SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(Failure::config("--threads must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::runtime(e)),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
