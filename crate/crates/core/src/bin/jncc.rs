use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use jncc_core::codes::write_alist;
use jncc_core::harness::{bounds_csv, run_analyze, run_bound_sweep, run_llr_table, run_wer_sweep, ExperimentSpec};
use jncc_core::{JnccError, Result};

#[derive(Parser)]
#[command(name = "jncc", version, about = "Joint network-channel coding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment spec file (key = value lines).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Overrides the spec's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print diversity metrics for the spec's topology.
    Analyze {
        /// Also build the code and measure erasure diversity up to this many erased nodes.
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Build the code; writes an alist file and a `.slots` sidecar next to it.
    Build,
    /// Word error rate sweep.
    Simulate,
    /// Outage bounds sweep.
    Outage {
        /// Include the bound based on decoded information (slow).
        #[arg(long)]
        tightened: bool,
    },
    /// Raw and decoded per-link information tables.
    LlrTable,
}

fn load_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let path = cli
        .spec
        .as_deref()
        .ok_or_else(|| JnccError::Config("--spec is required".into()))?;
    let mut spec = ExperimentSpec::from_file(path)?;
    if let Some(seed) = cli.seed {
        spec.master_seed = seed;
        spec.resolved.insert("master_seed".into(), seed.to_string());
    }
    Ok(spec)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| JnccError::Config(format!("json encoding failed: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| JnccError::Config(format!("thread pool: {e}")))?;
    }
    let spec = load_spec(cli)?;
    let out = cli.out.as_deref();
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Analyze { verify } => {
            let report = run_analyze(&spec, *verify)?;
            emit(out, &if json { to_json(&report)? } else { report.to_key_values() })
        }
        Command::Build => {
            let code = spec.build_code()?;
            let path = out.ok_or_else(|| JnccError::Config("build needs --out".into()))?;
            std::fs::write(path, write_alist(&code.h))?;
            let mut side = path.as_os_str().to_owned();
            side.push(".slots");
            std::fs::write(PathBuf::from(side), code.slot_sidecar())?;
            eprintln!("{} x {} parity-check matrix, rate {:.4}", code.h.rows(), code.h.cols(), code.rate());
            Ok(())
        }
        Command::Simulate => {
            let code = spec.build_code()?;
            let res = run_wer_sweep(&spec, &code)?;
            emit(out, &if json { to_json(&res)? } else { res.to_csv() })
        }
        Command::Outage { tightened } => {
            let pts = run_bound_sweep(&spec, *tightened)?;
            emit(out, &if json { to_json(&pts)? } else { bounds_csv(&spec, &pts) })
        }
        Command::LlrTable => emit(out, &run_llr_table(&spec)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
