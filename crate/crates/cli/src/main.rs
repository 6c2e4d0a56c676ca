use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use xlra_cli::config::{Format, RunConfig};
use xlra_cli::{emit, sweep, write_calibration, write_exclusivity, write_overheads};
use xlra_core::Protocol;

/// Random-access simulator for XL-MIMO cells with visibility regions.
#[derive(Parser)]
#[command(name = "xlra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single campaign.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "novr-xl")]
        protocol: Protocol,
        /// Population size.
        #[arg(long, default_value_t = 2000)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Blocks after warm-up.
        #[arg(long)]
        blocks: Option<usize>,
    },
    /// Run the campaign grid of the configuration. Per-(protocol, K)
    /// means and standard errors go to `<out>.summary`, or to standard
    /// error without `--out`.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        protocol: Option<Vec<Protocol>>,
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seed: Option<Vec<u64>>,
        #[arg(long)]
        blocks: Option<usize>,
    },
    /// Probability of at least one exclusive SA versus the number of
    /// contenders.
    Exclusivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
        subarrays: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        max_contenders: usize,
    },
    /// Channel uses per access attempt of each protocol.
    Overheads {
        #[command(flatten)]
        common: Common,
    },
    /// Lone-user uplink SINR distribution, for choosing power settings.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn open(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".summary");
    out.with_file_name(name)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            common,
            protocol,
            k,
            seed,
            blocks,
        } => {
            let cfg = load(common.config.as_deref())?;
            let blocks = blocks.unwrap_or(cfg.sweep.n_blocks);
            let row = sweep::run_cell(&cfg.scenario, protocol, k, seed, blocks, cfg.sweep.warmup)?;
            let out = common.out.or(cfg.sweep.output);
            emit::write_rows(&[row], common.format.unwrap_or(cfg.sweep.format), open(out.as_deref())?)?;
        }
        Command::Sweep {
            common,
            protocol,
            k,
            seed,
            blocks,
        } => {
            let mut cfg = load(common.config.as_deref())?;
            let spec = &mut cfg.sweep;
            if let Some(p) = protocol {
                spec.protocols = p;
            }
            if let Some(k) = k {
                spec.k_values = k;
            }
            if let Some(s) = seed {
                spec.seeds = s;
            }
            if let Some(b) = blocks {
                spec.n_blocks = b;
            }
            if let Some(o) = common.out {
                spec.output = Some(o);
            }
            if let Some(f) = common.format {
                spec.format = f;
            }
            spec.validate()?;
            let rows = sweep::run_sweep(&cfg.scenario, spec)?;
            let summary = sweep::summarize(&rows);
            emit::write_rows(&rows, spec.format, open(spec.output.as_deref())?)?;
            match &spec.output {
                Some(o) => emit::write_summary(&summary, spec.format, open(Some(&summary_path(o)))?)?,
                None => emit::write_summary(&summary, spec.format, io::stderr().lock())?,
            }
        }
        Command::Exclusivity {
            common,
            subarrays,
            max_contenders,
        } => {
            let cfg = load(common.config.as_deref())?;
            write_exclusivity(
                cfg.scenario.p_visible,
                &subarrays,
                max_contenders,
                open(common.out.as_deref())?,
            )?;
        }
        Command::Overheads { common } => {
            let cfg = load(common.config.as_deref())?;
            write_overheads(
                cfg.scenario.tau_ra,
                cfg.scenario.subarrays,
                open(common.out.as_deref())?,
            )?;
        }
        Command::Calibrate { common, samples, seed } => {
            let cfg = load(common.config.as_deref())?;
            write_calibration(&cfg.scenario, samples, seed, open(common.out.as_deref())?)?;
        }
    }
    Ok(())
}
