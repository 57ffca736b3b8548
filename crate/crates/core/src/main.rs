use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use spiking_actor::harness::{self, AgreeOptions, EvalMode, RunConfig};
use spiking_actor::net::checkpoint::Checkpoint;
use spiking_actor::spikesim::format_agreement_table;

#[derive(Parser)]
#[command(
    name = "spiking-actor",
    version,
    about = "Train a soft-LIF actor with PPO and run it as a spiking network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one actor-critic per configured seed.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Play evaluation episodes and tabulate how they ended.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Actor or spiking-actor checkpoint; omit with --random.
        #[arg(long, required_unless_present = "random")]
        checkpoint: Option<PathBuf>,
        /// Evaluate the uniformly random policy instead of a checkpoint.
        #[arg(long, conflicts_with = "checkpoint")]
        random: bool,
        #[arg(long, default_value = "rate")]
        mode: EvalMode,
        /// Defaults to the config's eval.episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Sample actions from the policy instead of taking the argmax.
        #[arg(long)]
        sample: bool,
        /// Write the report as TOML here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a rate actor into a spiking-actor checkpoint.
    Convert {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override spiking.quant_bits; 0 keeps float weights.
        #[arg(long)]
        quant_bits: Option<u32>,
    },
    /// Audit rate versus spike action agreement.
    Agree {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,50,200,1000")]
        windows: Vec<u32>,
        /// Precisions to audit; "float" or a bit width.
        #[arg(long, value_delimiter = ',', default_value = "float,16,8,4")]
        quant: Vec<String>,
        /// Defaults to the config's spiking.dt.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        observations: usize,
    },
    /// Aggregate curve files and evaluation reports across seeds.
    Report {
        /// Curve files (.tsv) and evaluation reports (.toml).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Step bucket width for curves; by default each logged step is a bucket.
        #[arg(long)]
        bucket: Option<u64>,
        /// Write the plot-ready series here.
        #[arg(long)]
        series: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_quant(items: &[String]) -> Result<Vec<Option<u32>>> {
    items
        .iter()
        .map(|q| match q.trim() {
            "float" => Ok(None),
            bits => Ok(Some(bits.parse().with_context(|| format!("bad precision {bits:?}"))?)),
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            let manifest = harness::cmd_train(&cfg)?;
            for run in &manifest.runs {
                println!(
                    "seed {}: {} steps, final greedy return {:.3}, actor {}",
                    run.seed,
                    run.global_step,
                    run.final_mean_reward,
                    cfg.out_dir.join(&run.actor).display()
                );
            }
            println!("manifest {}", cfg.out_dir.join(harness::Manifest::FILE_NAME).display());
        }
        Command::Eval {
            config,
            checkpoint,
            random,
            mode,
            episodes,
            sample,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let ck = match (&checkpoint, random) {
                (Some(p), false) => Some(Checkpoint::load(p)?),
                _ => None,
            };
            let episodes = episodes.unwrap_or(cfg.config.eval.episodes);
            let report = harness::cmd_eval(&cfg, ck.as_ref(), mode, !sample, episodes)?;
            println!("{}", report.summary());
            if let Some(out) = out {
                write(&out, &report.to_toml()?)?;
            }
        }
        Command::Convert {
            config,
            checkpoint,
            out,
            quant_bits,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(bits) = quant_bits {
                cfg.config.spiking.quant_bits = (bits > 0).then_some(bits);
            }
            let converted = harness::cmd_convert(&cfg, &Checkpoint::load(&checkpoint)?)?;
            write(&out, &converted.to_toml()?)?;
            println!(
                "activity scale {:.6}, written to {}",
                converted.activity_scale,
                out.display()
            );
        }
        Command::Agree {
            config,
            checkpoint,
            windows,
            quant,
            dt,
            observations,
        } => {
            let cfg = RunConfig::load(&config)?;
            let opts = AgreeOptions {
                windows,
                quant_bits: parse_quant(&quant)?,
                dt: dt.unwrap_or(cfg.config.spiking.dt),
                observations,
            };
            let rows = harness::cmd_agree(&cfg, &Checkpoint::load(&checkpoint)?, &opts)?;
            print!("{}", format_agreement_table(&rows));
        }
        Command::Report { inputs, bucket, series } => {
            let report = harness::cmd_report(&inputs, bucket)?;
            print!("{}", report.table());
            if let Some(path) = series {
                write(&path, &report.series_tsv())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
