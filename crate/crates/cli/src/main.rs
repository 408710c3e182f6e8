use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use prlx::distributed::{sampler_loop, TcpLink, WORKER_INDEX_VAR};
use prlx::run::{cmd_evaluate, cmd_plot, cmd_train, inspect_replay, PolicySource, RunConfig, TrainOptions};
use prlx::{Error, Result};

#[derive(Parser)]
#[command(name = "prlx", version, about = "Distributed continuous-control training on a surrogate walker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// `key = value` run configuration; defaults apply to missing keys.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set run.seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(&self.overrides)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy; artifacts go to `run.output_dir`.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Continue from the latest checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Score a policy over seeded trials and print JSON lines.
    Evaluate {
        /// Checkpoint bundle, network checkpoint or ensemble manifest.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        policy: Option<PathBuf>,
        /// Uniform random actions.
        #[arg(long)]
        random: bool,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON lines here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Summarize a replay snapshot.
    InspectReplay { path: PathBuf },
    /// Render a CSV log to SVG.
    Plot {
        input: PathBuf,
        #[arg(short, long, default_value = "curve.svg")]
        out: PathBuf,
        /// Column to plot against `step`.
        #[arg(long)]
        column: Option<String>,
    },
    /// Run one remote sampler against a socket trainer.
    Sampler {
        #[arg(long, env = "PRLX_BIND_ADDR")]
        connect: String,
        #[arg(long, env = WORKER_INDEX_VAR)]
        worker: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the full default configuration.
    Defaults,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, resume } => {
            let cfg = config.load()?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
                .map_err(|e| Error::InvalidArgument(format!("cannot install signal handler: {e}")))?;
            let summary = cmd_train(&cfg, &TrainOptions { resume, stop: Some(stop) })?;
            println!(
                "steps {} updates {} episodes {} -> {}",
                summary.steps,
                summary.updates,
                summary.episodes,
                summary.dir.display()
            );
        }
        Command::Evaluate {
            policy,
            random,
            trials,
            seed,
            out,
            config,
        } => {
            let mut eval = config.load()?.eval_config()?;
            if let Some(t) = trials {
                eval.trials = t;
            }
            if let Some(s) = seed {
                eval.seed_base = s;
            }
            let source = match (random, policy) {
                (true, _) | (false, None) => PolicySource::Random,
                (false, Some(p)) => PolicySource::Path(p),
            };
            let mut sink: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(io::stdout().lock()),
            };
            cmd_evaluate(&source, &eval, &mut sink)?;
            sink.flush()?;
        }
        Command::InspectReplay { path } => print!("{}", inspect_replay(path)?),
        Command::Plot { input, out, column } => {
            let skipped = cmd_plot(&input, &out, column.as_deref())?;
            if skipped > 0 {
                eprintln!("skipped {skipped} unreadable rows");
            }
        }
        Command::Sampler { connect, worker, config } => {
            let cfg = config.load()?;
            let workers = cfg.worker_configs(cfg.seed(), cfg.int("train.random_steps"))?;
            let wc = workers.get(worker).ok_or_else(|| {
                Error::Config {
                    key: WORKER_INDEX_VAR.into(),
                    reason: format!("worker index {worker} is not below {}", workers.len()),
                }
            })?;
            let mut link = TcpLink::connect(connect.as_str(), worker as u32)?;
            let report = sampler_loop(wc, &mut link)?;
            println!("episodes {} transitions {}", report.episodes, report.transitions_shipped);
        }
        Command::Defaults => print!("{}", RunConfig::default().to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
