use std::path::PathBuf;
use std::process::ExitCode;

use bait::commands::{cmd_augment, cmd_eval, cmd_ingest, cmd_predict, cmd_train, cmd_tune, render_report};
use bait::config::RunConfig;
use bait::{BaitError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bait", version, about = "Hierarchical stance detection over precomputed sentence embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for outputs.
    #[arg(long, default_value = "bait-out")]
    out_dir: PathBuf,
    /// Override a config value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and cross-check CSVs and stores, print the stance distribution.
    Ingest(Common),
    /// Train one model and write its checkpoint and metrics.
    Train {
        #[command(flatten)]
        common: Common,
        /// relatednet, topknet or agreemnet.
        #[arg(long)]
        model: Option<String>,
        /// Weight the loss by inverse class frequency.
        #[arg(long)]
        weighted_loss: bool,
        /// Extra training samples from `bait augment`.
        #[arg(long)]
        synthetic: Option<PathBuf>,
    },
    /// Search hyperparameters with a Gaussian-process surrogate.
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        /// Search space file.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Total number of trials, counting those already in the history.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Evaluate the two-stage model on a labelled test set.
    Eval(Common),
    /// Synthesize negated headlines and/or adapt ARC.
    Augment(Common),
    /// Label a stances CSV that has no Stance column.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Input CSV.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn resolve(common: &Common, extra: &[(&str, Option<String>)]) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| BaitError::Config(format!("--set {kv:?} needs KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            cfg.set(k, v.clone())?;
        }
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", seed.to_string())?;
    }
    log::info!("seed {}", cfg.seed()?);
    Ok(cfg)
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let cfg = resolve(&common, &[])?;
            let (_, text) = cmd_ingest(&cfg, &common.out_dir)?;
            print!("{text}");
        }
        Command::Train { common, model, weighted_loss, synthetic } => {
            let cfg = resolve(
                &common,
                &[
                    ("model", model),
                    ("weighted_loss", weighted_loss.then(|| "true".to_string())),
                    ("synthetic_stances", path_str(&synthetic)),
                ],
            )?;
            let s = cmd_train(&cfg, &common.out_dir)?;
            println!(
                "{}: {} parameters, best epoch {} (validation UACA {:.4})",
                s.model.as_str(),
                s.parameter_count,
                s.best_epoch,
                s.best_val_uaca
            );
            if let Some(w) = &s.class_weights {
                println!("class counts {:?}, weights {w:?}", s.class_counts);
            }
            println!("checkpoint {}", s.checkpoint.display());
        }
        Command::Tune { common, model, space, budget } => {
            let cfg = resolve(
                &common,
                &[("model", model), ("space", path_str(&space)), ("budget", budget.map(|b| b.to_string()))],
            )?;
            let s = cmd_tune(&cfg, &common.out_dir)?;
            println!("{} trials; best objective {:?}", s.trials, s.best.objective);
            for (k, v) in &s.best.config {
                println!("  {k} = {v}");
            }
        }
        Command::Eval(common) => {
            let cfg = resolve(&common, &[])?;
            let s = cmd_eval(&cfg, &common.out_dir)?;
            print!("{}", render_report(&s));
        }
        Command::Augment(common) => {
            let cfg = resolve(&common, &[])?;
            let s = cmd_augment(&cfg, &common.out_dir)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Predict { common, input } => {
            let cfg = resolve(&common, &[("input", path_str(&input))])?;
            let path = cmd_predict(&cfg, &common.out_dir)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bait: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
