use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stepsense::config::PipelineConfig;
use stepsense::harness::Scenario;
use stepsense::pipeline::{self, Workspace};
use stepsense::{Error, Result};

/// Emotion score estimation from footstep floor vibration.
#[derive(Parser, Debug)]
#[command(name = "stepsense", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Working directory holding every input and output file.
    #[arg(long, global = true, default_value = ".")]
    workspace: PathBuf,
    /// JSON config; defaults to <workspace>/config.json when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides population.persons.
    #[arg(long, global = true)]
    persons: Option<usize>,
    /// Overrides population.minutes_per_person.
    #[arg(long, global = true)]
    minutes: Option<f64>,
    /// Overrides evaluation.scenario (A or B).
    #[arg(long, global = true)]
    scenario: Option<Scenario>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render the synthetic walking corpus.
    Synth,
    /// Repair clipping, detect and segment footsteps.
    Preprocess,
    /// Extract the feature table.
    Extract,
    /// Train the general (pruned) model for one target.
    TrainGeneral(Target),
    /// Fine-tune the general model with gait-similarity weights.
    Personalize(Target),
    /// Evaluate the configured method, or one saved model.
    Evaluate(EvaluateArgs),
    /// Run the feature-set x personalization x pruning grid.
    Ablate,
    /// Write the feature-quadrant deviation heatmap.
    Heatmap,
    /// Print the effective configuration.
    Config,
}

#[derive(Args, Debug)]
struct Target {
    /// Target person id; defaults to the first person.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Checkpoint to score instead of running the full protocol.
    #[arg(long, requires = "target")]
    model: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
}

fn load_config(c: &Common) -> Result<PipelineConfig> {
    let path = c.config.clone().or_else(|| {
        let p = c.workspace.join("config.json");
        p.exists().then_some(p)
    });
    let mut cfg = match path {
        Some(p) => PipelineConfig::from_file(&p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(p) = c.persons {
        cfg.population.persons = p;
    }
    if let Some(m) = c.minutes {
        cfg.population.minutes_per_person = m;
    }
    if let Some(s) = c.scenario {
        cfg.evaluation.scenario = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn default_target(cfg: &PipelineConfig, ws: &Workspace, t: Option<String>) -> Result<String> {
    if let Some(t) = t {
        return Ok(t);
    }
    if let Some(t) = cfg.evaluation.targets.first() {
        return Ok(t.clone());
    }
    let path = ws.path(pipeline::FEATURES);
    let table = stepsense::features::table::FeatureTable::read(&path)?;
    table
        .persons()
        .into_iter()
        .next()
        .ok_or_else(|| Error::Empty("feature table".into()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let ws = Workspace::new(&cli.common.workspace)?;
    let out = match cli.command {
        Command::Synth => pipeline::synth(&cfg, &ws)?,
        Command::Preprocess => pipeline::preprocess(&cfg, &ws)?.0,
        Command::Extract => pipeline::extract(&cfg, &ws)?,
        Command::TrainGeneral(t) => {
            let target = default_target(&cfg, &ws, t.target)?;
            pipeline::train_general(&cfg, &ws, &target)?
        }
        Command::Personalize(t) => {
            let target = default_target(&cfg, &ws, t.target)?;
            pipeline::personalize(&cfg, &ws, &target)?
        }
        Command::Evaluate(a) => match (a.model, a.target) {
            (Some(m), Some(t)) => pipeline::evaluate(&cfg, &ws, Some((&m, &t)))?,
            _ => pipeline::evaluate(&cfg, &ws, None)?,
        },
        Command::Ablate => pipeline::ablate(&cfg, &ws)?,
        Command::Heatmap => pipeline::heatmap(&cfg, &ws)?,
        Command::Config => {
            print!("{}", cfg.to_json());
            return Ok(());
        }
    };
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
