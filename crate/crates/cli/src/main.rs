//! `newsrank`: file-artifact pipeline from raw events to evaluation reports.

mod commands;
mod config;
mod error;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use newsrank::features::FeatureSetName;
use newsrank::ltr::ModelKind;

use crate::config::{Config, EntityMode};
use crate::error::CliError;
use crate::workspace::Run;

#[derive(Parser)]
#[command(name = "newsrank", version, about = "Rank news-event triples against event descriptions")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML or JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Work directory holding every artifact.
    #[arg(long, global = true, default_value = ".")]
    dir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, alias = "features", value_parser = parse_feature_set)]
    feature_set: Option<FeatureSetName>,
    #[arg(long, global = true, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Drop R pairs and train or rank on VR vs NR only.
    #[arg(long, global = true)]
    binary_labels: bool,
    #[arg(long, global = true, value_enum)]
    entity_mode: Option<EntityMode>,
    /// Metric cutoffs, e.g. `5,10`.
    #[arg(long, global = true, value_delimiter = ',')]
    metric_k: Option<Vec<usize>>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with judgments and a gazetteer.
    Synth {
        #[arg(long, default_value = "raw")]
        out: PathBuf,
    },
    /// Normalize raw queries and candidates and drop banned actions.
    Ingest {
        #[arg(long, default_value = commands::RAW_QUERIES)]
        queries: PathBuf,
        #[arg(long, default_value = commands::RAW_CANDIDATES)]
        candidates: PathBuf,
    },
    /// Pair queries with same-day candidates that share a word.
    Pairs,
    /// Annotate queries and candidates with entities.
    Link {
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Compute feature vectors for every pair.
    Featurize,
    /// Aggregate judgments into gold labels.
    Labels {
        #[arg(long, default_value = commands::RAW_JUDGMENTS)]
        judgments: PathBuf,
    },
    /// Attach gold labels and split queries by date.
    Split,
    /// Train one model on the training split.
    Train,
    /// Grid-search hyperparameters on the validation split.
    Tune,
    /// Rank featurized pairs with a trained model.
    Rank {
        /// Model file; defaults to the one `train` writes for the current flags.
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Featurized pairs; defaults to every featurized pair.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a model on a split.
    Evaluate {
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Tabulate reports and optionally compare two of them.
    Report {
        /// Report files; defaults to every report in `reports/`.
        reports: Vec<PathBuf>,
        /// Two reports to compare with a paired t-test.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        compare: Option<Vec<PathBuf>>,
        #[arg(long, default_value = "NDCG@10")]
        metric: String,
    },
}

fn parse_feature_set(s: &str) -> Result<FeatureSetName, String> {
    s.parse()
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

impl Global {
    fn config(&self) -> Result<Config, CliError> {
        let mut config = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(f) = self.feature_set {
            config.feature_set = f;
        }
        if let Some(m) = self.model {
            config.model = m;
        }
        if let Some(e) = self.entity_mode {
            config.entity_mode = e;
        }
        if let Some(k) = &self.metric_k {
            config.metric_k = k.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let config = g.config()?;
    let binary = g.binary_labels;
    let name = match &cli.command {
        Command::Synth { .. } => "synth",
        Command::Ingest { .. } => "ingest",
        Command::Pairs => "pairs",
        Command::Link { .. } => "link",
        Command::Featurize => "featurize",
        Command::Labels { .. } => "labels",
        Command::Split => "split",
        Command::Train => "train",
        Command::Tune => "tune",
        Command::Rank { .. } => "rank",
        Command::Evaluate { .. } => "evaluate",
        Command::Report { .. } => "report",
    };
    let mut run = Run::new(&g.dir, &config, name);
    let manifest = match cli.command {
        Command::Synth { out } => {
            let out = run.path(out);
            commands::synth(&mut run, &out)?;
            "synth".to_string()
        }
        Command::Ingest { queries, candidates } => {
            let (q, c) = (run.path(queries), run.path(candidates));
            commands::ingest(&mut run, &q, &c)?;
            "ingest".to_string()
        }
        Command::Pairs => {
            commands::pairs(&mut run)?;
            "pairs".to_string()
        }
        Command::Link { gazetteer } => {
            commands::link(&mut run, gazetteer)?;
            "link".to_string()
        }
        Command::Featurize => {
            commands::featurize(&mut run)?;
            "featurize".to_string()
        }
        Command::Labels { judgments } => {
            let j = run.path(judgments);
            commands::labels(&mut run, &j)?;
            "labels".to_string()
        }
        Command::Split => {
            commands::split(&mut run)?;
            "split".to_string()
        }
        Command::Train => format!("train-{}", commands::train_cmd(&mut run, binary)?),
        Command::Tune => format!("tune-{}", commands::tune_cmd(&mut run, binary)?),
        Command::Rank { model_file, input } => {
            format!("rank-{}", commands::rank(&mut run, model_file, input, binary)?)
        }
        Command::Evaluate { model_file, split } => {
            format!("evaluate-{}", commands::evaluate_cmd(&mut run, model_file, &split, binary)?)
        }
        Command::Report {
            reports,
            compare,
            metric,
        } => {
            let pair = compare.map(|v| (v[0].clone(), v[1].clone()));
            commands::report(&mut run, reports, pair, &metric)?;
            "report".to_string()
        }
    };
    run.finish(&manifest)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
