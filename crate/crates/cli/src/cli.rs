use std::io::Write;
use std::path::PathBuf;

use amcontrast_core::ambiguity::AmbiguityConfig;
use amcontrast_core::margin::MarginPreset;
use clap::{Args, Parser, Subcommand};

use crate::commands::{self, AblateArgs, AmbiguityArgs, EvalArgs, SynthArgs, TrainArgs};
use crate::config::{MarginSettings, RunConfig, SceneName};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "amcontrast",
    version,
    about = "Ambiguity-aware adaptive-margin contrastive training on synthetic point clouds"
)]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic scene.
    Synth(SynthOpts),
    /// Per-point ambiguities and margins of a cloud.
    Ambiguity(AmbiguityOpts),
    /// Train a model; writes model.bin and curve.csv.
    Train(TrainOpts),
    /// Score a trained model on a cloud.
    Eval(EvalOpts),
    /// Margin-preset sweep over several seeds.
    Ablate(AblateOpts),
}

#[derive(Debug, Args)]
pub struct ConfigOpt {
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SceneOpts {
    #[arg(long, value_parser = clap::value_parser!(SceneName))]
    pub scene: Option<SceneName>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub boundary: Option<f64>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cell: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AmbiguityOptsK {
    /// Neighbourhood size K.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MarginOpts {
    /// Named margin setting.
    #[arg(long, value_parser = parse_preset)]
    pub margin: Option<MarginPreset>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Replace negative margins by zero.
    #[arg(long)]
    pub clamp: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SynthOpts {
    #[command(flatten)]
    pub config: ConfigOpt,
    #[command(flatten)]
    pub scene: SceneOpts,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output cloud file.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AmbiguityOpts {
    #[command(flatten)]
    pub config: ConfigOpt,
    /// Input cloud file.
    pub input: PathBuf,
    #[command(flatten)]
    pub amb: AmbiguityOptsK,
    #[command(flatten)]
    pub margin: MarginOpts,
    /// CSV output.
    #[arg(short, long, default_value = "amb.csv")]
    pub output: PathBuf,
    /// Also write a grey-coded PLY.
    #[arg(long)]
    pub ply: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainingOpts {
    /// Cloud file to train on instead of the configured scene.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub scene: SceneOpts,
    #[arg(long)]
    pub scene_seed: Option<u64>,
    #[command(flatten)]
    pub amb: AmbiguityOptsK,
    #[command(flatten)]
    pub margin: MarginOpts,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainOpts {
    #[command(flatten)]
    pub config: ConfigOpt,
    #[command(flatten)]
    pub training: TrainingOpts,
    /// Weight initialisation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalOpts {
    #[command(flatten)]
    pub config: ConfigOpt,
    #[arg(long)]
    pub model: PathBuf,
    /// Cloud to score.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub amb: AmbiguityOptsK,
}

#[derive(Debug, Args)]
pub struct AblateOpts {
    #[command(flatten)]
    pub config: ConfigOpt,
    #[command(flatten)]
    pub training: TrainingOpts,
    /// Comma-separated initialisation seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    /// Comma-separated presets; defaults to the full ablation grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_preset)]
    pub presets: Vec<MarginPreset>,
    /// Held-out cloud to score.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// CSV output; defaults to ablate.csv in the output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl clap::ValueEnum for SceneName {
    fn value_variants<'a>() -> &'a [Self] {
        &[
            SceneName::TwoPlane,
            SceneName::Checkerboard,
            SceneName::Clusters,
        ]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(commands::scene_name(
            *self,
        )))
    }
}

fn parse_preset(s: &str) -> std::result::Result<MarginPreset, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = MarginPreset::ALL.iter().map(|p| p.name()).collect();
        format!(
            "unknown preset {s:?} (expected one of {})",
            names.join(", ")
        )
    })
}

fn base_config(opt: &ConfigOpt) -> Result<RunConfig> {
    match &opt.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn apply_scene(cfg: &mut RunConfig, s: &SceneOpts) {
    let scene = &mut cfg.scene;
    if let Some(k) = s.scene {
        scene.kind = k;
    }
    if let Some(n) = s.n {
        scene.n = n;
    }
    if let Some(v) = s.noise {
        scene.noise = v;
    }
    if let Some(v) = s.boundary {
        scene.boundary = Some(v);
    }
    if let Some(v) = s.rows {
        scene.rows = v;
    }
    if let Some(v) = s.cell {
        scene.cell = Some(v);
    }
}

fn apply_amb(cfg: &mut AmbiguityConfig, a: &AmbiguityOptsK) {
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(b) = a.beta {
        cfg.beta = b;
    }
}

fn margin_flags(m: &MarginOpts) -> MarginSettings {
    MarginSettings {
        preset: m.margin,
        mu: m.mu,
        nu: m.nu,
        clamp: m.clamp,
    }
}

fn apply_training(cfg: &mut RunConfig, t: &TrainingOpts) {
    apply_scene(cfg, &t.scene);
    if let Some(p) = &t.input {
        cfg.scene.input = Some(p.clone());
    }
    if let Some(s) = t.scene_seed {
        cfg.scene.seed = s;
    }
    apply_amb(&mut cfg.train.ambiguity, &t.amb);
    cfg.margin = cfg.margin.overridden_by(&margin_flags(&t.margin));
    let tr = &mut cfg.train;
    if let Some(v) = t.tau {
        tr.contrast.tau = v;
    }
    if let Some(v) = t.lr {
        tr.lr = v;
    }
    if let Some(v) = t.epochs {
        tr.epochs = v;
    }
    if let Some(v) = t.momentum {
        tr.momentum = v;
    }
    if let Some(v) = t.lambda {
        tr.lambda = v;
    }
    if let Some(d) = &t.out {
        cfg.output_dir = d.clone();
    }
}

/// Runs one parsed command line, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Synth(o) => {
            let mut config = base_config(&o.config)?;
            apply_scene(&mut config, &o.scene);
            if let Some(s) = o.seed {
                config.scene.seed = s;
            }
            commands::synth(
                &SynthArgs {
                    config,
                    output: o.output.clone(),
                },
                out,
            )
        }
        Command::Ambiguity(o) => {
            let config = base_config(&o.config)?;
            let mut amb = config.train.ambiguity;
            apply_amb(&mut amb, &o.amb);
            commands::ambiguity(
                &AmbiguityArgs {
                    input: o.input.clone(),
                    ambiguity: amb,
                    margin: config.margin.overridden_by(&margin_flags(&o.margin)),
                    csv: o.output.clone(),
                    ply: o.ply.clone(),
                },
                out,
            )
        }
        Command::Train(o) => {
            let mut config = base_config(&o.config)?;
            apply_training(&mut config, &o.training);
            if let Some(s) = o.seed {
                config.net.seed = s;
            }
            commands::train_cmd(&TrainArgs { config }, out)
        }
        Command::Eval(o) => {
            let config = base_config(&o.config)?;
            let mut amb = config.train.ambiguity;
            apply_amb(&mut amb, &o.amb);
            commands::eval(
                &EvalArgs {
                    model: o.model.clone(),
                    input: o.input.clone(),
                    ambiguity: amb,
                },
                out,
            )
        }
        Command::Ablate(o) => {
            let mut config = base_config(&o.config)?;
            apply_training(&mut config, &o.training);
            let presets = if o.presets.is_empty() {
                MarginPreset::ABLATION.to_vec()
            } else {
                o.presets.clone()
            };
            let output = o
                .output
                .clone()
                .unwrap_or_else(|| config.output_dir.join("ablate.csv"));
            commands::ablate(
                &AblateArgs {
                    config,
                    seeds: o.seeds.clone(),
                    presets,
                    eval: o.eval.clone(),
                    output,
                },
                out,
            )
        }
    }
}
