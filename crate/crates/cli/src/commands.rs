use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use amcontrast_core::ambiguity::{self, AmbiguityConfig, AmbiguityMap};
use amcontrast_core::cloud::{generate_scene, PointCloud};
use amcontrast_core::knn::NeighborIndex;
use amcontrast_core::margin::{self, MarginPreset};
use amcontrast_core::model::{evaluate, train, Metrics, NetConfig, ParamLayout, TrainConfig};
use amcontrast_core::Error as CoreError;

use crate::blob::{self, Model};
use crate::config::{MarginSettings, RunConfig, SceneName};
use crate::error::{CliError, Result};
use crate::tables::{self, AblationRow};
use crate::{ascii, ply};

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

/// Cloud named by the config, or the scene it describes.
pub fn scene_cloud(cfg: &RunConfig) -> Result<PointCloud> {
    match &cfg.scene.input {
        Some(path) => ascii::load(path),
        None => Ok(generate_scene(&cfg.scene.spec())?),
    }
}

/// Layer-0 ambiguities, with K clamped to the cloud size.
pub fn ambiguity_of(cloud: &PointCloud, cfg: &AmbiguityConfig) -> Result<AmbiguityMap> {
    let cfg = AmbiguityConfig {
        k: cfg.k.min(cloud.len()),
        ..*cfg
    };
    cfg.validate()?;
    let index = NeighborIndex::build(cloud.positions())?;
    Ok(ambiguity::ambiguity_map(cloud, &index, &cfg, 0)?)
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub config: RunConfig,
    pub output: PathBuf,
}

pub fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let s = &args.config.scene;
    let classes = args.config.scene.spec().num_classes();
    if s.n < classes.max(2) {
        return Err(CliError::Usage(format!(
            "--n {} is fewer points than the {classes} classes of the scene",
            s.n
        )));
    }
    let cloud = generate_scene(&s.spec())?;
    ascii::save(&cloud, &args.output)?;
    writeln!(out, "n={} classes={}", cloud.len(), cloud.num_classes()).map_err(out_err)
}

#[derive(Debug, Clone)]
pub struct AmbiguityArgs {
    pub input: PathBuf,
    pub ambiguity: AmbiguityConfig,
    pub margin: MarginSettings,
    pub csv: PathBuf,
    pub ply: Option<PathBuf>,
}

pub fn ambiguity(args: &AmbiguityArgs, out: &mut dyn Write) -> Result<()> {
    let cloud = ascii::load(&args.input)?;
    if args.ambiguity.k > cloud.len() {
        return Err(CoreError::NeighborhoodTooLarge {
            k: args.ambiguity.k,
            n: cloud.len(),
        }
        .into());
    }
    args.ambiguity.validate()?;
    let index = NeighborIndex::build(cloud.positions())?;
    let map = ambiguity::ambiguity_map(&cloud, &index, &args.ambiguity, 0)?;
    let spec = args.margin.spec();
    spec.validate()?;
    let margins = margin::margins(&map, &spec);
    write_file(&args.csv, tables::amb_csv(&map.values, &margins))?;
    if let Some(path) = &args.ply {
        ply::save_ambiguity(path, &cloud, &map.values)?;
    }
    writeln!(
        out,
        "points={} band={} mean_a={}",
        cloud.len(),
        map.band().count(),
        map.values.iter().sum::<f64>() / map.len() as f64
    )
    .map_err(out_err)
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub config: RunConfig,
}

pub fn train_cmd(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = &args.config;
    let cloud = scene_cloud(cfg)?;
    let tc = cfg.train_config();
    log::info!(
        "training on {} points for {} epochs",
        cloud.len(),
        tc.epochs
    );
    let (params, log) = train(&cloud, &cfg.net, &tc)?;
    let dir = &cfg.output_dir;
    save_model(
        &Model {
            net: cfg.net.clone(),
            params,
        },
        &dir.join("model.bin"),
    )?;
    write_file(&dir.join("curve.csv"), tables::curve_csv(&log))?;
    if let Some(last) = log.last() {
        writeln!(
            out,
            "epochs={} l_joint={} oa={}",
            log.len(),
            last.l_joint,
            last.oa
        )
        .map_err(out_err)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub ambiguity: AmbiguityConfig,
}

pub fn eval_metrics(args: &EvalArgs) -> Result<Metrics> {
    let model = blob::load(&args.model)?;
    let cloud = ascii::load(&args.input)?;
    let expected = ParamLayout::new(&model.net, 3 + cloud.feature_dims(), cloud.num_classes());
    if model.params.layout() != &expected {
        return Err(CliError::Data(format!(
            "model expects input width {} and {} classes, cloud has {} and {}",
            model.params.layout().input_dim(),
            model.params.layout().num_classes(),
            3 + cloud.feature_dims(),
            cloud.num_classes()
        )));
    }
    let map = ambiguity_of(&cloud, &args.ambiguity)?;
    Ok(evaluate(&model.params, &cloud, &model.net, &map)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |v| format!("{v}"))
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let m = eval_metrics(args)?;
    let band = m
        .boundary_band_acc
        .map_or_else(|| "n/a".into(), |v| format!("{v:.4}"));
    let text = format!(
        "metric             value\n\
         OA                 {:.4}\n\
         mACC               {:.4}\n\
         mIoU               {:.4}\n\
         boundary_band_acc  {band}\n\
         oa,macc,miou,boundary_band_acc\n\
         {},{},{},{}\n",
        m.oa,
        m.macc,
        m.miou,
        m.oa,
        m.macc,
        m.miou,
        fmt_opt(m.boundary_band_acc)
    );
    out.write_all(text.as_bytes()).map_err(out_err)
}

#[derive(Debug, Clone)]
pub struct AblateArgs {
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub presets: Vec<MarginPreset>,
    /// Held-out scene; the training scene is scored when absent.
    pub eval: Option<PathBuf>,
    pub output: PathBuf,
}

/// One training run per preset and seed, scored on the evaluation cloud.
pub fn ablation_rows(
    args: &AblateArgs,
    mut progress: impl FnMut(&AblationRow),
) -> Result<Vec<AblationRow>> {
    let cfg = &args.config;
    let cloud = scene_cloud(cfg)?;
    let held_out = args.eval.as_deref().map(ascii::load).transpose()?;
    let scored = held_out.as_ref().unwrap_or(&cloud);
    let map = ambiguity_of(scored, &cfg.train.ambiguity)?;
    let mut rows = Vec::with_capacity(args.presets.len() * args.seeds.len());
    for &preset in &args.presets {
        for &seed in &args.seeds {
            let net = NetConfig {
                seed,
                ..cfg.net.clone()
            };
            let tc = TrainConfig {
                margin: preset.spec(),
                ..cfg.train.clone()
            };
            log::info!("ablate {} seed {seed}", preset.name());
            let (params, _) = train(&cloud, &net, &tc)?;
            let m = evaluate(&params, scored, &net, &map)?;
            let row = AblationRow {
                preset: preset.name().to_string(),
                seed,
                oa: m.oa,
                miou: m.miou,
                boundary_band_acc: m.boundary_band_acc,
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn ablate(args: &AblateArgs, out: &mut dyn Write) -> Result<()> {
    let mut failed = None;
    let rows = ablation_rows(args, |r| {
        if let Err(e) = writeln!(
            out,
            "{} seed {}: oa={:.4} miou={:.4} band={}",
            r.preset,
            r.seed,
            r.oa,
            r.miou,
            fmt_opt(r.boundary_band_acc)
        ) {
            failed.get_or_insert(e);
        }
    })?;
    if let Some(e) = failed {
        return Err(out_err(e));
    }
    write_file(&args.output, tables::ablate_csv(&rows))
}

/// Scene name as accepted on the command line.
pub fn scene_name(s: SceneName) -> &'static str {
    match s {
        SceneName::TwoPlane => "two-plane",
        SceneName::Checkerboard => "checkerboard",
        SceneName::Clusters => "clusters",
    }
}

fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_file(path, blob::encode(model))
}
