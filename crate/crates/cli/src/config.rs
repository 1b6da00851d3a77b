//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [scene]      kind n noise seed rows boundary cell input
//! [ambiguity]  k beta
//! [contrast]   tau
//! [margin]     preset mu nu clamp
//! [net]        stages widths ratio aggregation_k head_width fps_start input_scale
//! [train]      lr epochs momentum lambda seed
//! [output]     dir
//! ```
//!
//! `#` and `;` start comment lines. Unknown sections and keys are errors.
//! A margin preset sets mu, nu and clamp together; explicit `mu`, `nu` or
//! `clamp` keys then override single fields.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use amcontrast_core::cloud::{SceneKind, SceneSpec};
use amcontrast_core::margin::{MarginPreset, MarginSpec};
use amcontrast_core::model::{NetConfig, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneName {
    TwoPlane,
    Checkerboard,
    Clusters,
}

impl FromStr for SceneName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two-plane" => Ok(SceneName::TwoPlane),
            "checkerboard" => Ok(SceneName::Checkerboard),
            "clusters" => Ok(SceneName::Clusters),
            _ => Err(format!(
                "unknown scene {s:?} (expected two-plane, checkerboard or clusters)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSettings {
    pub kind: SceneName,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    /// Two-plane rows; 0 picks the default.
    pub rows: usize,
    pub boundary: Option<f64>,
    pub cell: Option<f64>,
    /// Cloud file to use instead of generating a scene.
    pub input: Option<PathBuf>,
}

impl Default for SceneSettings {
    fn default() -> Self {
        Self {
            kind: SceneName::TwoPlane,
            n: 2048,
            noise: 0.02,
            seed: 0,
            rows: 0,
            boundary: None,
            cell: None,
            input: None,
        }
    }
}

impl SceneSettings {
    pub fn spec(&self) -> SceneSpec {
        let kind = match self.kind {
            SceneName::TwoPlane => SceneKind::TwoPlane {
                rows: self.rows,
                boundary: self.boundary,
            },
            SceneName::Checkerboard => SceneKind::Checkerboard { cell: self.cell },
            SceneName::Clusters => SceneKind::clusters(),
        };
        SceneSpec::new(kind, self.n, self.noise, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MarginSettings {
    pub preset: Option<MarginPreset>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub clamp: Option<bool>,
}

impl MarginSettings {
    pub fn spec(&self) -> MarginSpec {
        let mut spec = self.preset.unwrap_or(MarginPreset::S3dis).spec();
        if let Some(mu) = self.mu {
            spec.mu = mu;
        }
        if let Some(nu) = self.nu {
            spec.nu = nu;
        }
        if let Some(c) = self.clamp {
            spec.clamp_at_zero = c;
        }
        spec
    }

    /// Settings from `over` win field by field; a preset in `over` also
    /// discards explicit fields of `self`.
    pub fn overridden_by(&self, over: &MarginSettings) -> MarginSettings {
        let base = if over.preset.is_some() {
            MarginSettings {
                preset: over.preset,
                ..Default::default()
            }
        } else {
            *self
        };
        MarginSettings {
            preset: base.preset,
            mu: over.mu.or(base.mu),
            nu: over.nu.or(base.nu),
            clamp: over.clamp.or(base.clamp),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scene: SceneSettings,
    pub net: NetConfig,
    /// Training settings; its margin field is derived from `margin`.
    pub train: TrainConfig,
    pub margin: MarginSettings,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneSettings::default(),
            net: NetConfig::default(),
            train: TrainConfig::default(),
            margin: MarginSettings::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|(line, message)| CliError::Config {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Training settings with the margin resolved.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            margin: self.margin.spec(),
            ..self.train.clone()
        }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err((no, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or((no, format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err((no, format!("key {key:?} outside any section")));
            }
            let full = format!("{section}.{key}");
            if seen.contains(&full) {
                return Err((no, format!("duplicate key {full}")));
            }
            cfg.set(&section, key, value)
                .map_err(|m| (no, format!("{full}: {m}")))?;
            seen.push(full);
        }
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        match (section, key) {
            ("scene", "kind") => self.scene.kind = value.parse()?,
            ("scene", "n") => self.scene.n = num(value)?,
            ("scene", "noise") => self.scene.noise = num(value)?,
            ("scene", "seed") => self.scene.seed = num(value)?,
            ("scene", "rows") => self.scene.rows = num(value)?,
            ("scene", "boundary") => self.scene.boundary = Some(num(value)?),
            ("scene", "cell") => self.scene.cell = Some(num(value)?),
            ("scene", "input") => self.scene.input = Some(PathBuf::from(value)),
            ("ambiguity", "k") => self.train.ambiguity.k = num(value)?,
            ("ambiguity", "beta") => self.train.ambiguity.beta = num(value)?,
            ("contrast", "tau") => self.train.contrast.tau = num(value)?,
            ("margin", "preset") => {
                self.margin.preset = Some(value.parse().map_err(|e| format!("{e}"))?)
            }
            ("margin", "mu") => self.margin.mu = Some(num(value)?),
            ("margin", "nu") => self.margin.nu = Some(num(value)?),
            ("margin", "clamp") => self.margin.clamp = Some(num(value)?),
            ("net", "stages") => self.net.stages = num(value)?,
            ("net", "widths") => {
                self.net.widths = value
                    .split(',')
                    .map(|w| num(w.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            ("net", "ratio") => self.net.downsample_ratio = num(value)?,
            ("net", "aggregation_k") => self.net.aggregation_k = num(value)?,
            ("net", "head_width") => self.net.head_width = num(value)?,
            ("net", "fps_start") => self.net.fps_start = num(value)?,
            ("net", "input_scale") => self.net.input_scale = num(value)?,
            ("train", "lr") => self.train.lr = num(value)?,
            ("train", "epochs") => self.train.epochs = num(value)?,
            ("train", "momentum") => self.train.momentum = num(value)?,
            ("train", "lambda") => self.train.lambda = num(value)?,
            ("train", "seed") => self.net.seed = num(value)?,
            ("output", "dir") => self.output_dir = PathBuf::from(value),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = [
    "scene",
    "ambiguity",
    "contrast",
    "margin",
    "net",
    "train",
    "output",
];

fn num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse {value:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_defaults() {
        let c = RunConfig::parse("").unwrap();
        let t = c.train_config();
        assert_eq!(t.ambiguity.k, 24);
        assert_eq!(t.ambiguity.beta, 0.04);
        assert_eq!(t.lambda, 0.1);
        assert_eq!(t.lr, 0.01);
        assert_eq!(t.epochs, 100);
        assert_eq!(t.margin, MarginSpec::new(-1.0, 0.5));
    }

    #[test]
    fn sections_and_overrides() {
        let text = "# run\n[train]\nepochs = 7\nseed = 3\n[margin]\nnu = 0.2\npreset = const05\n[net]\nwidths = 4, 8\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.train.epochs, 7);
        assert_eq!(c.net.seed, 3);
        assert_eq!(c.net.widths, vec![4, 8]);
        assert_eq!(c.margin.spec(), MarginSpec::new(0.0, 0.2));
    }

    #[test]
    fn errors_name_line_and_key() {
        let err = RunConfig::parse("[train]\nepochs = 3\nlearning_rate = 0.1\n").unwrap_err();
        assert_eq!(err, (3, "train.learning_rate: unknown key".to_string()));
        assert_eq!(RunConfig::parse("[bogus]\n").unwrap_err().0, 1);
        assert!(RunConfig::parse("k = 3\n").is_err());
        assert!(RunConfig::parse("[train]\nlr = fast\n")
            .unwrap_err()
            .1
            .contains("train.lr"));
        assert!(RunConfig::parse("[train]\nlr = 1\nlr = 2\n").is_err());
        assert!(RunConfig::parse("[margin]\npreset = wide\n").is_err());
    }

    #[test]
    fn flag_preset_replaces_file_margin() {
        let file = MarginSettings {
            preset: Some(MarginPreset::Const05),
            mu: Some(2.0),
            ..Default::default()
        };
        let flags = MarginSettings {
            preset: Some(MarginPreset::Const0),
            ..Default::default()
        };
        assert_eq!(file.overridden_by(&flags).spec(), MarginSpec::new(0.0, 0.0));
        let flags = MarginSettings {
            nu: Some(0.1),
            ..Default::default()
        };
        assert_eq!(file.overridden_by(&flags).spec(), MarginSpec::new(2.0, 0.1));
    }
}
