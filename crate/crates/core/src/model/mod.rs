//! Desk-scale encoder-decoder point network trained with cross-entropy plus
//! the adaptive-margin contrastive loss on every decoder layer.

mod loss;
mod metrics;
mod net;
mod train;

pub use loss::{cross_entropy, cross_entropy_grad, joint_loss};
pub use metrics::{argmax_rows, Metrics};
pub use net::{build_layer_stack, forward, input_features, Forward, Graph, ParamLayout, Params};
pub use train::{
    evaluate, objective, objective_and_grad, predict, prepare, train, train_prepared, EpochLog,
    LayerTargets, Objective, Prepared,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::ambiguity::AmbiguityConfig;
use crate::contrast::ContrastConfig;
use crate::error::{Error, Result};
use crate::margin::MarginSpec;

/// Network shape. Encoder stage `s` (1-based) has `widths[s - 1]` channels
/// and shrinks its layer by `downsample_ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub stages: usize,
    pub widths: Vec<usize>,
    pub downsample_ratio: usize,
    /// Neighbours max-pooled by each encoder stage.
    pub aggregation_k: usize,
    pub head_width: usize,
    pub seed: u64,
    /// First point picked by farthest point sampling.
    pub fps_start: usize,
    /// Radius of the ball the centred input positions are scaled into.
    pub input_scale: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            stages: 2,
            widths: vec![32, 64],
            downsample_ratio: 4,
            aggregation_k: 8,
            head_width: 32,
            seed: 0,
            fps_start: 0,
            input_scale: 10.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::InvalidConfig("net.stages must be >= 1".into()));
        }
        if self.widths.len() != self.stages {
            return Err(Error::InvalidConfig(format!(
                "net.widths has {} entries for {} stages",
                self.widths.len(),
                self.stages
            )));
        }
        if self.widths.contains(&0) || self.head_width == 0 {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if self.downsample_ratio < 2 {
            return Err(Error::InvalidConfig("net.ratio must be >= 2".into()));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::InvalidConfig(
                "net.input_scale must be positive".into(),
            ));
        }
        if self.aggregation_k == 0 {
            return Err(Error::InvalidConfig(
                "net.aggregation_k must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Point counts of every layer for an input of `n` points.
    pub fn layer_sizes(&self, n: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let mut sizes = vec![n];
        for _ in 0..self.stages {
            let next = sizes.last().copied().unwrap_or(0) / self.downsample_ratio;
            if next < self.aggregation_k + 1 {
                return Err(Error::TooFewPoints {
                    n,
                    required: self.min_points(),
                });
            }
            sizes.push(next);
        }
        Ok(sizes)
    }

    /// Smallest input that survives every downsampling stage.
    pub fn min_points(&self) -> usize {
        let mut need = self.aggregation_k + 1;
        for _ in 0..self.stages {
            need *= self.downsample_ratio;
        }
        need
    }

    /// Channels of decoder output `s` (`s = 0` is full resolution).
    pub fn decoder_width(&self, s: usize) -> usize {
        if s == 0 {
            self.head_width
        } else {
            self.widths[s - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub momentum: f64,
    /// Weight of cross-entropy; the contrastive sum gets `1 - lambda`.
    pub lambda: f64,
    pub contrast: ContrastConfig,
    pub ambiguity: AmbiguityConfig,
    pub margin: MarginSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 100,
            momentum: 0.9,
            lambda: 0.1,
            contrast: ContrastConfig::default(),
            ambiguity: AmbiguityConfig::default(),
            margin: MarginSpec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "train.lr must be > 0, got {}",
                self.lr
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "train.lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "train.momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        self.contrast.validate()?;
        self.ambiguity.validate()?;
        self.margin.validate()
    }
}
