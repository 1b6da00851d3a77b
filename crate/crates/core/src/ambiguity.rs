//! Per-point ambiguity from the geometry of labelled neighbourhoods.
//!
//! For an anchor with intra set `N+` (anchor included) and inter set `N-`,
//! the closeness centralities are `cc+ = |N+| / d+` and `cc- = |N-| / d-`
//! where `d±` are sums of squared distances. Ambiguity is
//!
//! ```text
//! a = 0                                   if |N+| = K
//! a = 1 / (1 + exp(beta * (cc+ - cc-)))   if 1 < |N+| < K
//! a = 1                                   if |N+| = 1
//! ```

use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::knn::{self, NeighborIndex, NeighborPartition};
use crate::math;

/// Beyond this `|beta * (cc+ - cc-)|` the sigmoid is returned saturated.
pub const SIGMOID_SATURATION: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityConfig {
    pub beta: f64,
    /// Neighbourhood size K.
    pub k: usize,
    /// Floor applied to squared-distance sums before dividing.
    pub epsilon: f64,
}

impl Default for AmbiguityConfig {
    fn default() -> Self {
        Self {
            beta: 0.04,
            k: 24,
            epsilon: 1e-12,
        }
    }
}

impl AmbiguityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "K must be >= 2, got {}",
                self.k
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-point ambiguities of one resolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityMap {
    pub values: Vec<f64>,
    pub layer: usize,
}

impl AmbiguityMap {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices with strictly positive ambiguity.
    pub fn band(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, _)| i)
    }
}

/// Closeness centrality `count / max(dist_sum, epsilon)`.
pub fn closeness(count: usize, dist_sum: f64, epsilon: f64) -> f64 {
    count as f64 / dist_sum.max(epsilon)
}

/// `1 / (1 + exp(beta * (cc_plus - cc_minus)))`, saturating for large arguments.
pub fn inverse_sigmoid(cc_plus: f64, cc_minus: f64, beta: f64) -> f64 {
    let z = beta * (cc_plus - cc_minus);
    if z > SIGMOID_SATURATION {
        0.0
    } else if z < -SIGMOID_SATURATION {
        1.0
    } else {
        1.0 / (1.0 + math::exp(z))
    }
}

/// Ambiguity of one anchor. The full-neighbourhood count is the partition's
/// own size, so clamped K at coarse layers keeps the `a = 0` branch meaning
/// "every neighbour shares the label".
pub fn ambiguity_point(part: &NeighborPartition, cfg: &AmbiguityConfig) -> f64 {
    let intra = part.intra.len();
    if intra == part.k() {
        0.0
    } else if intra == 1 {
        1.0
    } else {
        let cc_plus = closeness(intra, part.d_plus, cfg.epsilon);
        let cc_minus = closeness(part.inter.len(), part.d_minus, cfg.epsilon);
        inverse_sigmoid(cc_plus, cc_minus, cfg.beta)
    }
}

/// Ambiguity of every point of `cloud`, using `index` built over its positions.
pub fn ambiguity_map(
    cloud: &PointCloud,
    index: &NeighborIndex,
    cfg: &AmbiguityConfig,
    layer: usize,
) -> Result<AmbiguityMap> {
    let parts = knn::partition_all(index, cloud.labels(), cfg.k)?;
    Ok(from_partitions(&parts, cfg, layer))
}

pub fn from_partitions(
    parts: &[NeighborPartition],
    cfg: &AmbiguityConfig,
    layer: usize,
) -> AmbiguityMap {
    AmbiguityMap {
        values: parts.iter().map(|p| ambiguity_point(p, cfg)).collect(),
        layer,
    }
}
