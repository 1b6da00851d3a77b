//! Point-cloud data model, synthetic labelled scenes and farthest point
//! sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math;

/// Labelled points with an optional block of per-point feature channels.
///
/// Features are stored row-major, `len() * feature_dims()` values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<[f64; 3]>,
    features: Vec<f64>,
    feature_dims: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl PointCloud {
    pub fn new(
        positions: Vec<[f64; 3]>,
        features: Vec<f64>,
        feature_dims: usize,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::InvalidCloud(
                "cloud must hold at least one point".into(),
            ));
        }
        if num_classes == 0 {
            return Err(Error::InvalidCloud("class count must be positive".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidCloud(format!(
                "{} labels for {} points",
                labels.len(),
                n
            )));
        }
        if features.len() != n * feature_dims {
            return Err(Error::InvalidCloud(format!(
                "{} feature values for {} points of {} dims",
                features.len(),
                n,
                feature_dims
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        if feature_dims > 0 {
            for (i, row) in features.chunks(feature_dims).enumerate() {
                if !row.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite { index: i });
                }
            }
        }
        for (i, &label) in labels.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    index: i,
                    label,
                    classes: num_classes,
                });
            }
        }
        Ok(Self {
            positions,
            features,
            feature_dims,
            labels,
            num_classes,
        })
    }

    /// Cloud without feature channels.
    pub fn from_positions(
        positions: Vec<[f64; 3]>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        Self::new(positions, Vec::new(), 0, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dims..(i + 1) * self.feature_dims]
    }

    pub fn feature_dims(&self) -> usize {
        self.feature_dims
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Sub-cloud made of the given source indices, in that order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let positions = indices.iter().map(|&i| self.positions[i]).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut features = Vec::with_capacity(indices.len() * self.feature_dims);
        for &i in indices {
            features.extend_from_slice(self.feature_row(i));
        }
        PointCloud {
            positions,
            features,
            feature_dims: self.feature_dims,
            labels,
            num_classes: self.num_classes,
        }
    }

    /// Copy with every position mapped through `f`.
    pub fn map_positions(&self, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Result<PointCloud> {
        let positions = self.positions.iter().map(|&p| f(p)).collect();
        PointCloud::new(
            positions,
            self.features.clone(),
            self.feature_dims,
            self.labels.clone(),
            self.num_classes,
        )
    }
}

/// Greedy farthest point sampling.
///
/// Starts at `start`, repeatedly adds the point farthest (squared Euclidean)
/// from the selected set, ties going to the smallest index. The selection is
/// returned sorted by source index together with the parent map into `cloud`.
pub fn fps_downsample(
    cloud: &PointCloud,
    target: usize,
    start: usize,
) -> Result<(PointCloud, Vec<usize>)> {
    let n = cloud.len();
    if target == 0 || target > n {
        return Err(Error::TargetOutOfRange { target, n });
    }
    if start >= n {
        return Err(Error::InvalidConfig(format!(
            "fps start {start} outside cloud of {n}"
        )));
    }
    let pos = cloud.positions();
    let mut min_d = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(target);
    let mut current = start;
    loop {
        taken[current] = true;
        selected.push(current);
        if selected.len() == target {
            break;
        }
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let d = math::dist2(&pos[i], &pos[current]);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if min_d[i] > best_d {
                best_d = min_d[i];
                best = i;
            }
        }
        current = best;
    }
    selected.sort_unstable();
    Ok((cloud.select(&selected), selected))
}

/// One resolution of a [`LayerStack`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub cloud: PointCloud,
    /// Index of each point in the previous layer; identity for layer 0.
    pub parent: Vec<usize>,
}

/// Input cloud followed by successively farthest-point-sampled subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    /// Builds a stack by repeated FPS to the given per-layer sizes.
    pub fn build(cloud: PointCloud, sizes: &[usize], start: usize) -> Result<Self> {
        let n = cloud.len();
        let mut layers = vec![Layer {
            cloud,
            parent: (0..n).collect(),
        }];
        for &size in sizes {
            let prev = &layers.last().expect("layer 0 exists").cloud;
            if size >= prev.len() {
                return Err(Error::TooFewPoints {
                    n: prev.len(),
                    required: size + 1,
                });
            }
            let (cloud, parent) = fps_downsample(prev, size, start.min(prev.len() - 1))?;
            layers.push(Layer { cloud, parent });
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, s: usize) -> &Layer {
        &self.layers[s]
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.cloud.len()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Lattice in the z = 0 plane, label 1 where `x > boundary`.
    ///
    /// Point `i` sits at `(i / rows, i % rows, 0)`. `boundary` defaults to
    /// the middle of the occupied columns.
    TwoPlane { rows: usize, boundary: Option<f64> },
    /// Square lattice, label = parity of `floor(x / cell) + floor(y / cell)`.
    /// `cell` defaults to half the lattice side.
    Checkerboard { cell: Option<f64> },
    /// Isotropic Gaussian blobs; point `i` is drawn from blob `i % centers.len()`
    /// and labelled with that blob's class.
    Clusters {
        centers: Vec<[f64; 3]>,
        classes: Vec<usize>,
        spread: f64,
    },
}

impl SceneKind {
    pub fn two_plane() -> Self {
        SceneKind::TwoPlane {
            rows: 0,
            boundary: None,
        }
    }

    pub fn checkerboard() -> Self {
        SceneKind::Checkerboard { cell: None }
    }

    /// Four classes on the corners of a square, blobs touching.
    pub fn clusters() -> Self {
        SceneKind::Clusters {
            centers: vec![
                [0.0, 0.0, 0.0],
                [6.0, 0.0, 0.0],
                [0.0, 6.0, 0.0],
                [6.0, 6.0, 0.0],
            ],
            classes: vec![0, 1, 2, 3],
            spread: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub n: usize,
    /// Standard deviation of the Gaussian jitter added to every coordinate.
    pub noise: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind, n: usize, noise: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise,
            seed,
        }
    }

    pub fn num_classes(&self) -> usize {
        match &self.kind {
            SceneKind::TwoPlane { .. } | SceneKind::Checkerboard { .. } => 2,
            SceneKind::Clusters { classes, .. } => classes.iter().max().map_or(0, |&c| c + 1),
        }
    }
}

/// Rows used by a two-plane scene when `rows == 0`.
pub fn default_rows(n: usize) -> usize {
    (math::floor(math::sqrt(n as f64 / 2.0)) as usize).max(1)
}

fn lattice_side(n: usize) -> usize {
    (math::ceil(math::sqrt(n as f64)) as usize).max(1)
}

/// Deterministic labelled scene for the given spec.
pub fn generate_scene(spec: &SceneSpec) -> Result<PointCloud> {
    if !(spec.noise >= 0.0) || !spec.noise.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise must be >= 0, got {}",
            spec.noise
        )));
    }
    let classes = spec.num_classes();
    if classes == 0 {
        return Err(Error::InvalidConfig("scene has no classes".into()));
    }
    if spec.n < classes.max(2) {
        return Err(Error::TooFewPoints {
            n: spec.n,
            required: classes.max(2),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let jitter = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        if spec.noise == 0.0 {
            return [0.0; 3];
        }
        [
            spec.noise * unit.sample(rng),
            spec.noise * unit.sample(rng),
            spec.noise * unit.sample(rng),
        ]
    };
    let n = spec.n;
    let mut positions = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    match &spec.kind {
        SceneKind::TwoPlane { rows, boundary } => {
            let rows = if *rows == 0 { default_rows(n) } else { *rows };
            let cols = n.div_ceil(rows);
            let boundary = boundary.unwrap_or((cols as f64 - 1.0) / 2.0);
            for i in 0..n {
                let j = jitter(&mut rng);
                let p = [(i / rows) as f64 + j[0], (i % rows) as f64 + j[1], j[2]];
                labels.push(two_plane_label(&p, boundary));
                positions.push(p);
            }
        }
        SceneKind::Checkerboard { cell } => {
            let side = lattice_side(n);
            let cell = cell.unwrap_or(side as f64 / 2.0);
            if !(cell > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "cell size must be > 0, got {cell}"
                )));
            }
            for i in 0..n {
                let j = jitter(&mut rng);
                let p = [(i % side) as f64 + j[0], (i / side) as f64 + j[1], j[2]];
                labels.push(checkerboard_label(&p, cell));
                positions.push(p);
            }
        }
        SceneKind::Clusters {
            centers,
            classes: blob_classes,
            spread,
        } => {
            if centers.is_empty() || centers.len() != blob_classes.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} cluster centres for {} classes",
                    centers.len(),
                    blob_classes.len()
                )));
            }
            if !(*spread >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "spread must be >= 0, got {spread}"
                )));
            }
            let blob = Normal::new(0.0, 1.0).expect("unit normal");
            for i in 0..n {
                let b = i % centers.len();
                let c = centers[b];
                let mut p = [0.0; 3];
                for (axis, v) in p.iter_mut().enumerate() {
                    *v = c[axis] + spread * blob.sample(&mut rng);
                }
                let j = jitter(&mut rng);
                positions.push([p[0] + j[0], p[1] + j[1], p[2] + j[2]]);
                labels.push(blob_classes[b]);
            }
        }
    }
    PointCloud::from_positions(positions, labels, classes)
}

/// Label rule of [`SceneKind::TwoPlane`].
pub fn two_plane_label(p: &[f64; 3], boundary: f64) -> usize {
    usize::from(p[0] - boundary > 0.0)
}

/// Label rule of [`SceneKind::Checkerboard`].
pub fn checkerboard_label(p: &[f64; 3], cell: f64) -> usize {
    let cx = math::floor(p[0] / cell) as i64;
    let cy = math::floor(p[1] / cell) as i64;
    (cx + cy).rem_euclid(2) as usize
}
