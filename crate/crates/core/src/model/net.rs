use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NetConfig;
use crate::cloud::{LayerStack, PointCloud};
use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::math;

/// Shapes `(out, in)` of every affine layer, in storage order: encoder
/// stages `1..=S`, decoder stages `S-1` down to `0`, then the head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    stages: usize,
    input_dim: usize,
    num_classes: usize,
}

impl ParamLayout {
    pub fn new(net: &NetConfig, input_dim: usize, num_classes: usize) -> Self {
        let stages = net.stages;
        let mut shapes = Vec::with_capacity(2 * stages + 1);
        let mut prev = input_dim;
        for &w in &net.widths {
            shapes.push((w, prev));
            prev = w;
        }
        for s in (0..stages).rev() {
            let skip = if s == 0 { input_dim } else { net.widths[s - 1] };
            shapes.push((net.decoder_width(s), net.widths[s] + skip));
        }
        shapes.push((num_classes, net.head_width));
        let mut offsets = Vec::with_capacity(shapes.len() + 1);
        let mut at = 0;
        for &(o, i) in &shapes {
            offsets.push(at);
            at += o * i + o;
        }
        offsets.push(at);
        Self {
            shapes,
            offsets,
            stages,
            input_dim,
            num_classes,
        }
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    /// Total scalar parameter count.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn enc(&self, s: usize) -> usize {
        s - 1
    }

    fn dec(&self, s: usize) -> usize {
        self.stages + (self.stages - 1 - s)
    }

    fn head(&self) -> usize {
        2 * self.stages
    }

    fn range(&self, l: usize) -> (core::ops::Range<usize>, core::ops::Range<usize>) {
        let (o, i) = self.shapes[l];
        let start = self.offsets[l];
        (start..start + o * i, start + o * i..start + o * i + o)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    layout: ParamLayout,
    pub values: Vec<f64>,
}

impl Params {
    pub fn zeros(layout: ParamLayout) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(layout: ParamLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(layout);
        for l in 0..params.layout.shapes.len() {
            let (o, i) = params.layout.shapes[l];
            let limit = math::sqrt(6.0 / (o + i) as f64);
            let (w, _) = params.layout.range(l);
            for v in &mut params.values[w] {
                *v = rng.random_range(-limit..limit);
            }
        }
        params
    }

    pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Shape(format!(
                "{} parameter values for a layout of {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// Weight (row-major `out x in`) and bias of affine layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layout.range(l);
        (&self.values[w], &self.values[b])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (w, b) = self.layout.range(l);
        let (head, tail) = self.values.split_at_mut(b.start);
        (&mut head[w], &mut tail[..b.len()])
    }
}

/// Network input rows: positions centred on their centroid and scaled so the
/// farthest point sits at radius `scale`, followed by the cloud's feature
/// channels.
pub fn input_features(cloud: &PointCloud, scale: f64) -> Vec<f64> {
    let n = cloud.len();
    let mut centroid = [0.0; 3];
    for p in cloud.positions() {
        for d in 0..3 {
            centroid[d] += p[d];
        }
    }
    for c in &mut centroid {
        *c /= n as f64;
    }
    let radius = cloud
        .positions()
        .iter()
        .map(|p| math::dist2(p, &centroid))
        .fold(0.0, f64::max);
    let radius = if radius > 0.0 {
        math::sqrt(radius)
    } else {
        1.0
    };
    let dim = 3 + cloud.feature_dims();
    let mut out = Vec::with_capacity(n * dim);
    for (i, p) in cloud.positions().iter().enumerate() {
        for d in 0..3 {
            out.push((p[d] - centroid[d]) / radius * scale);
        }
        out.extend_from_slice(cloud.feature_row(i));
    }
    out
}

pub fn build_layer_stack(cloud: &PointCloud, net: &NetConfig) -> Result<LayerStack> {
    let sizes = net.layer_sizes(cloud.len())?;
    LayerStack::build(cloud.clone(), &sizes[1..], net.fps_start)
}

/// Fixed neighbourhood structure of a layer stack: pooling neighbourhoods
/// for each encoder stage and nearest-coarse-point maps for each decoder
/// stage.
#[derive(Debug, Clone)]
pub struct Graph {
    stack: LayerStack,
    /// Per encoder stage `s` (index `s - 1`): `n_s x pool_k` indices into layer `s - 1`.
    pool: Vec<Vec<usize>>,
    pool_k: Vec<usize>,
    /// Per decoder stage `s`: for every point of layer `s`, nearest point of layer `s + 1`.
    up: Vec<Vec<usize>>,
    input: Vec<f64>,
    input_dim: usize,
}

impl Graph {
    pub fn build(cloud: &PointCloud, net: &NetConfig) -> Result<Self> {
        let stack = build_layer_stack(cloud, net)?;
        let mut pool = Vec::with_capacity(net.stages);
        let mut pool_k = Vec::with_capacity(net.stages);
        let mut up = Vec::with_capacity(net.stages);
        for s in 1..stack.len() {
            let fine = &stack.layer(s - 1).cloud;
            let layer = stack.layer(s);
            let index = NeighborIndex::build(fine.positions())?;
            let k = net.aggregation_k.min(fine.len());
            let mut nb = Vec::with_capacity(layer.cloud.len() * k);
            for &p in &layer.parent {
                nb.extend(index.knn(p, k)?.iter().map(|n| n.index));
            }
            pool.push(nb);
            pool_k.push(k);
            let coarse = NeighborIndex::build(layer.cloud.positions())?;
            up.push(
                fine.positions()
                    .iter()
                    .map(|p| coarse.nearest(p).index)
                    .collect(),
            );
        }
        let input = input_features(cloud, net.input_scale);
        Ok(Self {
            stack,
            pool,
            pool_k,
            up,
            input,
            input_dim: 3 + cloud.feature_dims(),
        })
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn size(&self, s: usize) -> usize {
        self.stack.layer(s).cloud.len()
    }
}

/// `x W^T + b` for `n` rows.
fn affine(x: &[f64], n: usize, w: &[f64], b: &[f64], out: usize) -> Vec<f64> {
    let inp = w.len() / out;
    let mut y = Vec::with_capacity(n * out);
    for row in x.chunks_exact(inp).take(n) {
        for (wo, bo) in w.chunks_exact(inp).zip(b) {
            let acc: f64 = row.iter().zip(wo).map(|(a, c)| a * c).sum();
            y.push(acc + bo);
        }
    }
    y
}

/// Accumulates parameter gradients of [`affine`] and returns `dL/dx`.
fn affine_backward(
    x: &[f64],
    w: &[f64],
    out: usize,
    dy: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let inp = w.len() / out;
    let mut dx = vec![0.0; x.len()];
    for ((row, drow), dxrow) in x
        .chunks_exact(inp)
        .zip(dy.chunks_exact(out))
        .zip(dx.chunks_exact_mut(inp))
    {
        for (o, &g) in drow.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            let wo = &w[o * inp..(o + 1) * inp];
            let gwo = &mut gw[o * inp..(o + 1) * inp];
            for c in 0..inp {
                gwo[c] += g * row[c];
                dxrow[c] += g * wo[c];
            }
        }
    }
    dx
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Post-rectifier decoder outputs, index `s` at layer `s`, `n_s x width`.
    pub decoder: Vec<Vec<f64>>,
    /// `n x C` class scores at full resolution.
    pub logits: Vec<f64>,
    enc_hidden: Vec<Vec<f64>>,
    enc_out: Vec<Vec<f64>>,
    argmax: Vec<Vec<usize>>,
    dec_in: Vec<Vec<f64>>,
}

pub fn forward(params: &Params, graph: &Graph, net: &NetConfig) -> Result<Forward> {
    let layout = params.layout();
    if layout.input_dim != graph.input_dim
        || layout.stages != net.stages
        || graph.stack.len() != net.stages + 1
    {
        return Err(Error::Shape(format!(
            "parameters expect {} inputs and {} stages, graph has {} inputs and {} layers",
            layout.input_dim,
            layout.stages,
            graph.input_dim,
            graph.stack.len()
        )));
    }
    let stages = net.stages;
    let mut enc_hidden = Vec::with_capacity(stages);
    let mut enc_out: Vec<Vec<f64>> = Vec::with_capacity(stages);
    let mut argmax = Vec::with_capacity(stages);
    for s in 1..=stages {
        let x: &[f64] = if s == 1 {
            &graph.input
        } else {
            &enc_out[s - 2]
        };
        let width = net.widths[s - 1];
        let (w, b) = params.layer(layout.enc(s));
        let mut h = affine(x, graph.size(s - 1), w, b, width);
        relu(&mut h);
        let k = graph.pool_k[s - 1];
        let nb = &graph.pool[s - 1];
        let n_s = graph.size(s);
        let mut e = vec![0.0; n_s * width];
        let mut am = vec![0usize; n_s * width];
        for q in 0..n_s {
            let hood = &nb[q * k..(q + 1) * k];
            for c in 0..width {
                let mut best = f64::NEG_INFINITY;
                let mut arg = hood[0];
                for &j in hood {
                    let v = h[j * width + c];
                    if v > best {
                        best = v;
                        arg = j;
                    }
                }
                e[q * width + c] = best;
                am[q * width + c] = arg;
            }
        }
        enc_hidden.push(h);
        enc_out.push(e);
        argmax.push(am);
    }

    let mut decoder: Vec<Vec<f64>> = vec![Vec::new(); stages];
    let mut dec_in: Vec<Vec<f64>> = vec![Vec::new(); stages];
    for s in (0..stages).rev() {
        let (z, g) = {
            let coarse: &[f64] = if s + 1 == stages {
                &enc_out[stages - 1]
            } else {
                &decoder[s + 1]
            };
            let cw = net.widths[s];
            let (skip, sw): (&[f64], usize) = if s == 0 {
                (&graph.input, graph.input_dim)
            } else {
                (&enc_out[s - 1], net.widths[s - 1])
            };
            let n_s = graph.size(s);
            let mut z = Vec::with_capacity(n_s * (cw + sw));
            for (i, &u) in graph.up[s].iter().enumerate() {
                z.extend_from_slice(&coarse[u * cw..(u + 1) * cw]);
                z.extend_from_slice(&skip[i * sw..(i + 1) * sw]);
            }
            let (w, b) = params.layer(layout.dec(s));
            let mut g = affine(&z, n_s, w, b, net.decoder_width(s));
            relu(&mut g);
            (z, g)
        };
        dec_in[s] = z;
        decoder[s] = g;
    }
    let (w, b) = params.layer(layout.head());
    let logits = affine(&decoder[0], graph.size(0), w, b, layout.num_classes);
    Ok(Forward {
        decoder,
        logits,
        enc_hidden,
        enc_out,
        argmax,
        dec_in,
    })
}

/// Gradient with respect to every parameter, given upstream gradients on
/// the logits and on each decoder output.
pub(crate) fn backward(
    params: &Params,
    graph: &Graph,
    net: &NetConfig,
    fwd: &Forward,
    d_logits: &[f64],
    mut d_decoder: Vec<Vec<f64>>,
) -> Vec<f64> {
    let layout = params.layout();
    let stages = net.stages;
    let mut grad = Params::zeros(layout.clone());

    let (w, _) = params.layer(layout.head());
    let d_g0 = {
        let (gw, gb) = grad.layer_mut(layout.head());
        affine_backward(&fwd.decoder[0], w, layout.num_classes, d_logits, gw, gb)
    };
    for (a, b) in d_decoder[0].iter_mut().zip(&d_g0) {
        *a += b;
    }

    let mut d_enc: Vec<Vec<f64>> = fwd.enc_out.iter().map(|e| vec![0.0; e.len()]).collect();
    for s in 0..stages {
        let width = net.decoder_width(s);
        let mut dpre = core::mem::take(&mut d_decoder[s]);
        for (d, &g) in dpre.iter_mut().zip(&fwd.decoder[s]) {
            if g <= 0.0 {
                *d = 0.0;
            }
        }
        let (w, _) = params.layer(layout.dec(s));
        let dz = {
            let (gw, gb) = grad.layer_mut(layout.dec(s));
            affine_backward(&fwd.dec_in[s], w, width, &dpre, gw, gb)
        };
        let cw = net.widths[s];
        let sw = if s == 0 {
            graph.input_dim
        } else {
            net.widths[s - 1]
        };
        for (i, &u) in graph.up[s].iter().enumerate() {
            let row = &dz[i * (cw + sw)..(i + 1) * (cw + sw)];
            let target = if s + 1 == stages {
                &mut d_enc[stages - 1]
            } else {
                &mut d_decoder[s + 1]
            };
            for (t, &v) in target[u * cw..(u + 1) * cw].iter_mut().zip(&row[..cw]) {
                *t += v;
            }
            if s > 0 {
                for (t, &v) in d_enc[s - 1][i * sw..(i + 1) * sw]
                    .iter_mut()
                    .zip(&row[cw..])
                {
                    *t += v;
                }
            }
        }
    }

    for s in (1..=stages).rev() {
        let width = net.widths[s - 1];
        let h = &fwd.enc_hidden[s - 1];
        let mut dh = vec![0.0; h.len()];
        for (q_c, (&d, &j)) in d_enc[s - 1].iter().zip(&fwd.argmax[s - 1]).enumerate() {
            dh[j * width + q_c % width] += d;
        }
        for (d, &v) in dh.iter_mut().zip(h) {
            if v <= 0.0 {
                *d = 0.0;
            }
        }
        let x: &[f64] = if s == 1 {
            &graph.input
        } else {
            &fwd.enc_out[s - 2]
        };
        let (w, _) = params.layer(layout.enc(s));
        let dx = {
            let (gw, gb) = grad.layer_mut(layout.enc(s));
            affine_backward(x, w, width, &dh, gw, gb)
        };
        if s >= 2 {
            for (t, v) in d_enc[s - 2].iter_mut().zip(dx) {
                *t += v;
            }
        }
    }
    grad.values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{generate_scene, SceneKind, SceneSpec};

    #[test]
    fn layout_shapes() {
        let net = NetConfig::default();
        let layout = ParamLayout::new(&net, 3, 2);
        assert_eq!(
            layout.shapes(),
            &[(32, 3), (64, 32), (32, 96), (32, 35), (2, 32)]
        );
        let expected: usize = layout.shapes().iter().map(|(o, i)| o * i + o).sum();
        assert_eq!(layout.len(), expected);
    }

    #[test]
    fn stack_sizes() {
        let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 2048, 0.0, 0)).unwrap();
        let stack = build_layer_stack(&cloud, &NetConfig::default()).unwrap();
        assert_eq!(stack.sizes(), vec![2048, 512, 128]);
        let net = NetConfig {
            stages: 1,
            widths: vec![16],
            ..Default::default()
        };
        assert_eq!(build_layer_stack(&cloud, &net).unwrap().len(), 2);
        assert_eq!(
            build_layer_stack(&cloud, &NetConfig::default()).unwrap(),
            stack
        );
    }

    #[test]
    fn stack_too_small() {
        let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 100, 0.0, 0)).unwrap();
        assert!(matches!(
            build_layer_stack(&cloud, &NetConfig::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn zero_weights_give_zero_logits() {
        let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 64, 0.0, 0)).unwrap();
        let net = NetConfig {
            stages: 1,
            widths: vec![8],
            downsample_ratio: 4,
            aggregation_k: 4,
            head_width: 8,
            ..Default::default()
        };
        let graph = Graph::build(&cloud, &net).unwrap();
        let params = Params::zeros(ParamLayout::new(&net, 3, 2));
        let fwd = forward(&params, &graph, &net).unwrap();
        assert_eq!(fwd.logits.len(), 64 * 2);
        assert!(fwd.logits.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn input_scaled_into_ball() {
        let cloud =
            generate_scene(&SceneSpec::new(SceneKind::checkerboard(), 100, 0.1, 2)).unwrap();
        let x = input_features(&cloud, 2.5);
        let max = x
            .chunks(3)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((max - 6.25).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cloud = generate_scene(&SceneSpec::new(SceneKind::two_plane(), 64, 0.0, 0)).unwrap();
        let net = NetConfig {
            stages: 1,
            widths: vec![8],
            aggregation_k: 4,
            head_width: 8,
            ..Default::default()
        };
        let graph = Graph::build(&cloud, &net).unwrap();
        let params = Params::zeros(ParamLayout::new(&net, 4, 2));
        assert!(matches!(
            forward(&params, &graph, &net),
            Err(Error::Shape(_))
        ));
    }
}
