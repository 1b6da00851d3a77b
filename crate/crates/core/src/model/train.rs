use alloc::vec;
use alloc::vec::Vec;

use super::loss::{cross_entropy, cross_entropy_grad, joint_loss};
use super::metrics::{argmax_rows, Metrics};
use super::net::{backward, forward, Forward, Graph, ParamLayout, Params};
use super::{NetConfig, TrainConfig};
use crate::ambiguity::{self, AmbiguityConfig, AmbiguityMap};
use crate::cloud::PointCloud;
use crate::contrast;
use crate::error::{Error, Result};
use crate::knn::{self, NeighborIndex, NeighborPartition};
use crate::margin;

/// Position-derived contrastive targets of one layer. Positions and labels
/// never change during training, so these are computed once.
#[derive(Debug, Clone)]
pub struct LayerTargets {
    pub partitions: Vec<NeighborPartition>,
    pub ambiguity: AmbiguityMap,
    pub margins: Vec<f64>,
}

/// Everything training needs that does not depend on the parameters.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: Graph,
    /// One entry per decoder layer, index `s` at layer `s`.
    pub targets: Vec<LayerTargets>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

pub fn prepare(cloud: &PointCloud, net: &NetConfig, cfg: &TrainConfig) -> Result<Prepared> {
    cfg.validate()?;
    let graph = Graph::build(cloud, net)?;
    let mut targets = Vec::with_capacity(net.stages);
    for s in 0..net.stages {
        let layer = &graph.stack().layer(s).cloud;
        let k = cfg.ambiguity.k.min(layer.len());
        let index = NeighborIndex::build(layer.positions())?;
        let partitions = knn::partition_all(&index, layer.labels(), k)?;
        let amb_cfg = AmbiguityConfig { k, ..cfg.ambiguity };
        let ambiguity = ambiguity::from_partitions(&partitions, &amb_cfg, s);
        let margins = margin::margins(&ambiguity, &cfg.margin);
        targets.push(LayerTargets {
            partitions,
            ambiguity,
            margins,
        });
    }
    Ok(Prepared {
        graph,
        targets,
        labels: cloud.labels().to_vec(),
        num_classes: cloud.num_classes(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub ce: f64,
    /// Contrastive loss of each decoder layer.
    pub am: Vec<f64>,
    pub joint: f64,
}

impl Objective {
    pub fn am_sum(&self) -> f64 {
        self.am.iter().sum()
    }
}

fn check_layout(params: &Params, prepared: &Prepared) -> Result<()> {
    if params.layout().num_classes() != prepared.num_classes {
        return Err(Error::Shape(alloc::format!(
            "model predicts {} classes, cloud has {}",
            params.layout().num_classes(),
            prepared.num_classes
        )));
    }
    Ok(())
}

pub fn objective(
    params: &Params,
    prepared: &Prepared,
    net: &NetConfig,
    cfg: &TrainConfig,
) -> Result<Objective> {
    check_layout(params, prepared)?;
    let fwd = forward(params, &prepared.graph, net)?;
    let ce = cross_entropy(&fwd.logits, &prepared.labels, prepared.num_classes);
    let am: Vec<f64> = prepared
        .targets
        .iter()
        .enumerate()
        .map(|(s, t)| {
            contrast::layer_loss(
                &fwd.decoder[s],
                net.decoder_width(s),
                &t.partitions,
                &t.margins,
                &cfg.contrast,
            )
        })
        .collect();
    let joint = joint_loss(ce, &am, cfg.lambda);
    Ok(Objective { ce, am, joint })
}

/// Objective, its gradient with respect to every parameter, and the forward
/// activations it was computed from.
pub fn objective_and_grad(
    params: &Params,
    prepared: &Prepared,
    net: &NetConfig,
    cfg: &TrainConfig,
) -> Result<(Objective, Vec<f64>, Forward)> {
    check_layout(params, prepared)?;
    let fwd = forward(params, &prepared.graph, net)?;
    let (ce, mut d_logits) =
        cross_entropy_grad(&fwd.logits, &prepared.labels, prepared.num_classes);
    for d in &mut d_logits {
        *d *= cfg.lambda;
    }
    let am_weight = 1.0 - cfg.lambda;
    let mut am = Vec::with_capacity(prepared.targets.len());
    let mut d_decoder = Vec::with_capacity(prepared.targets.len());
    for (s, t) in prepared.targets.iter().enumerate() {
        let width = net.decoder_width(s);
        let feats = &fwd.decoder[s];
        if am_weight == 0.0 {
            am.push(contrast::layer_loss(
                feats,
                width,
                &t.partitions,
                &t.margins,
                &cfg.contrast,
            ));
            d_decoder.push(vec![0.0; feats.len()]);
        } else {
            let (loss, mut g) =
                contrast::layer_loss_grad(feats, width, &t.partitions, &t.margins, &cfg.contrast);
            for v in &mut g {
                *v *= am_weight;
            }
            am.push(loss);
            d_decoder.push(g);
        }
    }
    let joint = joint_loss(ce, &am, cfg.lambda);
    let grad = backward(params, &prepared.graph, net, &fwd, &d_logits, d_decoder);
    Ok((Objective { ce, am, joint }, grad, fwd))
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_ce: f64,
    pub l_am_sum: f64,
    pub l_joint: f64,
    /// Overall accuracy of the forward pass that produced these losses.
    pub oa: f64,
}

/// Full-batch gradient descent with momentum. Each epoch logs the losses of
/// the parameters it starts from, then updates them.
pub fn train(
    cloud: &PointCloud,
    net: &NetConfig,
    cfg: &TrainConfig,
) -> Result<(Params, Vec<EpochLog>)> {
    let prepared = prepare(cloud, net, cfg)?;
    train_prepared(&prepared, net, cfg)
}

pub fn train_prepared(
    prepared: &Prepared,
    net: &NetConfig,
    cfg: &TrainConfig,
) -> Result<(Params, Vec<EpochLog>)> {
    let layout = ParamLayout::new(net, prepared.graph.input_dim(), prepared.num_classes);
    let mut params = Params::init(layout, net.seed);
    let mut velocity = vec![0.0; params.values.len()];
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let (obj, grad, fwd) = objective_and_grad(&params, prepared, net, cfg)?;
        if !obj.joint.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        let pred = argmax_rows(&fwd.logits, prepared.num_classes);
        let hits = pred
            .iter()
            .zip(&prepared.labels)
            .filter(|(p, t)| p == t)
            .count();
        log.push(EpochLog {
            epoch,
            l_ce: obj.ce,
            l_am_sum: obj.am_sum(),
            l_joint: obj.joint,
            oa: hits as f64 / pred.len() as f64,
        });
        for ((p, v), g) in params.values.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = cfg.momentum * *v + g;
            *p -= cfg.lr * *v;
        }
    }
    Ok((params, log))
}

pub fn predict(params: &Params, graph: &Graph, net: &NetConfig) -> Result<Vec<usize>> {
    let fwd = forward(params, graph, net)?;
    Ok(argmax_rows(&fwd.logits, params.layout().num_classes()))
}

pub fn evaluate(
    params: &Params,
    cloud: &PointCloud,
    net: &NetConfig,
    ambiguity: &AmbiguityMap,
) -> Result<Metrics> {
    if params.layout().num_classes() != cloud.num_classes() {
        return Err(Error::Shape(alloc::format!(
            "model predicts {} classes, cloud has {}",
            params.layout().num_classes(),
            cloud.num_classes()
        )));
    }
    if ambiguity.len() != cloud.len() {
        return Err(Error::Shape(alloc::format!(
            "{} ambiguities for {} points",
            ambiguity.len(),
            cloud.len()
        )));
    }
    let graph = Graph::build(cloud, net)?;
    let pred = predict(params, &graph, net)?;
    Ok(Metrics::from_predictions(
        &pred,
        cloud.labels(),
        cloud.num_classes(),
        Some(&ambiguity.values),
    ))
}
