//! Margin-shifted supervised contrastive loss on point features.
//!
//! For an anchor `i` with margin `m`, intra neighbours `j` (anchor included)
//! and inter neighbours `k`:
//!
//! ```text
//! emb_ij = exp((cos(f_i, f_j) - m) / tau)
//! emb_ik = exp(cos(f_i, f_k) / tau)
//! loss_i = -ln( sum_j emb_ij / (sum_j emb_ij + sum_k emb_ik) )
//! ```
//!
//! A layer's loss is the mean of `loss_i` over anchors with at least one
//! inter neighbour.

use alloc::vec;
use alloc::vec::Vec;

use crate::knn::NeighborPartition;
use crate::math;

/// Exponent magnitude above which a warning is logged.
pub const EXP_WARN: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConfig {
    /// Temperature.
    pub tau: f64,
    /// Floor on feature norms in the cosine similarity.
    pub norm_epsilon: f64,
}

impl ContrastConfig {
    pub const fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            norm_epsilon: 1e-12,
        }
    }

    /// Temperature used for the indoor-area setting (tau = 0.3).
    pub const fn s3dis() -> Self {
        Self::with_tau(0.3)
    }

    /// Temperature used for the scan setting (tau = 0.5).
    pub const fn scannet() -> Self {
        Self::with_tau(0.5)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.tau > 0.0 && self.tau.is_finite() && self.norm_epsilon > 0.0 {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig(alloc::format!(
                "tau and norm epsilon must be positive, got tau={} eps={}",
                self.tau,
                self.norm_epsilon
            )))
        }
    }
}

impl Default for ContrastConfig {
    fn default() -> Self {
        Self::s3dis()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(u: &[f64]) -> f64 {
    math::sqrt(dot(u, u))
}

/// `u.v / (max(|u|, eps) * max(|v|, eps))`, clamped to `[-1, 1]`.
pub fn cosine_sim(u: &[f64], v: &[f64], eps: f64) -> f64 {
    cosine_with_norms(u, v, norm(u), norm(v), eps)
}

fn cosine_with_norms(u: &[f64], v: &[f64], nu: f64, nv: f64, eps: f64) -> f64 {
    (dot(u, v) / (nu.max(eps) * nv.max(eps))).clamp(-1.0, 1.0)
}

/// Accumulates `scale * d cos(u, v) / du` into `out`.
fn add_cosine_grad(
    out: &mut [f64],
    u: &[f64],
    v: &[f64],
    nu: f64,
    nv: f64,
    s: f64,
    eps: f64,
    scale: f64,
) {
    let denom = nu.max(eps) * nv.max(eps);
    if nu > eps {
        let radial = s / (nu * nu);
        for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
            *o += scale * (vi / denom - radial * ui);
        }
    } else {
        for (o, &vi) in out.iter_mut().zip(v) {
            *o += scale * vi / denom;
        }
    }
}

fn check_exponent(x: f64) {
    if x.abs() > EXP_WARN {
        log::warn!("contrastive exponent {x} exceeds {EXP_WARN}; exp may overflow");
    }
}

/// Intra and inter embeddings for one anchor.
pub fn pair_embeddings(
    sims_intra: &[f64],
    sims_inter: &[f64],
    m: f64,
    tau: f64,
) -> (Vec<f64>, Vec<f64>) {
    let intra = sims_intra
        .iter()
        .map(|&s| {
            let x = (s - m) / tau;
            check_exponent(x);
            math::exp(x)
        })
        .collect();
    let inter = sims_inter
        .iter()
        .map(|&s| {
            let x = s / tau;
            check_exponent(x);
            math::exp(x)
        })
        .collect();
    (intra, inter)
}

/// Loss of one anchor and its derivatives with respect to every similarity
/// and the margin.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLossGrad {
    pub loss: f64,
    pub d_intra: Vec<f64>,
    pub d_inter: Vec<f64>,
    pub d_margin: f64,
}

/// Loss of one anchor from precomputed similarities.
pub fn loss_from_sims(sims_intra: &[f64], sims_inter: &[f64], m: f64, tau: f64) -> f64 {
    let (intra, inter) = pair_embeddings(sims_intra, sims_inter, m, tau);
    let a: f64 = intra.iter().sum();
    let b: f64 = inter.iter().sum();
    libm::log1p(b / a)
}

pub fn loss_grad_from_sims(
    sims_intra: &[f64],
    sims_inter: &[f64],
    m: f64,
    tau: f64,
) -> PointLossGrad {
    let (intra, inter) = pair_embeddings(sims_intra, sims_inter, m, tau);
    let a: f64 = intra.iter().sum();
    let b: f64 = inter.iter().sum();
    let total = a + b;
    let loss = libm::log1p(b / a);
    // dL/dA = -B / (A (A+B)), dL/dB = 1 / (A+B), d emb / d sim = emb / tau
    let k_intra = -b / (a * total * tau);
    let k_inter = 1.0 / (total * tau);
    PointLossGrad {
        loss,
        d_intra: intra.iter().map(|e| e * k_intra).collect(),
        d_inter: inter.iter().map(|e| e * k_inter).collect(),
        d_margin: b / (total * tau),
    }
}

/// Unshifted supervised contrastive loss of one anchor, evaluated directly
/// as `-ln(sum_j exp(s_j/tau) / (sum_j exp(s_j/tau) + sum_k exp(s_k/tau)))`.
pub fn baseline_loss(sims_intra: &[f64], sims_inter: &[f64], tau: f64) -> f64 {
    let pos: f64 = sims_intra.iter().map(|s| math::exp(s / tau)).sum();
    let neg: f64 = sims_inter.iter().map(|s| math::exp(s / tau)).sum();
    -math::ln(pos / (pos + neg))
}

/// Feature vectors taking part in one anchor's loss.
#[derive(Debug, Clone)]
pub struct PointLossInput<'a> {
    pub anchor: &'a [f64],
    /// Same-label neighbours, the anchor itself included.
    pub intra: Vec<&'a [f64]>,
    pub inter: Vec<&'a [f64]>,
    pub margin: f64,
}

pub fn point_loss(input: &PointLossInput<'_>, cfg: &ContrastConfig) -> f64 {
    let eps = cfg.norm_epsilon;
    let si: Vec<f64> = input
        .intra
        .iter()
        .map(|f| cosine_sim(input.anchor, f, eps))
        .collect();
    let sk: Vec<f64> = input
        .inter
        .iter()
        .map(|f| cosine_sim(input.anchor, f, eps))
        .collect();
    loss_from_sims(&si, &sk, input.margin, cfg.tau)
}

/// Mean anchor loss over the layer's mixed neighbourhoods.
///
/// `features` is row-major `partitions.len() x dim`; `margins` is per point.
pub fn layer_loss(
    features: &[f64],
    dim: usize,
    partitions: &[NeighborPartition],
    margins: &[f64],
    cfg: &ContrastConfig,
) -> f64 {
    evaluate(features, dim, partitions, margins, cfg, None)
}

/// [`layer_loss`] together with its gradient with respect to every feature
/// row.
pub fn layer_loss_grad(
    features: &[f64],
    dim: usize,
    partitions: &[NeighborPartition],
    margins: &[f64],
    cfg: &ContrastConfig,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; features.len()];
    let loss = evaluate(features, dim, partitions, margins, cfg, Some(&mut grad));
    (loss, grad)
}

/// Number of anchors that contribute to a layer loss.
pub fn contributing(partitions: &[NeighborPartition]) -> usize {
    partitions.iter().filter(|p| p.is_mixed()).count()
}

fn evaluate(
    features: &[f64],
    dim: usize,
    partitions: &[NeighborPartition],
    margins: &[f64],
    cfg: &ContrastConfig,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let n = partitions.len();
    assert_eq!(
        features.len(),
        n * dim,
        "feature rows must match partitions"
    );
    assert_eq!(margins.len(), n, "one margin per point");
    let count = contributing(partitions);
    if count == 0 {
        return 0.0;
    }
    let row = |i: usize| &features[i * dim..(i + 1) * dim];
    let norms: Vec<f64> = (0..n).map(|i| norm(row(i))).collect();
    let eps = cfg.norm_epsilon;
    let weight = 1.0 / count as f64;
    let mut total = 0.0;
    let mut si = Vec::new();
    let mut sk = Vec::new();
    for part in partitions.iter().filter(|p| p.is_mixed()) {
        let i = part.anchor;
        let fi = row(i);
        si.clear();
        sk.clear();
        si.extend(
            part.intra
                .iter()
                .map(|&j| cosine_with_norms(fi, row(j), norms[i], norms[j], eps)),
        );
        sk.extend(
            part.inter
                .iter()
                .map(|&k| cosine_with_norms(fi, row(k), norms[i], norms[k], eps)),
        );
        let m = margins[i];
        match grad.as_deref_mut() {
            None => total += loss_from_sims(&si, &sk, m, cfg.tau),
            Some(g) => {
                let pg = loss_grad_from_sims(&si, &sk, m, cfg.tau);
                total += pg.loss;
                let pairs = part
                    .intra
                    .iter()
                    .zip(&si)
                    .zip(&pg.d_intra)
                    .chain(part.inter.iter().zip(&sk).zip(&pg.d_inter));
                for ((&j, &s), &ds) in pairs {
                    let scale = ds * weight;
                    let fj = row(j);
                    add_cosine_grad(
                        &mut g[i * dim..(i + 1) * dim],
                        fi,
                        fj,
                        norms[i],
                        norms[j],
                        s,
                        eps,
                        scale,
                    );
                    add_cosine_grad(
                        &mut g[j * dim..(j + 1) * dim],
                        fj,
                        fi,
                        norms[j],
                        norms[i],
                        s,
                        eps,
                        scale,
                    );
                }
            }
        }
    }
    total * weight
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cosine_examples() {
        assert!(close(
            cosine_sim(&[2.0, -1.0], &[2.0, -1.0], 1e-12),
            1.0,
            1e-15
        ));
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0], 1e-12), 0.0);
        assert!(close(
            cosine_sim(&[1.0, 0.0], &[1.0, 1.0], 1e-12),
            core::f64::consts::FRAC_1_SQRT_2,
            1e-15
        ));
        assert_eq!(cosine_sim(&[0.0, 0.0], &[1.0, 1.0], 1e-12), 0.0);
    }

    #[test]
    fn embeddings_examples() {
        let (intra, inter) = pair_embeddings(&[1.0], &[], 0.0, 0.5);
        assert!(close(intra[0], 7.38905609893065, 1e-12));
        assert!(inter.is_empty());
        let (intra, _) = pair_embeddings(&[0.9], &[], 0.5, 0.5);
        assert!(close(intra[0], 2.225540928492468, 1e-12));
        let (a, b) = pair_embeddings(&[0.3], &[0.3], 0.0, 0.7);
        assert_eq!(a, b);
    }

    #[test]
    fn loss_fixtures() {
        assert!(close(
            loss_from_sims(&[1.0, 0.9], &[0.1], 0.0, 0.5),
            0.0869910795406394,
            1e-13
        ));
        assert!(close(
            loss_from_sims(&[1.0, 0.9], &[0.1], 0.5, 0.5),
            0.2207858464702588,
            1e-13
        ));
        assert!(close(
            loss_from_sims(&[1.0], &[-1.0], 0.0, 0.5),
            0.01814992791780974,
            1e-13
        ));
    }

    #[test]
    fn grad_value_matches_loss() {
        let pg = loss_grad_from_sims(&[1.0, 0.4, -0.2], &[0.3, 0.8], 0.25, 0.3);
        assert_eq!(
            pg.loss,
            loss_from_sims(&[1.0, 0.4, -0.2], &[0.3, 0.8], 0.25, 0.3)
        );
        assert!(pg.d_intra.iter().all(|&d| d < 0.0));
        assert!(pg.d_inter.iter().all(|&d| d > 0.0));
        assert!(pg.d_margin > 0.0);
    }

    #[test]
    fn unmixed_layer_is_zero() {
        let parts = vec![
            NeighborPartition {
                anchor: 0,
                intra: vec![0, 1],
                inter: vec![],
                d_plus: 1.0,
                d_minus: 0.0,
            },
            NeighborPartition {
                anchor: 1,
                intra: vec![1, 0],
                inter: vec![],
                d_plus: 1.0,
                d_minus: 0.0,
            },
        ];
        let feats = [1.0, 0.0, 0.0, 1.0];
        let cfg = ContrastConfig::default();
        assert_eq!(layer_loss(&feats, 2, &parts, &[0.0, 0.0], &cfg), 0.0);
        let (l, g) = layer_loss_grad(&feats, 2, &parts, &[0.0, 0.0], &cfg);
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_mixed_point_is_its_own_loss() {
        let parts = vec![
            NeighborPartition {
                anchor: 0,
                intra: vec![0],
                inter: vec![1],
                d_plus: 0.0,
                d_minus: 1.0,
            },
            NeighborPartition {
                anchor: 1,
                intra: vec![1, 2],
                inter: vec![],
                d_plus: 1.0,
                d_minus: 0.0,
            },
            NeighborPartition {
                anchor: 2,
                intra: vec![2, 1],
                inter: vec![],
                d_plus: 1.0,
                d_minus: 0.0,
            },
        ];
        let feats = [1.0, 0.5, -0.3, 0.8, 0.2, 0.9];
        let cfg = ContrastConfig::scannet();
        let input = PointLossInput {
            anchor: &feats[0..2],
            intra: vec![&feats[0..2]],
            inter: vec![&feats[2..4]],
            margin: 0.1,
        };
        let expected = point_loss(&input, &cfg);
        assert_eq!(
            layer_loss(&feats, 2, &parts, &[0.1, 0.0, 0.0], &cfg),
            expected
        );
    }
}
