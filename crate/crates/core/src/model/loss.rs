use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Mean over points of `-ln softmax(logits_i)[label_i]`.
pub fn cross_entropy(logits: &[f64], labels: &[usize], classes: usize) -> f64 {
    assert_eq!(logits.len(), labels.len() * classes, "logits must be n x C");
    let total: f64 = logits
        .chunks_exact(classes)
        .zip(labels)
        .map(|(row, &y)| math::log_sum_exp(row) - row[y])
        .sum();
    total / labels.len() as f64
}

/// [`cross_entropy`] and its gradient `(softmax - onehot) / n`.
pub fn cross_entropy_grad(logits: &[f64], labels: &[usize], classes: usize) -> (f64, Vec<f64>) {
    assert_eq!(logits.len(), labels.len() * classes, "logits must be n x C");
    let n = labels.len() as f64;
    let mut grad = vec![0.0; logits.len()];
    let mut total = 0.0;
    for ((row, g), &y) in logits
        .chunks_exact(classes)
        .zip(grad.chunks_exact_mut(classes))
        .zip(labels)
    {
        let lse = math::log_sum_exp(row);
        total += lse - row[y];
        for (gc, &z) in g.iter_mut().zip(row) {
            *gc = math::exp(z - lse) / n;
        }
        g[y] -= 1.0 / n;
    }
    (total / n, grad)
}

/// `lambda * ce + (1 - lambda) * sum(am_per_layer)`.
pub fn joint_loss(ce: f64, am_per_layer: &[f64], lambda: f64) -> f64 {
    lambda * ce + (1.0 - lambda) * am_per_layer.iter().sum::<f64>()
}
