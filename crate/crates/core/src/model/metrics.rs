use alloc::vec;
use alloc::vec::Vec;

/// Segmentation scores from a confusion matrix (rows: truth, columns:
/// prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub num_classes: usize,
    /// Row-major `C x C` counts.
    pub confusion: Vec<u64>,
    pub oa: f64,
    /// Mean recall over classes present in the ground truth.
    pub macc: f64,
    /// Mean IoU over classes present in truth or prediction.
    pub miou: f64,
    /// Accuracy over points with positive ambiguity; `None` if there are none.
    pub boundary_band_acc: Option<f64>,
    /// Accuracy over points with zero ambiguity; `None` if there are none.
    pub interior_acc: Option<f64>,
}

impl Metrics {
    pub fn from_predictions(
        predicted: &[usize],
        truth: &[usize],
        num_classes: usize,
        ambiguity: Option<&[f64]>,
    ) -> Self {
        assert_eq!(
            predicted.len(),
            truth.len(),
            "prediction and truth lengths differ"
        );
        let mut confusion = vec![0u64; num_classes * num_classes];
        for (&p, &t) in predicted.iter().zip(truth) {
            confusion[t * num_classes + p] += 1;
        }
        let mut metrics = Self::from_confusion(num_classes, confusion);
        if let Some(amb) = ambiguity {
            assert_eq!(amb.len(), truth.len(), "one ambiguity per point");
            let acc_where = |keep: &dyn Fn(f64) -> bool| {
                let mut hit = 0usize;
                let mut total = 0usize;
                for ((&p, &t), &a) in predicted.iter().zip(truth).zip(amb) {
                    if keep(a) {
                        total += 1;
                        hit += usize::from(p == t);
                    }
                }
                (total > 0).then(|| hit as f64 / total as f64)
            };
            metrics.boundary_band_acc = acc_where(&|a| a > 0.0);
            metrics.interior_acc = acc_where(&|a| a == 0.0);
        }
        metrics
    }

    pub fn from_confusion(num_classes: usize, confusion: Vec<u64>) -> Self {
        assert_eq!(confusion.len(), num_classes * num_classes);
        let c = num_classes;
        let at = |t: usize, p: usize| confusion[t * c + p] as f64;
        let total: f64 = confusion.iter().map(|&v| v as f64).sum();
        let trace: f64 = (0..c).map(|k| at(k, k)).sum();
        let mut recalls = Vec::new();
        let mut ious = Vec::new();
        for k in 0..c {
            let tp = at(k, k);
            let row: f64 = (0..c).map(|p| at(k, p)).sum();
            let col: f64 = (0..c).map(|t| at(t, k)).sum();
            if row > 0.0 {
                recalls.push(tp / row);
            }
            let union = row + col - tp;
            if union > 0.0 {
                ious.push(tp / union);
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        Self {
            num_classes,
            oa: if total > 0.0 { trace / total } else { 0.0 },
            macc: mean(&recalls),
            miou: mean(&ious),
            confusion,
            boundary_band_acc: None,
            interior_acc: None,
        }
    }
}

/// Row-wise argmax, ties to the smallest class index.
pub fn argmax_rows(logits: &[f64], classes: usize) -> Vec<usize> {
    logits
        .chunks_exact(classes)
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
