use rand::seq::SliceRandom;

use super::{
    backward_from_preactivation, cross_entropy, forward, one_hot, softmax_cross_entropy_grad, Activation,
    DenseLayer, Dropout, DropoutSpec, Matrix, NnError, Optimizer, OptimizerConfig, Result,
};

/// Mini-batch cross-entropy training parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedParams {
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub dropout: DropoutSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

/// Row-wise argmax; ties go to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Eval-mode mean cross-entropy and accuracy.
pub fn evaluate_classifier(
    layers: &[DenseLayer],
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
) -> Result<(f64, f64)> {
    let (probs, _) = forward(layers, x, None, false)?;
    let loss = cross_entropy(&probs, &one_hot(labels, n_classes))?;
    let pred = argmax_rows(&probs);
    let correct = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok((loss, correct as f64 / labels.len().max(1) as f64))
}

/// Train a softmax-output stack in place and return per-epoch history.
///
/// Batch order comes from a ChaCha stream seeded by `params.seed`; dropout
/// masks from `params.dropout.seed`.
pub fn train_classifier(
    layers: &mut [DenseLayer],
    x: &Matrix,
    labels: &[usize],
    n_classes: usize,
    params: &SupervisedParams,
    validation: Option<(&Matrix, &[usize])>,
) -> Result<Vec<EpochRecord>> {
    if layers.last().map(|l| l.activation) != Some(Activation::Softmax) {
        return Err(NnError::InvalidConfig("classifier output must be softmax".into()));
    }
    if x.nrows() != labels.len() {
        return Err(super::shape_err("one label per row required"));
    }
    let mut optimizer = Optimizer::new(&params.optimizer)?;
    let mut dropout = Dropout::new(&params.dropout)?;
    let mut rng = crate::rng_from_seed(params.seed);
    let batch = params.optimizer.batch_size;
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = Vec::with_capacity(params.epochs);
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xb = x.select(ndarray::Axis(0), chunk);
            let yb = one_hot(&chunk.iter().map(|&i| labels[i]).collect::<Vec<_>>(), n_classes);
            let (probs, cache) = forward(layers, &xb, Some(&mut dropout), true)?;
            let dz = softmax_cross_entropy_grad(&probs, &yb);
            let (grads, _) = backward_from_preactivation(layers, &cache, dz)?;
            optimizer.step_layers(0, layers, &grads)?;
        }
        let (loss, accuracy) = evaluate_classifier(layers, x, labels, n_classes)?;
        if !loss.is_finite() {
            return Err(NnError::NonFinite("training loss"));
        }
        let (validation_loss, validation_accuracy) = match validation {
            Some((vx, vy)) if !vy.is_empty() => {
                let (l, a) = evaluate_classifier(layers, vx, vy, n_classes)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        history.push(EpochRecord { epoch: epoch + 1, loss, accuracy, validation_loss, validation_accuracy });
    }
    Ok(history)
}
