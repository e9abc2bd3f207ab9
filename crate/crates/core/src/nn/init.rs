use rand::Rng;

use super::{Activation, DenseLayer, Matrix, Vector};

/// Uniform Xavier/Glorot initialization on `[-a, a]`, `a = sqrt(6/(rows+cols))`.
pub fn xavier_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    xavier_init_rng(rows, cols, &mut crate::rng_from_seed(seed))
}

pub fn xavier_init_rng<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_shape_fn((rows, cols), |_| rng.random_range(-a..=a))
}

/// Xavier weights and zero biases for `input → hidden... → output`.
/// Layer `l` draws from stream `l` of `seed`, so two stacks that share a
/// prefix of widths share those layers' initial weights.
pub fn init_stack(
    input: usize,
    hidden: &[usize],
    hidden_activation: Activation,
    output: usize,
    output_activation: Activation,
    seed: u64,
) -> Vec<DenseLayer> {
    let mut widths = vec![input];
    widths.extend_from_slice(hidden);
    widths.push(output);
    widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let activation = if l + 2 == widths.len() { output_activation } else { hidden_activation };
            DenseLayer {
                weights: xavier_init(w[0], w[1], crate::derive_seed(seed, l as u64)),
                bias: Vector::zeros(w[1]),
                activation,
            }
        })
        .collect()
}
