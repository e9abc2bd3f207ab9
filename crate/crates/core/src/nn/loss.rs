use super::{shape_err, Matrix, Result};

/// Floor applied inside the logarithm.
pub const CE_CLAMP: f64 = 1e-12;

/// Mean over rows of `-Σ_c y_c · ln(max(p_c, 1e-12))`.
pub fn cross_entropy(probabilities: &Matrix, one_hot_labels: &Matrix) -> Result<f64> {
    if probabilities.dim() != one_hot_labels.dim() {
        return Err(shape_err(format!(
            "probabilities {:?} vs labels {:?}",
            probabilities.dim(),
            one_hot_labels.dim()
        )));
    }
    let n = probabilities.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = probabilities
        .iter()
        .zip(one_hot_labels.iter())
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| -y * p.max(CE_CLAMP).ln())
        .sum();
    Ok(total / n as f64)
}

/// `dL/dz` for softmax outputs under mean cross-entropy: `(p - y) / N`.
pub fn softmax_cross_entropy_grad(probabilities: &Matrix, one_hot_labels: &Matrix) -> Matrix {
    let n = probabilities.nrows().max(1) as f64;
    (probabilities - one_hot_labels) / n
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Matrix {
    let mut y = Matrix::zeros((labels.len(), n_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[[i, l]] = 1.0;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_prediction() {
        let y = one_hot(&[0, 2], 3);
        assert!(cross_entropy(&y, &y).unwrap() <= 1.2e-11);
    }

    #[test]
    fn uniform_four_classes() {
        let p = Matrix::from_elem((2, 4), 0.25);
        let y = one_hot(&[1, 3], 4);
        assert!((cross_entropy(&p, &y).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((4f64.ln() - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn mixed_batch_is_row_mean() {
        let p = array![[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]];
        let y = one_hot(&[0, 1], 3);
        // -(ln 0.7 + ln 0.3) / 2
        let expected = (0.356_674_943_938_732_4 + 1.203_972_804_325_936) / 2.0;
        assert!((cross_entropy(&p, &y).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn clamp_keeps_zero_probabilities_finite() {
        let p = array![[0.0, 1.0]];
        let y = one_hot(&[0], 2);
        assert!((cross_entropy(&p, &y).unwrap() - (-CE_CLAMP.ln())).abs() < 1e-9);
    }

    #[test]
    fn shape_check() {
        assert!(cross_entropy(&Matrix::zeros((2, 3)), &Matrix::zeros((3, 2))).is_err());
    }
}
