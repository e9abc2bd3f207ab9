use ndarray::Axis;

use super::{shape_err, Activation, Dropout, Matrix, NnError, Result, Vector};

/// Affine map followed by an activation. `weights` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(shape_err(format!(
                "weights are {}x{} but bias has {} entries",
                weights.nrows(),
                weights.ncols(),
                bias.len()
            )));
        }
        Ok(DenseLayer { weights, bias, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn preactivation(&self, x: &Matrix) -> Matrix {
        x.dot(&self.weights) + &self.bias
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        self.activation.apply(&self.preactivation(x))
    }
}

/// Check widths chain and that softmax only appears last.
pub fn validate_stack(layers: &[DenseLayer]) -> Result<()> {
    for (l, layer) in layers.iter().enumerate() {
        if layer.weights.ncols() != layer.bias.len() {
            return Err(shape_err(format!("layer {l}: bias width")));
        }
        if layer.activation == Activation::Softmax && l + 1 != layers.len() {
            return Err(NnError::InvalidConfig(format!("softmax on hidden layer {l}")));
        }
        if l > 0 && layers[l - 1].output_dim() != layer.input_dim() {
            return Err(shape_err(format!(
                "layer {} outputs {} but layer {l} expects {}",
                l - 1,
                layers[l - 1].output_dim(),
                layer.input_dim()
            )));
        }
    }
    Ok(())
}

/// Everything backward needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input actually fed to each layer (after any dropout).
    pub inputs: Vec<Matrix>,
    pub preactivations: Vec<Matrix>,
    pub outputs: Vec<Matrix>,
    /// Scaled dropout mask applied to the input of layer `l` (never layer 0).
    pub masks: Vec<Option<Matrix>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("non-empty stack")
    }
}

/// Run the stack. Dropout touches hidden activations only, and only when
/// `training` is set.
pub fn forward(
    layers: &[DenseLayer],
    x: &Matrix,
    mut dropout: Option<&mut Dropout>,
    training: bool,
) -> Result<(Matrix, ForwardCache)> {
    if layers.is_empty() {
        return Err(shape_err("empty layer stack"));
    }
    if x.ncols() != layers[0].input_dim() {
        return Err(shape_err(format!(
            "input has {} columns, first layer expects {}",
            x.ncols(),
            layers[0].input_dim()
        )));
    }
    validate_stack(layers)?;
    let n = layers.len();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(n),
        preactivations: Vec::with_capacity(n),
        outputs: Vec::with_capacity(n),
        masks: Vec::with_capacity(n),
    };
    let mut current = x.clone();
    for (l, layer) in layers.iter().enumerate() {
        let mut mask = None;
        if l > 0 && training {
            if let Some(d) = dropout.as_deref_mut() {
                let (dropped, m) = d.apply(&current);
                current = dropped;
                mask = m;
            }
        }
        let z = layer.preactivation(&current);
        let a = layer.activation.apply(&z);
        cache.inputs.push(current);
        cache.preactivations.push(z);
        cache.masks.push(mask);
        current = a.clone();
        cache.outputs.push(a);
    }
    Ok((current, cache))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vector,
}

/// Reverse pass from `dL/d(output)`. Returns per-layer parameter gradients
/// and `dL/d(input)`.
pub fn backward(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    grad_output: &Matrix,
) -> Result<(Vec<LayerGrad>, Matrix)> {
    let last = layers.len().checked_sub(1).ok_or_else(|| shape_err("empty layer stack"))?;
    if grad_output.dim() != cache.outputs[last].dim() {
        return Err(shape_err(format!(
            "grad_output {:?} vs output {:?}",
            grad_output.dim(),
            cache.outputs[last].dim()
        )));
    }
    let dz = layers[last].activation.backward(&cache.preactivations[last], &cache.outputs[last], grad_output);
    backward_from_preactivation(layers, cache, dz)
}

/// Reverse pass starting from `dL/dz` of the last layer (for fused
/// softmax + cross-entropy).
pub fn backward_from_preactivation(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    grad_pre_last: Matrix,
) -> Result<(Vec<LayerGrad>, Matrix)> {
    let n = layers.len();
    if cache.inputs.len() != n {
        return Err(shape_err("cache does not match layer stack"));
    }
    if grad_pre_last.dim() != cache.preactivations[n - 1].dim() {
        return Err(shape_err("gradient does not match last pre-activation"));
    }
    let mut grads = Vec::with_capacity(n);
    let mut dz = grad_pre_last;
    let mut grad_input = Matrix::zeros((0, 0));
    for l in (0..n).rev() {
        let layer = &layers[l];
        let dw = cache.inputs[l].t().dot(&dz);
        let db = dz.sum_axis(Axis(0));
        let mut dx = dz.dot(&layer.weights.t());
        if let Some(mask) = &cache.masks[l] {
            dx *= mask;
        }
        grads.push(LayerGrad { weights: dw, bias: db });
        if l == 0 {
            grad_input = dx;
        } else {
            dz = layers[l - 1].activation.backward(&cache.preactivations[l - 1], &cache.outputs[l - 1], &dx);
        }
    }
    grads.reverse();
    Ok((grads, grad_input))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_stack, DropoutSpec};
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn zero_net_softmax_is_uniform() {
        let layer = DenseLayer {
            weights: Matrix::zeros((4, 5)),
            bias: Vector::zeros(5),
            activation: Activation::Softmax,
        };
        let x = Matrix::from_elem((3, 4), 0.3);
        let (out, _) = forward(&[layer], &x, None, false).unwrap();
        assert!(out.iter().all(|&p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn identity_linear_layer() {
        let layer =
            DenseLayer { weights: Matrix::eye(3), bias: Vector::zeros(3), activation: Activation::Linear };
        let x = array![[1.0, -2.0, 3.5]];
        assert_eq!(forward(&[layer], &x, None, false).unwrap().0, x);
    }

    #[test]
    fn eval_mode_ignores_dropout() {
        let layers = init_stack(4, &[6, 5], Activation::Relu, 3, Activation::Softmax, 2);
        let x = Matrix::from_shape_fn((5, 4), |(i, j)| (i * 4 + j) as f64 / 20.0);
        let mut d = Dropout::new(&DropoutSpec::new(0.5, 1)).unwrap();
        let (a, _) = forward(&layers, &x, Some(&mut d), false).unwrap();
        let (b, _) = forward(&layers, &x, None, false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_upstream_gradient() {
        let layers = init_stack(3, &[4], Activation::Tanh, 2, Activation::Sigmoid, 5);
        let x = Matrix::from_elem((2, 3), 0.5);
        let (out, cache) = forward(&layers, &x, None, true).unwrap();
        let (grads, gx) = backward(&layers, &cache, &Matrix::zeros(out.dim())).unwrap();
        assert!(grads.iter().all(|g| g.weights.iter().all(|&v| v == 0.0)));
        assert!(gx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_only_on_output() {
        let mut layers = init_stack(3, &[4], Activation::Relu, 2, Activation::Softmax, 5);
        layers[0].activation = Activation::Softmax;
        assert!(matches!(validate_stack(&layers), Err(NnError::InvalidConfig(_))));
    }

    #[test]
    fn shape_errors() {
        let layers = init_stack(3, &[4], Activation::Relu, 2, Activation::Softmax, 5);
        assert!(forward(&layers, &Matrix::zeros((2, 4)), None, false).is_err());
        let (_, cache) = forward(&layers, &Matrix::zeros((2, 3)), None, false).unwrap();
        assert!(backward(&layers, &cache, &Matrix::zeros((2, 3))).is_err());
    }

    // Loss = sum(output * weights) for a fixed random projection, so
    // dL/d(output) is the projection itself.
    fn projected_loss(layers: &[DenseLayer], x: &Matrix, proj: &Matrix) -> f64 {
        (forward(layers, x, None, false).unwrap().0 * proj).sum()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = crate::rng_from_seed(77);
        let acts = [Activation::Sigmoid, Activation::Tanh, Activation::Relu];
        for trial in 0..20 {
            let hidden_act = acts[trial % 3];
            let out_act = if trial % 2 == 0 { Activation::Softmax } else { Activation::Sigmoid };
            let mut layers = init_stack(5, &[4, 3], hidden_act, 3, out_act, trial as u64);
            for layer in &mut layers {
                layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
            }
            let x = Matrix::from_shape_fn((4, 5), |_| rng.random_range(-1.0..1.0));
            let proj = Matrix::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
            let (_, cache) = forward(&layers, &x, None, false).unwrap();
            let (grads, gx) = backward(&layers, &cache, &proj).unwrap();
            let h = 1e-6;
            for l in 0..layers.len() {
                for idx in 0..layers[l].weights.len() {
                    let (r, c) = (idx / layers[l].weights.ncols(), idx % layers[l].weights.ncols());
                    let orig = layers[l].weights[[r, c]];
                    layers[l].weights[[r, c]] = orig + h;
                    let fp = projected_loss(&layers, &x, &proj);
                    layers[l].weights[[r, c]] = orig - h;
                    let fm = projected_loss(&layers, &x, &proj);
                    layers[l].weights[[r, c]] = orig;
                    let num = (fp - fm) / (2.0 * h);
                    let ana = grads[l].weights[[r, c]];
                    let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-4);
                    assert!(rel < 1e-5, "layer {l} w[{r},{c}]: {ana} vs {num}");
                }
            }
            let mut xp = x.clone();
            for r in 0..x.nrows() {
                for c in 0..x.ncols() {
                    let orig = x[[r, c]];
                    xp[[r, c]] = orig + h;
                    let fp = projected_loss(&layers, &xp, &proj);
                    xp[[r, c]] = orig - h;
                    let fm = projected_loss(&layers, &xp, &proj);
                    xp[[r, c]] = orig;
                    let num = (fp - fm) / (2.0 * h);
                    let rel = (num - gx[[r, c]]).abs() / num.abs().max(gx[[r, c]].abs()).max(1e-4);
                    assert!(rel < 1e-5);
                }
            }
        }
    }
}
