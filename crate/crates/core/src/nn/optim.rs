use super::{shape_err, DenseLayer, LayerGrad, Matrix, NnError, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// `v ← μv − lr·g; θ ← θ + v`.
    SgdMomentum { learning_rate: f64, momentum: f64 },
    /// Adadelta with decay `rho` and stabilizer `epsilon`. `learning_rate`
    /// scales the update and is 1 in the standard formulation.
    Adadelta { rho: f64, epsilon: f64, learning_rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub batch_size: usize,
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64, momentum: f64, batch_size: usize) -> Self {
        OptimizerConfig { kind: OptimizerKind::SgdMomentum { learning_rate, momentum }, batch_size }
    }

    pub fn adadelta(rho: f64, epsilon: f64, batch_size: usize) -> Self {
        OptimizerConfig { kind: OptimizerKind::Adadelta { rho, epsilon, learning_rate: 1.0 }, batch_size }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NnError::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        match self.kind {
            OptimizerKind::SgdMomentum { learning_rate, momentum } => {
                if !(learning_rate > 0.0 && learning_rate.is_finite()) {
                    return bad(format!("learning rate {learning_rate} must be positive"));
                }
                if !(0.0..1.0).contains(&momentum) {
                    return bad(format!("momentum {momentum} outside [0, 1)"));
                }
            }
            OptimizerKind::Adadelta { rho, epsilon, learning_rate } => {
                if !(rho > 0.0 && rho < 1.0) {
                    return bad(format!("rho {rho} outside (0, 1)"));
                }
                if !(epsilon > 0.0) {
                    return bad(format!("epsilon {epsilon} must be positive"));
                }
                if !(learning_rate > 0.0) {
                    return bad(format!("learning rate {learning_rate} must be positive"));
                }
            }
        }
        Ok(())
    }
}

fn check_len(params: usize, grads: usize, state: usize) -> Result<()> {
    if params != grads || params != state {
        return Err(shape_err(format!("optimizer step: {params} params, {grads} grads, {state} state")));
    }
    Ok(())
}

pub fn sgd_momentum_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    learning_rate: f64,
    momentum: f64,
) -> Result<()> {
    check_len(params.len(), grads.len(), velocity.len())?;
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v - learning_rate * g;
        *p += *v;
    }
    Ok(())
}

pub fn adadelta_step(
    params: &mut [f64],
    grads: &[f64],
    acc_grad: &mut [f64],
    acc_update: &mut [f64],
    rho: f64,
    epsilon: f64,
    learning_rate: f64,
) -> Result<()> {
    check_len(params.len(), grads.len(), acc_grad.len())?;
    check_len(params.len(), grads.len(), acc_update.len())?;
    for i in 0..params.len() {
        let g = grads[i];
        acc_grad[i] = rho * acc_grad[i] + (1.0 - rho) * g * g;
        let delta = -((acc_update[i] + epsilon).sqrt() / (acc_grad[i] + epsilon).sqrt()) * g;
        acc_update[i] = rho * acc_update[i] + (1.0 - rho) * delta * delta;
        params[i] += learning_rate * delta;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum SlotState {
    Sgd { velocity: Vec<f64> },
    Adadelta { acc_grad: Vec<f64>, acc_update: Vec<f64> },
}

/// Optimizer state for a fixed set of parameter tensors ("slots").
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    slots: Vec<Option<SlotState>>,
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Optimizer { kind: config.kind, slots: Vec::new() })
    }

    /// Override the SGD learning rate (step schedules). No effect on
    /// Adadelta's own scale unless it was set explicitly.
    pub fn set_learning_rate(&mut self, lr: f64) {
        match &mut self.kind {
            OptimizerKind::SgdMomentum { learning_rate, .. } => *learning_rate = lr,
            OptimizerKind::Adadelta { learning_rate, .. } => *learning_rate = lr,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match self.kind {
            OptimizerKind::SgdMomentum { learning_rate, .. } => learning_rate,
            OptimizerKind::Adadelta { learning_rate, .. } => learning_rate,
        }
    }

    pub fn step(&mut self, slot: usize, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if self.slots.len() <= slot {
            self.slots.resize(slot + 1, None);
        }
        let n = params.len();
        let state = self.slots[slot].get_or_insert_with(|| match self.kind {
            OptimizerKind::SgdMomentum { .. } => SlotState::Sgd { velocity: vec![0.0; n] },
            OptimizerKind::Adadelta { .. } => {
                SlotState::Adadelta { acc_grad: vec![0.0; n], acc_update: vec![0.0; n] }
            }
        });
        match (self.kind, state) {
            (OptimizerKind::SgdMomentum { learning_rate, momentum }, SlotState::Sgd { velocity }) => {
                sgd_momentum_step(params, grads, velocity, learning_rate, momentum)
            }
            (
                OptimizerKind::Adadelta { rho, epsilon, learning_rate },
                SlotState::Adadelta { acc_grad, acc_update },
            ) => adadelta_step(params, grads, acc_grad, acc_update, rho, epsilon, learning_rate),
            _ => unreachable!("slot state always matches optimizer kind"),
        }
    }

    pub fn step_matrix(&mut self, slot: usize, params: &mut Matrix, grads: &Matrix) -> Result<()> {
        if params.dim() != grads.dim() {
            return Err(shape_err("parameter and gradient shapes differ"));
        }
        let p = params.as_slice_mut().ok_or_else(|| shape_err("non-contiguous parameters"))?;
        let g = grads.as_standard_layout();
        self.step(slot, p, g.as_slice().expect("standard layout"))
    }

    pub fn step_vector(&mut self, slot: usize, params: &mut Vector, grads: &Vector) -> Result<()> {
        let p = params.as_slice_mut().ok_or_else(|| shape_err("non-contiguous parameters"))?;
        let g = grads.as_standard_layout();
        self.step(slot, p, g.as_slice().expect("standard layout"))
    }

    /// Update a layer stack; layer `l` uses slots `base + 2l` and `base + 2l + 1`.
    pub fn step_layers(&mut self, base: usize, layers: &mut [DenseLayer], grads: &[LayerGrad]) -> Result<()> {
        if layers.len() != grads.len() {
            return Err(shape_err("one gradient per layer required"));
        }
        for (l, (layer, g)) in layers.iter_mut().zip(grads).enumerate() {
            self.step_matrix(base + 2 * l, &mut layer.weights, &g.weights)?;
            self.step_vector(base + 2 * l + 1, &mut layer.bias, &g.bias)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_sgd_without_momentum() {
        let mut p = [1.0, -2.0];
        let mut v = [0.0, 0.0];
        sgd_momentum_step(&mut p, &[0.5, 1.0], &mut v, 0.1, 0.0).unwrap();
        assert_eq!(p, [1.0 - 0.05, -2.0 - 0.1]);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = [3.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut p, &[0.0], &mut v, 0.1, 0.9).unwrap();
        assert_eq!(p, [3.0]);
        let (mut ag, mut au) = ([0.0], [0.0]);
        for _ in 0..100 {
            adadelta_step(&mut p, &[0.0], &mut ag, &mut au, 0.95, 1e-6, 1.0).unwrap();
        }
        assert_eq!(p, [3.0]);
    }

    #[test]
    fn momentum_recurrence_two_steps() {
        let g = 2.0;
        let mut p = [0.0];
        let mut v = [0.0];
        sgd_momentum_step(&mut p, &[g], &mut v, 0.1, 0.9).unwrap();
        sgd_momentum_step(&mut p, &[g], &mut v, 0.1, 0.9).unwrap();
        // -0.1g, then 0.9(-0.1g) - 0.1g
        assert!((p[0] - (-0.1 * g * (1.0 + 1.9))).abs() < 1e-15);
    }

    #[test]
    fn adadelta_first_step() {
        let (rho, eps, g) = (0.95, 1e-6, 0.3);
        let mut p = [1.0];
        let (mut ag, mut au) = ([0.0], [0.0]);
        adadelta_step(&mut p, &[g], &mut ag, &mut au, rho, eps, 1.0).unwrap();
        let expected = -(eps.sqrt() / ((1.0 - rho) * g * g + eps).sqrt()) * g;
        assert!((p[0] - 1.0 - expected).abs() < 1e-15);
    }

    #[test]
    fn adadelta_update_bound() {
        let mut rng = crate::rng_from_seed(4);
        use rand::Rng;
        for _ in 0..1000 {
            let rho = rng.random_range(0.5..0.999);
            let eps = 10f64.powf(rng.random_range(-8.0..-2.0));
            let mut p = [0.0];
            let (mut ag, mut au) = ([rng.random_range(0.0..1.0)], [rng.random_range(0.0..1.0)]);
            let g: f64 = rng.random_range(-5.0..5.0);
            let bound = g.abs() * (eps + au[0]).sqrt() / eps.sqrt();
            adadelta_step(&mut p, &[g], &mut ag, &mut au, rho, eps, 1.0).unwrap();
            assert!(p[0].abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn optimizer_is_deterministic() {
        let cfg = OptimizerConfig::adadelta(0.9, 1e-3, 4);
        let run = || {
            let mut opt = Optimizer::new(&cfg).unwrap();
            let mut p = vec![0.5, -0.5];
            for k in 0..5 {
                opt.step(0, &mut p, &[k as f64, 1.0]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::sgd(0.0, 0.5, 1).validate().is_err());
        assert!(OptimizerConfig::sgd(0.1, 1.0, 1).validate().is_err());
        assert!(OptimizerConfig::sgd(0.1, 0.9, 0).validate().is_err());
        assert!(OptimizerConfig::adadelta(1.0, 1e-6, 1).validate().is_err());
        assert!(OptimizerConfig::adadelta(0.9, 0.0, 1).validate().is_err());
        assert!(Optimizer::new(&OptimizerConfig::adadelta(0.9, 1e-3, 8)).is_ok());
    }

    #[test]
    fn length_mismatch() {
        let mut p = [0.0; 2];
        let mut v = [0.0; 3];
        assert!(sgd_momentum_step(&mut p, &[0.0; 2], &mut v, 0.1, 0.0).is_err());
    }
}
