use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Matrix, NnError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    pub drop_probability: f64,
    pub seed: u64,
}

impl DropoutSpec {
    pub fn new(drop_probability: f64, seed: u64) -> Self {
        DropoutSpec { drop_probability, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(NnError::InvalidConfig(format!(
                "drop probability {} outside [0, 1)",
                self.drop_probability
            )));
        }
        Ok(())
    }
}

/// Inverted-dropout mask generator: kept units are scaled by `1/(1-p)` so
/// evaluation needs no rescaling.
#[derive(Debug, Clone)]
pub struct Dropout {
    p: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(spec: &DropoutSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Dropout { p: spec.drop_probability, rng: crate::rng_from_seed(spec.seed) })
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    /// A scaled mask, or `None` when `p == 0`.
    pub fn mask(&mut self, rows: usize, cols: usize) -> Option<Matrix> {
        if self.p == 0.0 {
            return None;
        }
        let keep = 1.0 - self.p;
        let scale = 1.0 / keep;
        let rng = &mut self.rng;
        Some(Matrix::from_shape_fn((rows, cols), |_| if rng.random::<f64>() < keep { scale } else { 0.0 }))
    }

    pub fn apply(&mut self, x: &Matrix) -> (Matrix, Option<Matrix>) {
        match self.mask(x.nrows(), x.ncols()) {
            Some(m) => (x * &m, Some(m)),
            None => (x.clone(), None),
        }
    }
}
