//! Bernoulli–Bernoulli restricted Boltzmann machine.
//!
//! Energy `E(v,h) = -b·v - c·h - vᵀWh`, factorial conditionals through the
//! logistic function, CD-1 training, and brute-force enumeration of the
//! partition function and visible marginals for tiny machines.

use ndarray::{Array1, Axis};
use rand::Rng;
use thiserror::Error;

use crate::nn::{xavier_init, Matrix, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum RbmError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input values must lie in [0, 1]")]
    ValueOutOfRange,
    #[error("exact enumeration needs m + n <= {max}, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = RbmError> = std::result::Result<T, E>;

/// Largest `m + n` accepted by the enumeration oracles.
pub const MAX_ENUMERATION_UNITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    /// `m × n`, visible by hidden.
    pub weights: Matrix,
    pub visible_bias: Vector,
    pub hidden_bias: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig { learning_rate: 0.1, epochs: 10, batch_size: 16, seed: 0 }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RbmError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(RbmError::InvalidConfig("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Intermediate quantities of one CD-1 step, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Cd1Trace {
    pub hidden_data: Matrix,
    pub hidden_sample: Matrix,
    pub visible_recon: Matrix,
    pub hidden_recon: Matrix,
    pub reconstruction_error: f64,
}

fn sigmoid_in_place(m: &mut Matrix) {
    m.mapv_inplace(crate::nn::sigmoid);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Rbm {
    pub fn zeros(visible: usize, hidden: usize) -> Self {
        Rbm {
            weights: Matrix::zeros((visible, hidden)),
            visible_bias: Vector::zeros(visible),
            hidden_bias: Vector::zeros(hidden),
        }
    }

    /// Xavier-uniform weights from `seed`, zero biases.
    pub fn new_random(visible: usize, hidden: usize, seed: u64) -> Self {
        Rbm { weights: xavier_init(visible, hidden, seed), ..Rbm::zeros(visible, hidden) }
    }

    /// Set each visible bias to `ln(p / (1 − p))` of its column mean in
    /// `data`, with `p` clamped to `[0.001, 0.999]`, so that the biases alone
    /// already reproduce the marginal unit activities.
    pub fn init_visible_bias(&mut self, data: &Matrix) -> Result<()> {
        self.check_visible(data.ncols())?;
        if data.nrows() == 0 {
            return Ok(());
        }
        let means = data.mean_axis(ndarray::Axis(0)).expect("non-empty rows");
        self.visible_bias = means.mapv(|p| {
            let p = p.clamp(1e-3, 1.0 - 1e-3);
            (p / (1.0 - p)).ln()
        });
        Ok(())
    }

    pub fn n_visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.ncols()
    }

    fn check_visible(&self, len: usize) -> Result<()> {
        if len != self.n_visible() {
            return Err(RbmError::ShapeMismatch(format!(
                "visible vector has {len} entries, machine has {}",
                self.n_visible()
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, len: usize) -> Result<()> {
        if len != self.n_hidden() {
            return Err(RbmError::ShapeMismatch(format!(
                "hidden vector has {len} entries, machine has {}",
                self.n_hidden()
            )));
        }
        Ok(())
    }

    pub fn energy(&self, v: &[f64], h: &[f64]) -> Result<f64> {
        self.check_visible(v.len())?;
        self.check_hidden(h.len())?;
        let mut e =
            -dot(self.visible_bias.as_slice().unwrap(), v) - dot(self.hidden_bias.as_slice().unwrap(), h);
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                e -= vi * dot(self.weights.row(i).as_slice().unwrap(), h);
            }
        }
        Ok(e)
    }

    /// `p(h_j = 1 | v) = σ(c_j + Σ_i v_i w_ij)`.
    pub fn hidden_probs(&self, v: &[f64]) -> Result<Vector> {
        self.check_visible(v.len())?;
        let v = ndarray::ArrayView1::from(v);
        Ok((v.dot(&self.weights) + &self.hidden_bias).mapv(crate::nn::sigmoid))
    }

    /// `p(v_i = 1 | h) = σ(b_i + Σ_j h_j w_ij)`.
    pub fn visible_probs(&self, h: &[f64]) -> Result<Vector> {
        self.check_hidden(h.len())?;
        let h = ndarray::ArrayView1::from(h);
        Ok((self.weights.dot(&h) + &self.visible_bias).mapv(crate::nn::sigmoid))
    }

    /// Row-wise hidden probabilities for a batch of visible rows.
    pub fn hidden_probs_batch(&self, v: &Matrix) -> Result<Matrix> {
        self.check_visible(v.ncols())?;
        let mut h = v.dot(&self.weights) + &self.hidden_bias;
        sigmoid_in_place(&mut h);
        Ok(h)
    }

    pub fn visible_probs_batch(&self, h: &Matrix) -> Result<Matrix> {
        self.check_hidden(h.ncols())?;
        let mut v = h.dot(&self.weights.t()) + &self.visible_bias;
        sigmoid_in_place(&mut v);
        Ok(v)
    }

    /// Mean-field reconstruction error: `v → p(h|v) → p(v|h)`, mean squared
    /// difference. Deterministic.
    pub fn reconstruction_error(&self, data: &Matrix) -> Result<f64> {
        let h = self.hidden_probs_batch(data)?;
        let v = self.visible_probs_batch(&h)?;
        Ok(mean_squared(data, &v))
    }

    /// One CD-1 step on `batch` with the intermediate quantities returned.
    pub fn cd1_step<R: Rng + ?Sized>(
        &mut self,
        batch: &Matrix,
        learning_rate: f64,
        rng: &mut R,
    ) -> Result<Cd1Trace> {
        self.check_visible(batch.ncols())?;
        if batch.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(RbmError::ValueOutOfRange);
        }
        let n = batch.nrows().max(1) as f64;
        let hidden_data = self.hidden_probs_batch(batch)?;
        let hidden_sample = hidden_data.mapv(|p| if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        let visible_recon = self.visible_probs_batch(&hidden_sample)?;
        let hidden_recon = self.hidden_probs_batch(&visible_recon)?;

        let positive = batch.t().dot(&hidden_data);
        let negative = visible_recon.t().dot(&hidden_recon);
        self.weights.scaled_add(learning_rate / n, &(positive - negative));
        let dv = (batch - &visible_recon).sum_axis(Axis(0));
        self.visible_bias.scaled_add(learning_rate / n, &dv);
        let dh = (&hidden_data - &hidden_recon).sum_axis(Axis(0));
        self.hidden_bias.scaled_add(learning_rate / n, &dh);

        let reconstruction_error = mean_squared(batch, &visible_recon);
        Ok(Cd1Trace { hidden_data, hidden_sample, visible_recon, hidden_recon, reconstruction_error })
    }

    /// One CD-1 update; returns the batch reconstruction error.
    pub fn cd1_update<R: Rng + ?Sized>(
        &mut self,
        batch: &Matrix,
        learning_rate: f64,
        rng: &mut R,
    ) -> Result<f64> {
        Ok(self.cd1_step(batch, learning_rate, rng)?.reconstruction_error)
    }

    /// CD-1 over `epochs` passes of shuffled mini-batches. Returns the mean
    /// batch reconstruction error of every epoch.
    pub fn train(&mut self, data: &Matrix, config: &CdConfig) -> Result<Vec<f64>> {
        use rand::seq::SliceRandom;
        config.validate()?;
        self.check_visible(data.ncols())?;
        if data.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(RbmError::ValueOutOfRange);
        }
        let mut rng = crate::rng_from_seed(config.seed);
        let mut order: Vec<usize> = (0..data.nrows()).collect();
        let mut history = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch = data.select(Axis(0), chunk);
                total += self.cd1_update(&batch, config.learning_rate, &mut rng)? * chunk.len() as f64;
            }
            history.push(total / data.nrows().max(1) as f64);
        }
        Ok(history)
    }

    fn check_enumerable(&self) -> Result<()> {
        let units = self.n_visible() + self.n_hidden();
        if units > MAX_ENUMERATION_UNITS {
            return Err(RbmError::TooLarge { max: MAX_ENUMERATION_UNITS, got: units });
        }
        Ok(())
    }

    /// `ln Σ_h exp(-E(v, h))` by explicit enumeration of hidden states.
    fn log_unnormalized_marginal(&self, v: &[f64]) -> f64 {
        let n = self.n_hidden();
        let mut h = vec![0.0; n];
        let terms: Vec<f64> = (0..1u64 << n)
            .map(|bits| {
                fill_bits(&mut h, bits);
                -self.energy(v, &h).expect("shapes checked")
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// `ln Z`, enumerating every `(v, h)` pair.
    pub fn exact_log_partition(&self) -> Result<f64> {
        self.check_enumerable()?;
        let (m, n) = (self.n_visible(), self.n_hidden());
        let mut v = vec![0.0; m];
        let mut h = vec![0.0; n];
        let mut terms = Vec::with_capacity(1 << (m + n));
        for vbits in 0..1u64 << m {
            fill_bits(&mut v, vbits);
            for hbits in 0..1u64 << n {
                fill_bits(&mut h, hbits);
                terms.push(-self.energy(&v, &h)?);
            }
        }
        Ok(log_sum_exp(&terms))
    }

    /// `Z = Σ_{v,h} exp(-E(v,h))`.
    pub fn exact_partition(&self) -> Result<f64> {
        Ok(self.exact_log_partition()?.exp())
    }

    /// `p(v) = Σ_h exp(-E(v,h)) / Z`.
    pub fn exact_marginal(&self, v: &[f64]) -> Result<f64> {
        self.check_enumerable()?;
        self.check_visible(v.len())?;
        let log_z = self.exact_log_partition()?;
        Ok((self.log_unnormalized_marginal(v) - log_z).exp())
    }

    /// Mean exact log-likelihood of the rows of `data`.
    pub fn exact_log_likelihood(&self, data: &Matrix) -> Result<f64> {
        self.check_enumerable()?;
        self.check_visible(data.ncols())?;
        let log_z = self.exact_log_partition()?;
        let total: f64 =
            data.rows().into_iter().map(|row| self.log_unnormalized_marginal(&row.to_vec()) - log_z).sum();
        Ok(total / data.nrows().max(1) as f64)
    }
}

fn fill_bits(out: &mut [f64], bits: u64) {
    for (i, x) in out.iter_mut().enumerate() {
        *x = ((bits >> i) & 1) as f64;
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn mean_squared(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.len().max(1) as f64;
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
}

/// All `2^m` binary visible vectors as rows.
pub fn all_visible_states(m: usize) -> Matrix {
    let mut out = Matrix::zeros((1 << m, m));
    for (bits, mut row) in out.rows_mut().into_iter().enumerate() {
        for i in 0..m {
            row[i] = ((bits >> i) & 1) as f64;
        }
    }
    out
}

/// Convenience for tests and callers holding plain vectors.
pub fn vector(values: &[f64]) -> Array1<f64> {
    Array1::from(values.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_rbm(m: usize, n: usize, seed: u64) -> Rbm {
        let mut rng = crate::rng_from_seed(seed);
        Rbm {
            weights: Matrix::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0)),
            visible_bias: Vector::from_shape_fn(m, |_| rng.random_range(-1.0..1.0)),
            hidden_bias: Vector::from_shape_fn(n, |_| rng.random_range(-1.0..1.0)),
        }
    }

    #[test]
    fn energy_values() {
        let r = random_rbm(3, 2, 1);
        assert_eq!(r.energy(&[0.0; 3], &[0.0; 2]).unwrap(), 0.0);
        let tiny =
            Rbm { weights: array![[0.1]], visible_bias: vector(&[0.5]), hidden_bias: vector(&[-0.25]) };
        assert!((tiny.energy(&[1.0], &[1.0]).unwrap() + 0.35).abs() < 1e-15);
        // linear in b
        let v = [1.0, 0.0, 1.0];
        let h = [1.0, 1.0];
        let mut r2 = r.clone();
        r2.visible_bias *= 2.0;
        let e0 = Rbm { visible_bias: Vector::zeros(3), ..r.clone() }.energy(&v, &h).unwrap();
        let e1 = r.energy(&v, &h).unwrap();
        let e2 = r2.energy(&v, &h).unwrap();
        assert!(((e2 - e0) - 2.0 * (e1 - e0)).abs() < 1e-12);
        assert!(r.energy(&[0.0; 2], &h).is_err());
    }

    #[test]
    fn conditionals() {
        let z = Rbm::zeros(3, 2);
        assert!(z.hidden_probs(&[1.0, 0.0, 1.0]).unwrap().iter().all(|&p| p == 0.5));
        assert!(z.visible_probs(&[1.0, 0.0]).unwrap().iter().all(|&p| p == 0.5));
        let mut sat = Rbm::zeros(2, 1);
        sat.hidden_bias[0] = 30.0;
        assert!((sat.hidden_probs(&[0.0, 0.0]).unwrap()[0] - 1.0).abs() < 1e-13);

        let r = random_rbm(3, 3, 5);
        let v = [1.0, 0.0, 1.0];
        let h = r.hidden_probs(&v).unwrap();
        for j in 0..3 {
            let x = r.hidden_bias[j] + r.weights[[0, j]] + r.weights[[2, j]];
            assert!((h[j] - 1.0 / (1.0 + (-x).exp())).abs() < 1e-15);
        }
        let hv = [0.0, 1.0, 1.0];
        let vp = r.visible_probs(&hv).unwrap();
        for i in 0..3 {
            let x = r.visible_bias[i] + r.weights[[i, 1]] + r.weights[[i, 2]];
            assert!((vp[i] - 1.0 / (1.0 + (-x).exp())).abs() < 1e-15);
        }
        // swapping roles: visible_probs of r equals hidden_probs of the transposed machine
        let t = Rbm {
            weights: r.weights.t().to_owned(),
            visible_bias: r.hidden_bias.clone(),
            hidden_bias: r.visible_bias.clone(),
        };
        assert_eq!(t.hidden_probs(&hv).unwrap(), vp);
    }

    #[test]
    fn cd1_fixed_points() {
        let mut rng = crate::rng_from_seed(0);
        let mut r = random_rbm(4, 3, 2);
        let before = r.clone();
        let batch = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]];
        r.cd1_update(&batch, 0.0, &mut rng).unwrap();
        assert_eq!(r, before);
        assert_eq!(
            r.cd1_update(&array![[2.0, 0.0, 0.0, 0.0]], 0.1, &mut rng),
            Err(RbmError::ValueOutOfRange)
        );
    }

    #[test]
    fn cd1_uses_sampled_hidden_for_reconstruction() {
        let mut r = random_rbm(4, 3, 7);
        let original = r.clone();
        let batch = array![[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 0.0, 1.0], [0.5, 0.5, 0.2, 0.9]];
        let mut rng = crate::rng_from_seed(11);
        let trace = r.cd1_step(&batch, 0.05, &mut rng).unwrap();
        assert!(trace.hidden_sample.iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(trace.hidden_data, original.hidden_probs_batch(&batch).unwrap());
        assert_eq!(trace.visible_recon, original.visible_probs_batch(&trace.hidden_sample).unwrap());
        assert_eq!(trace.hidden_recon, original.hidden_probs_batch(&trace.visible_recon).unwrap());

        // replay the uniforms to confirm the Bernoulli threshold
        let mut replay = crate::rng_from_seed(11);
        for (&p, &s) in trace.hidden_data.iter().zip(trace.hidden_sample.iter()) {
            let u: f64 = replay.random();
            assert_eq!(s, if u < p { 1.0 } else { 0.0 });
        }

        let n = batch.nrows() as f64;
        let dw = (batch.t().dot(&trace.hidden_data) - trace.visible_recon.t().dot(&trace.hidden_recon))
            * (0.05 / n);
        let diff = &r.weights - &original.weights - dw;
        assert!(diff.iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn cd1_zero_delta_when_reconstruction_is_exact() {
        // p(v|h) = v_data needs saturated units; with v_data = recon the
        // positive and negative statistics cancel exactly
        let mut r = Rbm::zeros(2, 1);
        r.visible_bias = vector(&[-800.0, 800.0]);
        let batch = array![[0.0, 1.0]];
        let before = r.clone();
        let mut rng = crate::rng_from_seed(1);
        let trace = r.cd1_step(&batch, 0.5, &mut rng).unwrap();
        assert_eq!(trace.visible_recon, batch);
        assert_eq!(trace.hidden_recon, trace.hidden_data);
        assert_eq!(r, before);
    }

    #[test]
    fn partition_small_cases() {
        assert!((Rbm::zeros(1, 1).exact_partition().unwrap() - 4.0).abs() < 1e-12);
        assert!((Rbm::zeros(2, 2).exact_partition().unwrap() - 16.0).abs() < 1e-12);
        assert!(matches!(Rbm::zeros(12, 9).exact_partition(), Err(RbmError::TooLarge { .. })));
    }

    #[test]
    fn marginals_normalize() {
        let z = Rbm::zeros(3, 2);
        assert!((z.exact_marginal(&[1.0, 0.0, 1.0]).unwrap() - 0.125).abs() < 1e-15);
        for seed in 0..5 {
            let r = random_rbm(3, 3, seed);
            let states = all_visible_states(3);
            let total: f64 = states.rows().into_iter().map(|v| r.exact_marginal(&v.to_vec()).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_rises_with_aligned_bias() {
        let mut r = Rbm::zeros(1, 1);
        let p0 = r.exact_marginal(&[1.0]).unwrap();
        r.visible_bias[0] = 0.7;
        let p1 = r.exact_marginal(&[1.0]).unwrap();
        // closed form: e^b / (1 + e^b) with zero weights
        assert!((p1 - 0.7f64.exp() / (1.0 + 0.7f64.exp())).abs() < 1e-14);
        assert!(p1 > p0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]];
        let cfg = CdConfig { learning_rate: 0.1, epochs: 5, batch_size: 1, seed: 3 };
        let mut a = Rbm::new_random(4, 3, 1);
        let mut b = a.clone();
        assert_eq!(a.train(&data, &cfg).unwrap(), b.train(&data, &cfg).unwrap());
        assert_eq!(a, b);
    }

    fn four_patterns() -> Matrix {
        array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0], [1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]]
    }

    #[test]
    fn cd1_halves_reconstruction_error() {
        let data = four_patterns();
        let mut r = Rbm::new_random(4, 3, 1);
        let before = r.reconstruction_error(&data).unwrap();
        let cfg = CdConfig { learning_rate: 0.1, epochs: 200, batch_size: 1, seed: 1 };
        r.train(&data, &cfg).unwrap();
        let after = r.reconstruction_error(&data).unwrap();
        assert!(after <= 0.5 * before, "{before} -> {after}");
    }

    #[test]
    fn cd1_improves_exact_likelihood() {
        let data = four_patterns();
        let improved = (0..20u64)
            .filter(|&seed| {
                let mut r = Rbm::new_random(4, 3, seed);
                let before = r.exact_log_likelihood(&data).unwrap();
                let cfg = CdConfig { learning_rate: 0.1, epochs: 200, batch_size: 1, seed };
                r.train(&data, &cfg).unwrap();
                r.exact_log_likelihood(&data).unwrap() > before
            })
            .count();
        assert!(improved >= 19, "{improved}/20");
    }

    #[test]
    fn visible_bias_from_column_means() {
        let data = array![[1.0, 0.5, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0]];
        let mut r = Rbm::new_random(4, 2, 0);
        let w = r.weights.clone();
        r.init_visible_bias(&data).unwrap();
        let expected = [0.0, (0.25f64 / 0.75).ln(), (0.001f64 / 0.999).ln(), (0.999f64 / 0.001).ln()];
        for (b, e) in r.visible_bias.iter().zip(expected) {
            assert!((b - e).abs() < 1e-12, "{b} vs {e}");
        }
        assert_eq!(r.weights, w);
        assert!(r.init_visible_bias(&Matrix::zeros((1, 3))).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CdConfig { learning_rate: 0.0, ..CdConfig::default() }.validate().is_err());
        assert!(CdConfig { batch_size: 0, ..CdConfig::default() }.validate().is_err());
        assert!(CdConfig::default().validate().is_ok());
    }
}
