//! Deep embedded clustering.
//!
//! A stacked denoising autoencoder is pre-trained layer by layer, fine-tuned
//! end to end, and its encoder is then refined jointly with cluster centroids
//! by minimizing `KL(P‖Q)` between Student-t soft assignments `Q` and their
//! sharpened target `P`, plus a weighted reconstruction term.

use ndarray::Axis;
use rand::seq::SliceRandom;
use thiserror::Error;

use crate::kmeans::{self, KMeansConfig, KMeansError};
use crate::nn::{
    argmax_rows, backward, forward, xavier_init, Activation, DenseLayer, Dropout, DropoutSpec, LayerGrad,
    Matrix, NnError, Optimizer, OptimizerConfig, Vector,
};
use crate::report::{csv_escape, format_float, CsvTable};

#[derive(Debug, Error)]
pub enum DecError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input values must lie in [0, 1]")]
    ValueOutOfRange,
    #[error("cluster {0} has zero total soft assignment")]
    DegenerateCluster(usize),
    #[error("q[{row}][{col}] is zero where p is positive")]
    ZeroQEntry { row: usize, col: usize },
    #[error("k = {k} needs at least k points, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("autoencoder has not been pre-trained")]
    NotPretrained,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = DecError> = std::result::Result<T, E>;

fn shape(msg: impl Into<String>) -> DecError {
    DecError::ShapeMismatch(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    /// `dims[l] → dims[l+1]`.
    pub encoder: Vec<DenseLayer>,
    /// Mirror of the encoder, innermost layer first.
    pub decoder: Vec<DenseLayer>,
    pub pretrained: bool,
}

fn pair_activations(pair: usize, pairs: usize) -> (Activation, Activation) {
    let enc = if pair + 1 == pairs { Activation::Linear } else { Activation::Relu };
    let dec = if pair == 0 { Activation::Linear } else { Activation::Relu };
    (enc, dec)
}

impl Autoencoder {
    /// Xavier-initialized stack for `dims = [input, h1, ..., latent]`.
    pub fn new(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(DecError::InvalidConfig(format!("bad autoencoder dims {dims:?}")));
        }
        let pairs = dims.len() - 1;
        let mut encoder = Vec::with_capacity(pairs);
        let mut decoder = Vec::with_capacity(pairs);
        for l in 0..pairs {
            let (ea, da) = pair_activations(l, pairs);
            encoder.push(DenseLayer {
                weights: xavier_init(dims[l], dims[l + 1], crate::derive_seed(seed, 2 * l as u64)),
                bias: Vector::zeros(dims[l + 1]),
                activation: ea,
            });
            decoder.push(DenseLayer {
                weights: xavier_init(dims[l + 1], dims[l], crate::derive_seed(seed, 2 * l as u64 + 1)),
                bias: Vector::zeros(dims[l]),
                activation: da,
            });
        }
        decoder.reverse();
        Ok(Autoencoder { encoder, decoder, pretrained: false })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.encoder[0].input_dim()];
        d.extend(self.encoder.iter().map(|l| l.output_dim()));
        d
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().map(|l| l.output_dim()).unwrap_or(0)
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        Ok(forward(&self.encoder, x, None, false)?.0)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        Ok(forward(&self.decoder, &self.encode(x)?, None, false)?.0)
    }

    pub fn reconstruction_loss(&self, x: &Matrix) -> Result<f64> {
        Ok(mse(&self.reconstruct(x)?, x))
    }

    /// Encoder followed by decoder as one stack.
    pub fn full_stack(&self) -> Vec<DenseLayer> {
        self.encoder.iter().chain(&self.decoder).cloned().collect()
    }

    fn set_full_stack(&mut self, layers: Vec<DenseLayer>) {
        let n = self.encoder.len();
        let mut layers = layers;
        self.decoder = layers.split_off(n);
        self.encoder = layers;
    }
}

/// Mean over rows of the squared Euclidean distance `‖y_i − x_i‖²`.
pub fn mse(y: &Matrix, x: &Matrix) -> f64 {
    let n = x.nrows().max(1) as f64;
    y.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n
}

/// Gradient of [`mse`] with respect to `y`.
pub fn mse_grad(y: &Matrix, x: &Matrix) -> Matrix {
    (y - x) * (2.0 / x.nrows().max(1) as f64)
}

/// Step learning-rate schedule: divide by `factor` every `every` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecay {
    pub every: usize,
    pub factor: f64,
}

impl StepDecay {
    pub fn rate(&self, base: f64, iteration: usize) -> f64 {
        if self.every == 0 {
            return base;
        }
        base / self.factor.powi((iteration / self.every) as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeConfig {
    /// Widths after the input, ending with the latent dimension.
    pub hidden: Vec<usize>,
    pub corruption: f64,
    pub iterations_per_layer: usize,
    pub finetune_iterations: usize,
    pub optimizer: OptimizerConfig,
    pub decay: Option<StepDecay>,
    pub seed: u64,
}

impl Default for SaeConfig {
    fn default() -> Self {
        SaeConfig {
            hidden: vec![500, 250, 100],
            corruption: 0.2,
            iterations_per_layer: 5000,
            finetune_iterations: 5000,
            optimizer: OptimizerConfig::sgd(1e-4, 0.9, 128),
            decay: Some(StepDecay { every: 500, factor: 10.0 }),
            seed: 0,
        }
    }
}

impl SaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(DecError::InvalidConfig("hidden widths must be non-empty and positive".into()));
        }
        DropoutSpec::new(self.corruption, 0).validate()?;
        self.optimizer.validate()?;
        if let Some(d) = self.decay {
            if !(d.factor > 0.0) {
                return Err(DecError::InvalidConfig("decay factor must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Draws mini-batches by walking a reshuffled permutation.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        BatchSampler { order: (0..n).collect(), pos: n, rng: crate::rng_from_seed(seed) }
    }

    fn next(&mut self, size: usize) -> Vec<usize> {
        let size = size.min(self.order.len());
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            let take = (size - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

/// Gradients of [`mse`] for `stack` fed with `input`, against
/// `target`. `dropout` corrupts the inputs of layers after the first.
fn reconstruction_grads(
    stack: &[DenseLayer],
    input: &Matrix,
    target: &Matrix,
    dropout: Option<&mut Dropout>,
) -> Result<(f64, Vec<LayerGrad>)> {
    let (y, cache) = forward(stack, input, dropout, true)?;
    let (grads, _) = backward(stack, &cache, &mse_grad(&y, target))?;
    Ok((mse(&y, target), grads))
}

fn train_reconstruction(
    stack: &mut [DenseLayer],
    data: &Matrix,
    corruption: f64,
    iterations: usize,
    optimizer: &OptimizerConfig,
    decay: Option<StepDecay>,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut opt = Optimizer::new(optimizer)?;
    let base_lr = opt.learning_rate();
    let mut sampler = BatchSampler::new(data.nrows(), crate::derive_seed(seed, 0));
    let mut input_noise = Dropout::new(&DropoutSpec::new(corruption, crate::derive_seed(seed, 1)))?;
    let mut code_noise = Dropout::new(&DropoutSpec::new(corruption, crate::derive_seed(seed, 2)))?;
    let mut losses = Vec::with_capacity(iterations);
    for it in 0..iterations {
        if let Some(d) = decay {
            opt.set_learning_rate(d.rate(base_lr, it));
        }
        let idx = sampler.next(optimizer.batch_size);
        let clean = data.select(Axis(0), &idx);
        let (noisy, _) = input_noise.apply(&clean);
        let (loss, grads) = reconstruction_grads(stack, &noisy, &clean, Some(&mut code_noise))?;
        if !loss.is_finite() {
            return Err(NnError::NonFinite("autoencoder loss").into());
        }
        opt.step_layers(0, stack, &grads)?;
        losses.push(loss);
    }
    Ok(losses)
}

fn check_unit_range(x: &Matrix) -> Result<()> {
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(DecError::ValueOutOfRange);
    }
    Ok(())
}

/// Greedy layer-wise denoising pre-training. Pair `l` reconstructs the clean
/// codes of pairs `< l` from a dropout-corrupted copy, with its own code
/// corrupted again before decoding.
pub fn pretrain_sae(x: &Matrix, config: &SaeConfig) -> Result<Autoencoder> {
    config.validate()?;
    check_unit_range(x)?;
    if x.nrows() == 0 {
        return Err(shape("no rows to pre-train on"));
    }
    let mut dims = vec![x.ncols()];
    dims.extend_from_slice(&config.hidden);
    let mut ae = Autoencoder::new(&dims, config.seed)?;
    let pairs = ae.encoder.len();
    let mut input = x.clone();
    for l in 0..pairs {
        let mut pair = vec![ae.encoder[l].clone(), ae.decoder[pairs - 1 - l].clone()];
        train_reconstruction(
            &mut pair,
            &input,
            config.corruption,
            config.iterations_per_layer,
            &config.optimizer,
            config.decay,
            crate::derive_seed(config.seed, 100 + l as u64),
        )?;
        let dec = pair.pop().expect("pair");
        let enc = pair.pop().expect("pair");
        if l + 1 < pairs {
            input = enc.apply(&input);
        }
        ae.encoder[l] = enc;
        ae.decoder[pairs - 1 - l] = dec;
    }
    ae.pretrained = true;
    Ok(ae)
}

/// End-to-end reconstruction training without corruption. Returns the loss
/// of every iteration.
pub fn finetune_ae(
    ae: &mut Autoencoder,
    x: &Matrix,
    iterations: usize,
    optimizer: &OptimizerConfig,
    decay: Option<StepDecay>,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.ncols() != ae.encoder[0].input_dim() {
        return Err(shape("data width differs from autoencoder input"));
    }
    let mut stack = ae.full_stack();
    let losses = train_reconstruction(&mut stack, x, 0.0, iterations, optimizer, decay, seed)?;
    ae.set_full_stack(stack);
    Ok(losses)
}

/// Pre-train and fine-tune with one configuration.
pub fn build_autoencoder(x: &Matrix, config: &SaeConfig) -> Result<Autoencoder> {
    let mut ae = pretrain_sae(x, config)?;
    finetune_ae(
        &mut ae,
        x,
        config.finetune_iterations,
        &config.optimizer,
        config.decay,
        crate::derive_seed(config.seed, 999),
    )?;
    Ok(ae)
}

fn squared_distances(z: &Matrix, centroids: &Matrix) -> Result<Matrix> {
    if z.ncols() != centroids.ncols() {
        return Err(shape(format!("points have {} dimensions, centroids {}", z.ncols(), centroids.ncols())));
    }
    let mut d = Matrix::zeros((z.nrows(), centroids.nrows()));
    for (i, zi) in z.rows().into_iter().enumerate() {
        for (j, mj) in centroids.rows().into_iter().enumerate() {
            d[[i, j]] = zi.iter().zip(mj.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    Ok(d)
}

/// Student-t soft assignment:
/// `q_ij ∝ (1 + ‖z_i − μ_j‖²/α)^{−(α+1)/2}`, rows normalized.
pub fn soft_assign(z: &Matrix, centroids: &Matrix, alpha: f64) -> Result<Matrix> {
    if !(alpha > 0.0) {
        return Err(DecError::InvalidConfig(format!("alpha {alpha} must be positive")));
    }
    let d = squared_distances(z, centroids)?;
    let power = -(alpha + 1.0) / 2.0;
    let mut q = d.mapv(|v| power * (1.0 + v / alpha).ln());
    for mut row in q.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    Ok(q)
}

/// `p_ij = (q_ij²/f_j) / Σ_j' (q_ij'²/f_j')` with `f_j = Σ_i q_ij`.
pub fn target_distribution(q: &Matrix) -> Result<Matrix> {
    let f = q.sum_axis(Axis(0));
    if let Some(j) = f.iter().position(|&v| v <= 0.0) {
        return Err(DecError::DegenerateCluster(j));
    }
    let mut p = q.mapv(|v| v * v) / &f;
    for mut row in p.rows_mut() {
        let s = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|v| v / s);
        }
    }
    Ok(p)
}

/// `Σ_ij p_ij ln(p_ij / q_ij)`, with `0·ln 0 = 0`.
pub fn kl_loss(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(shape(format!("P is {:?}, Q is {:?}", p.dim(), q.dim())));
    }
    let mut total = 0.0;
    for ((row, col), &pv) in p.indexed_iter() {
        if pv > 0.0 {
            let qv = q[[row, col]];
            if qv <= 0.0 {
                return Err(DecError::ZeroQEntry { row, col });
            }
            total += pv * (pv / qv).ln();
        }
    }
    Ok(total)
}

/// Analytic gradients of `KL(P‖Q)` with `P` fixed, with respect to the
/// embedded points and the centroids.
pub fn dec_gradients(
    z: &Matrix,
    centroids: &Matrix,
    p: &Matrix,
    q: &Matrix,
    alpha: f64,
) -> Result<(Matrix, Matrix)> {
    let (n, k) = (z.nrows(), centroids.nrows());
    if p.dim() != (n, k) || q.dim() != (n, k) {
        return Err(shape(format!("P and Q must be {n}x{k}")));
    }
    let d = squared_distances(z, centroids)?;
    let scale = (alpha + 1.0) / alpha;
    let mut dz = Matrix::zeros(z.dim());
    let mut dmu = Matrix::zeros(centroids.dim());
    for i in 0..n {
        for j in 0..k {
            let w = scale * (p[[i, j]] - q[[i, j]]) / (1.0 + d[[i, j]] / alpha);
            if w == 0.0 {
                continue;
            }
            let diff = &z.row(i) - &centroids.row(j);
            dz.row_mut(i).scaled_add(w, &diff);
            dmu.row_mut(j).scaled_add(-w, &diff);
        }
    }
    Ok((dz, dmu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecConfig {
    pub k: usize,
    pub alpha: f64,
    pub tol: f64,
    pub gamma: f64,
    /// Iterations between target refreshes; `None` means one pass over the data.
    pub update_interval: Option<usize>,
    pub optimizer: OptimizerConfig,
    pub max_iterations: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl DecConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        DecConfig {
            k,
            alpha: 1.0,
            tol: 0.001,
            gamma: 0.1,
            update_interval: None,
            optimizer: OptimizerConfig::sgd(0.01, 0.9, 128),
            max_iterations: 5000,
            kmeans_restarts: 20,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(DecError::InvalidConfig(m));
        if self.k < 2 {
            return bad(format!("k = {} but at least 2 clusters are required", self.k));
        }
        if self.k > n {
            return Err(DecError::KTooLarge { k: self.k, n });
        }
        if !(self.alpha > 0.0) {
            return bad(format!("alpha {} must be positive", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.tol) {
            return bad(format!("tol {} outside [0, 1]", self.tol));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma {} must be non-negative", self.gamma));
        }
        if self.update_interval == Some(0) {
            return bad("update interval must be positive".into());
        }
        if self.kmeans_restarts == 0 {
            return bad("kmeans_restarts must be positive".into());
        }
        self.optimizer.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecInterval {
    pub iteration: usize,
    pub kl_loss: f64,
    pub reconstruction_loss: f64,
    pub label_change_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecState {
    pub autoencoder: Autoencoder,
    pub centroids: Matrix,
    pub alpha: f64,
    pub tol: f64,
    pub gamma: f64,
    pub q: Matrix,
    pub p: Matrix,
    pub history: Vec<DecInterval>,
    pub labels: Vec<usize>,
    pub iterations_run: usize,
}

impl DecState {
    /// Latent coordinates and hard labels for new data.
    pub fn predict(&self, x: &Matrix) -> Result<(Matrix, Vec<usize>)> {
        let z = self.autoencoder.encode(x)?;
        let q = soft_assign(&z, &self.centroids, self.alpha)?;
        Ok((z, argmax_rows(&q)))
    }
}

fn change_fraction(a: &[usize], b: &[usize]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len().max(1) as f64
}

/// Refine the encoder and centroids on `KL(P‖Q) + γ·reconstruction`.
///
/// Centroids start from K-means on the initial embedding. Every
/// `update_interval` iterations `P` is recomputed from the full-data `Q`;
/// training stops once fewer than `tol` of the points changed their hard
/// label since the previous refresh.
pub fn train_dec(x: &Matrix, autoencoder: Autoencoder, config: &DecConfig) -> Result<DecState> {
    config.validate(x.nrows())?;
    if !autoencoder.pretrained {
        return Err(DecError::NotPretrained);
    }
    let n = x.nrows();
    let batch = config.optimizer.batch_size.min(n);
    let interval = config.update_interval.unwrap_or(n.div_ceil(batch));
    let mut ae = autoencoder;
    let z0 = ae.encode(x)?;
    let km = kmeans::fit(
        &z0,
        &KMeansConfig {
            k: config.k,
            max_iterations: 300,
            restarts: config.kmeans_restarts,
            seed: crate::derive_seed(config.seed, 0),
        },
    )?;
    let mut centroids = km.centroids;
    let n_enc = ae.encoder.len();
    let n_dec = ae.decoder.len();
    let centroid_slot = 2 * (n_enc + n_dec);
    let mut opt = Optimizer::new(&config.optimizer)?;
    let mut sampler = BatchSampler::new(n, crate::derive_seed(config.seed, 1));

    let mut q = soft_assign(&z0, &centroids, config.alpha)?;
    let mut p = target_distribution(&q)?;
    let mut labels = argmax_rows(&q);
    let mut history = Vec::new();
    let mut iterations_run = 0;
    for it in 0..config.max_iterations {
        if it % interval == 0 {
            let z = ae.encode(x)?;
            q = soft_assign(&z, &centroids, config.alpha)?;
            p = target_distribution(&q)?;
            let new_labels = argmax_rows(&q);
            let change = change_fraction(&labels, &new_labels);
            labels = new_labels;
            if it > 0 {
                history.push(DecInterval {
                    iteration: it,
                    kl_loss: kl_loss(&p, &q)? / n as f64,
                    reconstruction_loss: ae.reconstruction_loss(x)?,
                    label_change_fraction: change,
                });
                if change < config.tol {
                    break;
                }
            }
        }
        iterations_run = it + 1;

        let idx = sampler.next(batch);
        let xb = x.select(Axis(0), &idx);
        let pb = p.select(Axis(0), &idx);
        let (zb, enc_cache) = forward(&ae.encoder, &xb, None, true)?;
        let qb = soft_assign(&zb, &centroids, config.alpha)?;
        let (dz_kl, dmu) = dec_gradients(&zb, &centroids, &pb, &qb, config.alpha)?;
        let b = idx.len() as f64;
        let mut dz = dz_kl / b;
        let mut dec_grads = None;
        if config.gamma > 0.0 {
            let (y, dec_cache) = forward(&ae.decoder, &zb, None, true)?;
            let (mut grads, dz_rec) = backward(&ae.decoder, &dec_cache, &(mse_grad(&y, &xb) * config.gamma))?;
            dz += &dz_rec;
            for g in &mut grads {
                debug_assert!(g.weights.iter().all(|v| v.is_finite()));
            }
            dec_grads = Some(grads);
        }
        let (enc_grads, _) = backward(&ae.encoder, &enc_cache, &dz)?;
        opt.step_layers(0, &mut ae.encoder, &enc_grads)?;
        if let Some(g) = dec_grads {
            opt.step_layers(2 * n_enc, &mut ae.decoder, &g)?;
        }
        opt.step_matrix(centroid_slot, &mut centroids, &(dmu / b))?;
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("centroids").into());
        }
    }

    let z = ae.encode(x)?;
    q = soft_assign(&z, &centroids, config.alpha)?;
    p = target_distribution(&q)?;
    let final_labels = argmax_rows(&q);
    if history.last().is_none_or(|h| h.iteration != iterations_run) {
        history.push(DecInterval {
            iteration: iterations_run,
            kl_loss: kl_loss(&p, &q)? / n as f64,
            reconstruction_loss: ae.reconstruction_loss(x)?,
            label_change_fraction: change_fraction(&labels, &final_labels),
        });
    }
    Ok(DecState {
        autoencoder: ae,
        centroids,
        alpha: config.alpha,
        tol: config.tol,
        gamma: config.gamma,
        q,
        p,
        history,
        labels: final_labels,
        iterations_run,
    })
}

/// Build the autoencoder on `x` and run the clustering refinement.
pub fn cluster_dec(x: &Matrix, sae: &SaeConfig, config: &DecConfig) -> Result<DecState> {
    config.validate(x.nrows())?;
    let ae = build_autoencoder(x, sae)?;
    train_dec(x, ae, config)
}

/// `sample_id, z_1..z_d, cluster`.
pub fn embedding_table(sample_ids: &[String], z: &Matrix, labels: &[usize]) -> CsvTable {
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=z.ncols()).map(|c| format!("z_{c}")));
    header.push("cluster".into());
    let mut t = CsvTable::new(&header);
    for ((id, row), label) in sample_ids.iter().zip(z.rows()).zip(labels) {
        let mut r = vec![csv_escape(id)];
        r.extend(row.iter().map(|&v| format_float(v)));
        r.push(label.to_string());
        t.push(r);
    }
    t
}

/// `interval, iteration, kl_loss, recon_loss, label_change_fraction`.
pub fn history_table(history: &[DecInterval]) -> CsvTable {
    let mut t = CsvTable::new(&["interval", "iteration", "kl_loss", "recon_loss", "label_change_fraction"]);
    for (i, h) in history.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            h.iteration.to_string(),
            format_float(h.kl_loss),
            format_float(h.reconstruction_loss),
            format_float(h.label_change_fraction),
        ]);
    }
    t
}
