//! Deep belief network classifier: greedy layer-wise RBM pre-training, then
//! the stack is unrolled into a sigmoid encoder with a softmax head and
//! fine-tuned on cross-entropy.

use thiserror::Error;

use crate::featurize::{FeatureMatrix, LabeledDataset, Scaling};
use crate::mlp::{check_training_labels, stack_proba, ClassifierError, DROPOUT_STREAM, SHUFFLE_STREAM};
use crate::nn::{
    argmax_rows, train_classifier, xavier_init, Activation, DenseLayer, DropoutSpec, EpochRecord, Matrix,
    NnError, OptimizerConfig, SupervisedParams, Vector,
};
use crate::rbm::{CdConfig, Rbm, RbmError};

#[derive(Debug, Error)]
pub enum DbnError {
    #[error(transparent)]
    Rbm(#[from] RbmError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = DbnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub dropout: DropoutSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbnConfig {
    /// Hidden widths; the input width comes from the data.
    pub hidden_layers: Vec<usize>,
    /// Applied to every layer; layer `l` uses stream `l` of `pretrain.seed`.
    pub pretrain: CdConfig,
    /// Skip CD entirely and fine-tune from the random initialization.
    pub pretrain_enabled: bool,
    pub finetune: FinetuneConfig,
    pub scaling: Scaling,
    pub seed: u64,
}

impl Default for DbnConfig {
    fn default() -> Self {
        DbnConfig {
            hidden_layers: vec![256; 4],
            pretrain: CdConfig { learning_rate: 0.01, epochs: 10, batch_size: 32, seed: 0 },
            pretrain_enabled: true,
            finetune: FinetuneConfig {
                optimizer: OptimizerConfig::adadelta(0.99, 1e-8, 32),
                epochs: 50,
                dropout: DropoutSpec::new(0.1, 0),
            },
            scaling: Scaling::Half,
            seed: 0,
        }
    }
}

impl DbnConfig {
    /// Set the base seed and every stream derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.pretrain.seed = crate::derive_seed(seed, PRETRAIN_STREAM);
        self.finetune.dropout.seed = crate::derive_seed(seed, DROPOUT_STREAM);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DbnError::Classifier(ClassifierError::InvalidConfig(m.into())));
        if self.hidden_layers.is_empty() {
            return bad("at least one hidden layer required");
        }
        if self.hidden_layers.contains(&0) {
            return bad("hidden widths must be at least 1");
        }
        if self.pretrain_enabled {
            self.pretrain.validate()?;
        }
        self.finetune.dropout.validate()?;
        self.finetune.optimizer.validate()?;
        Ok(())
    }
}

const PRETRAIN_STREAM: u64 = 0x5052_4554;

/// The pre-trained stack and its per-layer, per-epoch reconstruction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub rbms: Vec<Rbm>,
    pub history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dbn {
    pub rbms: Vec<Rbm>,
    /// Fine-tuned sigmoid encoder followed by the softmax head.
    pub layers: Vec<DenseLayer>,
    pub label_vocabulary: Vec<String>,
    pub scaling: Scaling,
    pub pretrain_history: Vec<Vec<f64>>,
    pub finetune_history: Vec<EpochRecord>,
}

/// Layer `l`'s initial RBM: the same Xavier draw a fresh feed-forward stack
/// would use for its layer `l`, with zero biases.
fn initial_rbm(visible: usize, hidden: usize, seed: u64, layer: usize) -> Rbm {
    Rbm::new_random(visible, hidden, crate::derive_seed(seed, layer as u64))
}

/// Greedy layer-wise CD-1 on values in `[0, 1]`. Never sees labels.
pub fn pretrain_features(x: &Matrix, config: &DbnConfig) -> Result<Pretrained> {
    config.validate()?;
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(RbmError::ValueOutOfRange.into());
    }
    let mut input = x.clone();
    let mut visible = x.ncols();
    let mut rbms = Vec::with_capacity(config.hidden_layers.len());
    let mut history = Vec::with_capacity(config.hidden_layers.len());
    for (l, &hidden) in config.hidden_layers.iter().enumerate() {
        let mut rbm = initial_rbm(visible, hidden, config.seed, l);
        if config.pretrain_enabled {
            rbm.init_visible_bias(&input)?;
            let cd = CdConfig { seed: crate::derive_seed(config.pretrain.seed, l as u64), ..config.pretrain };
            history.push(rbm.train(&input, &cd)?);
        } else {
            history.push(Vec::new());
        }
        if l + 1 < config.hidden_layers.len() {
            input = rbm.hidden_probs_batch(&input)?;
        }
        rbms.push(rbm);
        visible = hidden;
    }
    Ok(Pretrained { rbms, history })
}

pub fn pretrain(unlabeled: &FeatureMatrix, config: &DbnConfig) -> Result<Pretrained> {
    pretrain_features(&unlabeled.to_features(config.scaling), config)
}

/// Recognition weights and hidden biases of each RBM as sigmoid layers;
/// visible biases are dropped.
pub fn encoder_from_rbms(rbms: &[Rbm]) -> Vec<DenseLayer> {
    rbms.iter()
        .map(|r| DenseLayer {
            weights: r.weights.clone(),
            bias: r.hidden_bias.clone(),
            activation: Activation::Sigmoid,
        })
        .collect()
}

pub fn finetune_features(
    pretrained: Pretrained,
    x: &Matrix,
    labels: &[usize],
    label_vocabulary: &[String],
    config: &DbnConfig,
    validation: Option<(&Matrix, &[usize])>,
) -> Result<Dbn> {
    config.validate()?;
    check_training_labels(labels, x.ncols())?;
    if label_vocabulary.len() < 2 {
        return Err(ClassifierError::SingleClass.into());
    }
    let mut layers = encoder_from_rbms(&pretrained.rbms);
    let last = layers.last().map(|l| l.output_dim()).unwrap_or(x.ncols());
    let n_classes = label_vocabulary.len();
    layers.push(DenseLayer {
        weights: xavier_init(last, n_classes, crate::derive_seed(config.seed, pretrained.rbms.len() as u64)),
        bias: Vector::zeros(n_classes),
        activation: Activation::Softmax,
    });
    let params = SupervisedParams {
        epochs: config.finetune.epochs,
        optimizer: config.finetune.optimizer,
        dropout: config.finetune.dropout,
        seed: crate::derive_seed(config.seed, SHUFFLE_STREAM),
    };
    let finetune_history = train_classifier(&mut layers, x, labels, n_classes, &params, validation)?;
    Ok(Dbn {
        rbms: pretrained.rbms,
        layers,
        label_vocabulary: label_vocabulary.to_vec(),
        scaling: config.scaling,
        pretrain_history: pretrained.history,
        finetune_history,
    })
}

pub fn finetune(
    pretrained: Pretrained,
    train: &LabeledDataset,
    config: &DbnConfig,
    validation: Option<&LabeledDataset>,
) -> Result<Dbn> {
    let x = train.features(config.scaling);
    let vx = validation.map(|v| v.features(config.scaling));
    let val = match (validation, vx.as_ref()) {
        (Some(v), Some(m)) => Some((m, v.labels.as_slice())),
        _ => None,
    };
    finetune_features(pretrained, &x, &train.labels, &train.label_vocabulary, config, val)
}

/// Pre-train on the training rows, then fine-tune on the same rows.
pub fn train_dbn(
    train: &LabeledDataset,
    config: &DbnConfig,
    validation: Option<&LabeledDataset>,
) -> Result<Dbn> {
    let pretrained = pretrain(&train.matrix, config)?;
    finetune(pretrained, train, config, validation)
}

impl Dbn {
    pub fn n_features(&self) -> usize {
        self.layers.first().map(|l| l.input_dim()).unwrap_or(0)
    }

    pub fn predict_proba_features(&self, x: &Matrix) -> Result<Matrix> {
        Ok(stack_proba(&self.layers, x)?)
    }

    pub fn predict_features(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba_features(x)?))
    }

    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Matrix> {
        self.predict_proba_features(&matrix.to_features(self.scaling))
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>> {
        self.predict_features(&matrix.to_features(self.scaling))
    }
}
