//! Feed-forward classifier: ReLU hidden layers with dropout, softmax output,
//! stratified k-fold cross-validation and grid search.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::featurize::{class_rows, FeatureMatrix, LabeledDataset, Scaling};
use crate::metrics::{ClassificationScore, MetricsError};
use crate::nn::{
    argmax_rows, forward, init_stack, train_classifier, Activation, DenseLayer, DropoutSpec, EpochRecord,
    Matrix, NnError, OptimizerConfig, SupervisedParams,
};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data must contain at least two classes")]
    SingleClass,
    #[error("training data is empty")]
    EmptyDataset,
    #[error("class {class} has {rows} rows, {needed} folds need at least {needed}")]
    ClassTooSmall { class: String, rows: usize, needed: usize },
    #[error("grid search needs at least one configuration")]
    EmptyGrid,
    #[error("model expects {expected} features, input has {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

pub type Result<T, E = ClassifierError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub hidden_activation: Activation,
    pub epochs: usize,
    pub dropout: DropoutSpec,
    pub optimizer: OptimizerConfig,
    pub scaling: Scaling,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: vec![256; 4],
            hidden_activation: Activation::Relu,
            epochs: 50,
            dropout: DropoutSpec::new(0.5, 0),
            optimizer: OptimizerConfig::adadelta(0.99, 1e-8, 32),
            scaling: Scaling::Half,
            seed: 0,
        }
    }
}

impl MlpConfig {
    /// Set the base seed and the dropout stream derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.dropout.seed = crate::derive_seed(seed, DROPOUT_STREAM);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.hidden_layers.contains(&0) {
            return Err(ClassifierError::InvalidConfig("hidden widths must be at least 1".into()));
        }
        if self.hidden_activation == Activation::Softmax {
            return Err(ClassifierError::InvalidConfig("softmax is only allowed on the output".into()));
        }
        self.dropout.validate()?;
        self.optimizer.validate()?;
        Ok(())
    }

    pub(crate) fn supervised_params(&self, epochs: usize) -> SupervisedParams {
        SupervisedParams {
            epochs,
            optimizer: self.optimizer,
            dropout: self.dropout,
            seed: crate::derive_seed(self.seed, SHUFFLE_STREAM),
        }
    }
}

pub(crate) const SHUFFLE_STREAM: u64 = 0x5348_5546;
pub(crate) const DROPOUT_STREAM: u64 = 0x4452_4f50;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub layers: Vec<DenseLayer>,
    pub label_vocabulary: Vec<String>,
    pub scaling: Scaling,
    pub history: Vec<EpochRecord>,
}

pub(crate) fn check_training_labels(labels: &[usize], n_features: usize) -> Result<()> {
    if labels.is_empty() || n_features == 0 {
        return Err(ClassifierError::EmptyDataset);
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Train on a scaled feature matrix directly.
pub fn train_mlp_features(
    x: &Matrix,
    labels: &[usize],
    label_vocabulary: &[String],
    config: &MlpConfig,
    validation: Option<(&Matrix, &[usize])>,
) -> Result<MlpClassifier> {
    config.validate()?;
    check_training_labels(labels, x.ncols())?;
    if label_vocabulary.len() < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let n_classes = label_vocabulary.len();
    let mut layers = init_stack(
        x.ncols(),
        &config.hidden_layers,
        config.hidden_activation,
        n_classes,
        Activation::Softmax,
        config.seed,
    );
    let history = train_classifier(
        &mut layers,
        x,
        labels,
        n_classes,
        &config.supervised_params(config.epochs),
        validation,
    )?;
    Ok(MlpClassifier {
        layers,
        label_vocabulary: label_vocabulary.to_vec(),
        scaling: config.scaling,
        history,
    })
}

pub fn train_mlp(
    train: &LabeledDataset,
    config: &MlpConfig,
    validation: Option<&LabeledDataset>,
) -> Result<MlpClassifier> {
    let x = train.features(config.scaling);
    let vx = validation.map(|v| v.features(config.scaling));
    let val = match (validation, vx.as_ref()) {
        (Some(v), Some(m)) => Some((m, v.labels.as_slice())),
        _ => None,
    };
    train_mlp_features(&x, &train.labels, &train.label_vocabulary, config, val)
}

/// Eval-mode probabilities for a layer stack, with the width check every
/// classifier shares.
pub(crate) fn stack_proba(layers: &[DenseLayer], x: &Matrix) -> Result<Matrix> {
    let expected = layers.first().map(|l| l.input_dim()).unwrap_or(0);
    if x.ncols() != expected {
        return Err(ClassifierError::ShapeMismatch { expected, found: x.ncols() });
    }
    if x.nrows() == 0 {
        let out = layers.last().map(|l| l.output_dim()).unwrap_or(0);
        return Ok(Matrix::zeros((0, out)));
    }
    Ok(forward(layers, x, None, false)?.0)
}

impl MlpClassifier {
    pub fn n_features(&self) -> usize {
        self.layers.first().map(|l| l.input_dim()).unwrap_or(0)
    }

    pub fn predict_proba_features(&self, x: &Matrix) -> Result<Matrix> {
        stack_proba(&self.layers, x)
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

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes differ by at most one.
pub fn stratified_folds(
    labels: &[usize],
    label_vocabulary: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(ClassifierError::InvalidConfig(format!("{k} folds; at least 2 required")));
    }
    let n_classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0).max(label_vocabulary.len());
    let mut rng = crate::rng_from_seed(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (class, mut rows) in class_rows(labels, n_classes).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            return Err(ClassifierError::ClassTooSmall {
                class: label_vocabulary.get(class).cloned().unwrap_or_else(|| class.to_string()),
                rows: rows.len(),
                needed: k,
            });
        }
        rows.shuffle(&mut rng);
        for r in rows {
            folds[next].push(r);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<ClassificationScore>,
    pub mean: ClassificationScore,
}

pub fn cross_validate(dataset: &LabeledDataset, config: &MlpConfig, k: usize) -> Result<CrossValidation> {
    config.validate()?;
    let folds = stratified_folds(
        &dataset.labels,
        &dataset.label_vocabulary,
        k,
        crate::derive_seed(config.seed, FOLD_STREAM),
    )?;
    let mut scores = Vec::with_capacity(k);
    for (f, test_rows) in folds.iter().enumerate() {
        let train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let train = dataset.subset(&train_rows);
        let test = dataset.subset(test_rows);
        let fold_config = config.clone().with_seed(crate::derive_seed(config.seed, f as u64));
        let model = train_mlp(&train, &fold_config, None)?;
        let pred = model.predict(&test.matrix)?;
        scores.push(ClassificationScore::compute(&test.labels, &pred, &dataset.label_vocabulary)?);
    }
    let mean = ClassificationScore::mean(&scores);
    Ok(CrossValidation { folds: scores, mean })
}

const FOLD_STREAM: u64 = 0x464f_4c44;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best_index: usize,
    pub best: MlpConfig,
    /// Cross-validation result per grid entry, in grid order.
    pub table: Vec<CrossValidation>,
}

/// Pick the configuration with the highest mean cross-validated accuracy;
/// ties go to the earliest entry.
pub fn grid_search(dataset: &LabeledDataset, grid: &[MlpConfig], k: usize) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    let table = grid.iter().map(|c| cross_validate(dataset, c, k)).collect::<Result<Vec<_>>>()?;
    let mut best_index = 0;
    for (i, cv) in table.iter().enumerate() {
        if cv.mean.accuracy > table[best_index].mean.accuracy {
            best_index = i;
        }
    }
    Ok(GridSearch { best_index, best: grid[best_index].clone(), table })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::featurize::VariantKey;
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    /// Two Gaussian blobs ten standard deviations apart.
    pub(crate) fn blobs(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = crate::rng_from_seed(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut x = Matrix::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { [0.25, 0.25] } else { [0.75, 0.75] };
            x[[i, 0]] = centre[0] + noise.sample(&mut rng);
            x[[i, 1]] = centre[1] + noise.sample(&mut rng);
            y.push(c);
        }
        (x, y)
    }

    fn vocab(k: usize) -> Vec<String> {
        (0..k).map(|c| format!("C{c}")).collect()
    }

    fn small_config() -> MlpConfig {
        MlpConfig {
            hidden_layers: vec![16, 16],
            epochs: 50,
            dropout: DropoutSpec::new(0.0, 0),
            optimizer: OptimizerConfig::sgd(0.1, 0.9, 10),
            scaling: Scaling::None,
            ..MlpConfig::default()
        }
        .with_seed(5)
    }

    /// Blob data as a labeled dataset of counts 0/1/2.
    pub(crate) fn count_dataset(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = crate::rng_from_seed(seed);
        let n_var = 6;
        let mut values = Array2::<u8>::zeros((n, n_var));
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            for v in 0..n_var {
                let hot = (v < n_var / 2) == (c == 0);
                values[[i, v]] = if hot { 2 - (rng.random::<f64>() < 0.05) as u8 } else { 0 };
            }
            labels.push(c);
        }
        LabeledDataset {
            matrix: FeatureMatrix {
                sample_ids: (0..n).map(|i| format!("S{i:03}")).collect(),
                variant_keys: (0..n_var)
                    .map(|v| VariantKey { chrom: "1".into(), pos: v as u64 + 1, id: format!("rs{v}") })
                    .collect(),
                values,
            },
            labels,
            label_vocabulary: vocab(2),
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(100, 1);
        let model = train_mlp_features(&x, &y, &vocab(2), &small_config(), None).unwrap();
        assert!(model.history.last().unwrap().accuracy >= 0.99);
        assert_eq!(model.predict_features(&x).unwrap(), y);
        assert_eq!(model.history.len(), 50);
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.epochs = 0;
        assert!(matches!(c.validate(), Err(ClassifierError::InvalidConfig(_))));
        let mut c = small_config();
        c.hidden_layers = vec![0];
        assert!(c.validate().is_err());
        let (x, _) = blobs(10, 1);
        assert!(matches!(
            train_mlp_features(&x, &[0; 10], &vocab(2), &small_config(), None),
            Err(ClassifierError::SingleClass)
        ));
        assert!(matches!(
            train_mlp_features(&Matrix::zeros((0, 2)), &[], &vocab(2), &small_config(), None),
            Err(ClassifierError::EmptyDataset)
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = blobs(40, 2);
        let mut c = small_config();
        c.dropout.drop_probability = 0.3;
        let a = train_mlp_features(&x, &y, &vocab(2), &c, None).unwrap();
        let b = train_mlp_features(&x, &y, &vocab(2), &c, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn proba_contracts() {
        let model = MlpClassifier {
            layers: vec![DenseLayer::new(
                Matrix::zeros((4, 3)),
                crate::nn::Vector::zeros(3),
                Activation::Softmax,
            )
            .unwrap()],
            label_vocabulary: vocab(3),
            scaling: Scaling::None,
            history: vec![],
        };
        let x = Matrix::from_elem((2, 4), 0.7);
        let p = model.predict_proba_features(&x).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(model.predict_features(&x).unwrap(), vec![0, 0]);
        assert!(model.predict_features(&Matrix::zeros((0, 4))).unwrap().is_empty());
        assert!(matches!(
            model.predict_features(&Matrix::zeros((1, 5))),
            Err(ClassifierError::ShapeMismatch { expected: 4, found: 5 })
        ));

        let (x, y) = blobs(60, 3);
        let trained = train_mlp_features(&x, &y, &vocab(2), &small_config(), None).unwrap();
        let p = trained.predict_proba_features(&x).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
        }
        assert_eq!(argmax_rows(&p), trained.predict_features(&x).unwrap());
        // argmax survives a strictly monotone transform of the rows
        assert_eq!(argmax_rows(&p.mapv(|v| v.ln() * 3.0 + 1.0)), argmax_rows(&p));
    }

    #[test]
    fn loss_mostly_decreases_with_small_steps() {
        let (x, y) = blobs(40, 4);
        let mut c = small_config();
        c.optimizer = OptimizerConfig::sgd(0.01, 0.0, 40);
        c.epochs = 40;
        let model = train_mlp_features(&x, &y, &vocab(2), &c, None).unwrap();
        let losses: Vec<f64> = model.history.iter().map(|r| r.loss).collect();
        let down = losses.windows(2).filter(|w| w[1] <= w[0]).count();
        assert!(down as f64 >= 0.9 * (losses.len() - 1) as f64);
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let folds = stratified_folds(&labels, &vocab(3), 5, 1).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for fold in &folds {
            for c in 0..3 {
                let n = fold.iter().filter(|&&r| labels[r] == c).count();
                assert!((1..=2).contains(&n));
            }
        }
        assert!(matches!(stratified_folds(&labels, &vocab(3), 1, 1), Err(ClassifierError::InvalidConfig(_))));
        assert!(matches!(
            stratified_folds(&[0, 0, 1], &vocab(2), 2, 1),
            Err(ClassifierError::ClassTooSmall { .. })
        ));
    }

    #[test]
    fn cross_validation_on_blobs() {
        let ds = count_dataset(60, 7);
        let cv = cross_validate(&ds, &small_config(), 5).unwrap();
        assert_eq!(cv.folds.len(), 5);
        assert!(cv.mean.accuracy >= 0.95);
    }

    #[test]
    fn grid_search_rules() {
        let ds = count_dataset(30, 8);
        assert!(matches!(grid_search(&ds, &[], 3), Err(ClassifierError::EmptyGrid)));
        let mut c = small_config();
        c.epochs = 5;
        let single = grid_search(&ds, std::slice::from_ref(&c), 3).unwrap();
        assert_eq!(single.best, c);

        let mut noisy = c.clone();
        noisy.dropout.drop_probability = 0.9;
        let dup = grid_search(&ds, &[c.clone(), c.clone()], 3).unwrap();
        assert_eq!(dup.best_index, 0);
        let both = grid_search(&ds, &[c.clone(), noisy], 3).unwrap();
        assert_eq!(both.table.len(), 2);
        assert!(both.table.iter().all(|cv| (0.0..=1.0).contains(&cv.mean.accuracy)));
    }
}
