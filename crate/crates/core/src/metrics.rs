//! Classification and clustering evaluation.
//!
//! Classification: confusion matrix, support-weighted precision / recall /
//! F-beta, RMSE on class indices. Clustering: Rand index, Hubert–Arabie
//! adjusted Rand index, NMI with arithmetic-mean normalization, clustering
//! accuracy by optimal one-to-one matching, and the train/validation loss
//! ratio G.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::report::Report;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("label {0:?} is not in the vocabulary")]
    UnknownLabel(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("validation loss is zero")]
    ZeroValidationLoss,
    #[error("counts matrix is not square over the vocabulary")]
    BadCounts,
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

/// `counts[i][j]` = true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(MetricsError::BadCounts);
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// `(support - C_ii) / support`; 0 for a class with no members.
    pub fn row_error(&self, class: usize) -> f64 {
        let support = self.support(class);
        if support == 0 {
            0.0
        } else {
            (support - self.counts[class][class]) as f64 / support as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let diag: u64 = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }

    /// Rows `label,<counts...>,error,errors/support`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("actual,{},error,rate\n", self.labels.join(","));
        for (i, label) in self.labels.iter().enumerate() {
            let row: Vec<String> = self.counts[i].iter().map(|c| c.to_string()).collect();
            let support = self.support(i);
            s.push_str(&format!(
                "{label},{},{:.4},{}/{}\n",
                row.join(","),
                self.row_error(i),
                support - self.counts[i][i],
                support
            ));
        }
        s
    }
}

/// Count `(true, predicted)` pairs over a label vocabulary.
pub fn confusion_matrix<S: AsRef<str>>(
    y_true: &[S],
    y_pred: &[S],
    vocabulary: &[String],
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let index: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let lookup =
        |s: &S| index.get(s.as_ref()).copied().ok_or_else(|| MetricsError::UnknownLabel(s.as_ref().into()));
    let mut counts = vec![vec![0u64; vocabulary.len()]; vocabulary.len()];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[lookup(t)?][lookup(p)?] += 1;
    }
    Ok(ConfusionMatrix { labels: vocabulary.to_vec(), counts })
}

/// As [`confusion_matrix`] for labels already encoded as vocabulary indices.
pub fn confusion_matrix_indices(
    y_true: &[usize],
    y_pred: &[usize],
    vocabulary: &[String],
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let m = vocabulary.len();
    let mut counts = vec![vec![0u64; m]; m];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= m {
            return Err(MetricsError::UnknownLabel(t.to_string()));
        }
        if p >= m {
            return Err(MetricsError::UnknownLabel(p.to_string()));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { labels: vocabulary.to_vec(), counts })
}

/// Support-weighted precision, recall and F-beta.
///
/// Per class: PPV = 0 when never predicted, TPR = 0 when no members,
/// F = 0 when PPV + TPR = 0.
pub fn weighted_prf(cm: &ConfusionMatrix, beta: f64) -> Result<(f64, f64, f64)> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let b2 = beta * beta;
    let (mut p_w, mut r_w, mut f_w) = (0.0, 0.0, 0.0);
    for c in 0..cm.labels.len() {
        let support = cm.support(c);
        if support == 0 {
            continue;
        }
        let tp = cm.counts[c][c] as f64;
        let predicted = cm.predicted(c);
        let ppv = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let tpr = tp / support as f64;
        let f = if ppv + tpr == 0.0 { 0.0 } else { (1.0 + b2) * ppv * tpr / (b2 * ppv + tpr) };
        let w = support as f64;
        p_w += w * ppv;
        r_w += w * tpr;
        f_w += w * f;
    }
    let n = n as f64;
    Ok((p_w / n, r_w / n, f_w / n))
}

/// Root mean squared difference of class indices.
pub fn rmse(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(MetricsError::TooFewPoints(0));
    }
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok((sum / y_true.len() as f64).sqrt())
}

/// Map arbitrary labels to dense indices in order of first appearance.
pub fn encode_labels<T: Hash + Eq + Clone>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut index = HashMap::new();
    let codes = labels
        .iter()
        .map(|l| {
            let next = index.len();
            *index.entry(l.clone()).or_insert(next)
        })
        .collect();
    (codes, index.len())
}

/// Joint count table of two labelings.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    pub table: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

pub fn contingency<A, B>(a: &[A], b: &[B]) -> Result<Contingency>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let (ca, ka) = encode_labels(a);
    let (cb, kb) = encode_labels(b);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&i, &j) in ca.iter().zip(&cb) {
        table[i][j] += 1;
    }
    let row_sums = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency { table, row_sums, col_sums, n: a.len() as u64 })
}

fn pairs(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Pair-count summary: `(tp, fp, fn, tn)` where "positive" means the pair
/// shares a cluster in `b` and "true" means it shares a class in `a`.
pub fn pair_counts<A, B>(a: &[A], b: &[B]) -> Result<(f64, f64, f64, f64)>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    let c = contingency(a, b)?;
    let same_both: f64 = c.table.iter().flatten().map(|&x| pairs(x)).sum();
    let same_a: f64 = c.row_sums.iter().map(|&x| pairs(x)).sum();
    let same_b: f64 = c.col_sums.iter().map(|&x| pairs(x)).sum();
    let total = pairs(c.n);
    let tp = same_both;
    let fp = same_b - same_both;
    let fneg = same_a - same_both;
    let tn = total - tp - fp - fneg;
    Ok((tp, fp, fneg, tn))
}

/// `(TP + TN) / (TP + FP + FN + TN)` over all unordered pairs.
pub fn rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if a.len() < 2 {
        return Err(MetricsError::TooFewPoints(a.len()));
    }
    let (tp, fp, fneg, tn) = pair_counts(a, b)?;
    Ok((tp + tn) / (tp + fp + fneg + tn))
}

/// Hubert–Arabie adjusted Rand index.
///
/// When the expected index equals its maximum (both labelings trivial in
/// the same way) the ARI is 1 if the partitions agree and 0 otherwise.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if a.len() < 2 {
        return Err(MetricsError::TooFewPoints(a.len()));
    }
    let c = contingency(a, b)?;
    let index: f64 = c.table.iter().flatten().map(|&x| pairs(x)).sum();
    let sum_a: f64 = c.row_sums.iter().map(|&x| pairs(x)).sum();
    let sum_b: f64 = c.col_sums.iter().map(|&x| pairs(x)).sum();
    let expected = sum_a * sum_b / pairs(c.n);
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom.abs() < 1e-12 {
        let identical = index == sum_a && index == sum_b;
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(a; b) / ((H(a) + H(b)) / 2)`. Two single-cluster labelings are the
/// same partition and score 1.
pub fn nmi<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if a.is_empty() {
        return Err(MetricsError::TooFewPoints(0));
    }
    let c = contingency(a, b)?;
    let n = c.n as f64;
    let ha = entropy(&c.row_sums, n);
    let hb = entropy(&c.col_sums, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in c.table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * (n * nij / (c.row_sums[i] as f64 * c.col_sums[j] as f64)).ln();
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method
/// with potentials, O(k³)). Returns `assignment[row] = column`.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    // minimize negated weights; 1-based arrays with a virtual column 0
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Best one-to-one cluster→class matching accuracy.
pub fn clustering_accuracy<A, B>(truth: &[A], assignment: &[B]) -> Result<f64>
where
    A: Hash + Eq + Clone,
    B: Hash + Eq + Clone,
{
    if truth.is_empty() {
        return Err(MetricsError::TooFewPoints(0));
    }
    let c = contingency(assignment, truth)?;
    let k = c.table.len().max(c.col_sums.len());
    let mut w = vec![vec![0.0; k]; k];
    for (i, row) in c.table.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            w[i][j] = x as f64;
        }
    }
    let m = max_weight_assignment(&w);
    let matched: f64 = m.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
    Ok(matched / truth.len() as f64)
}

/// `G = L_train / L_validation`.
pub fn generalizability(loss_train: f64, loss_validation: f64) -> Result<f64> {
    if loss_validation == 0.0 {
        return Err(MetricsError::ZeroValidationLoss);
    }
    Ok(loss_train / loss_validation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationScore {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub rmse: f64,
}

impl ClassificationScore {
    pub fn compute(y_true: &[usize], y_pred: &[usize], vocabulary: &[String]) -> Result<Self> {
        let cm = confusion_matrix_indices(y_true, y_pred, vocabulary)?;
        let (p, r, f) = weighted_prf(&cm, 1.0)?;
        Ok(ClassificationScore {
            accuracy: cm.accuracy(),
            weighted_precision: p,
            weighted_recall: r,
            weighted_f1: f,
            rmse: rmse(y_true, y_pred)?,
        })
    }

    pub fn mean(scores: &[ClassificationScore]) -> ClassificationScore {
        let n = scores.len().max(1) as f64;
        let avg = |f: fn(&ClassificationScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
        ClassificationScore {
            accuracy: avg(|s| s.accuracy),
            weighted_precision: avg(|s| s.weighted_precision),
            weighted_recall: avg(|s| s.weighted_recall),
            weighted_f1: avg(|s| s.weighted_f1),
            rmse: avg(|s| s.rmse),
        }
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new();
        r.float("accuracy", self.accuracy)
            .float("weighted_precision", self.weighted_precision)
            .float("weighted_recall", self.weighted_recall)
            .float("weighted_f1", self.weighted_f1)
            .float("rmse", self.rmse);
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringScore {
    pub ri: f64,
    pub ari: f64,
    pub nmi: f64,
    pub acc: f64,
    pub g: Option<f64>,
}

impl ClusteringScore {
    pub fn compute<A, B>(truth: &[A], clusters: &[B]) -> Result<Self>
    where
        A: Hash + Eq + Clone,
        B: Hash + Eq + Clone,
    {
        Ok(ClusteringScore {
            ri: rand_index(truth, clusters)?,
            ari: adjusted_rand_index(truth, clusters)?,
            nmi: nmi(truth, clusters)?,
            acc: clustering_accuracy(truth, clusters)?,
            g: None,
        })
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new();
        r.float("ri", self.ri).float("ari", self.ari).float("nmi", self.nmi).float("acc", self.acc);
        if let Some(g) = self.g {
            r.float("g", g);
        }
        r
    }
}
