//! Samples × variants alternate-allele-count matrix.
//!
//! Records are flattened into per-(sample, variant) counts, grouped by
//! variant, filtered for support and minimum alternate-allele total, and laid
//! out with samples sorted lexicographically and variants sorted by
//! `(chrom, pos, id)`. The result does not depend on input order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::genio::{alt_allele_count, GenioError, PanelEntry, VariantRecord};
use crate::nn::Matrix;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error(transparent)]
    Genio(#[from] GenioError),
    #[error("sample {sample} has no count for retained variant {variant}")]
    InconsistentSampleSet { sample: String, variant: VariantKey },
    #[error("variant {variant} seen twice for sample {sample}")]
    DuplicateVariant { sample: String, variant: VariantKey },
    #[error("sample {0} is not in the panel")]
    UnknownSample(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("class {class} has {rows} rows but {needed} partitions need one each")]
    ClassTooSmall { class: String, rows: usize, needed: usize },
    #[error("record has {calls} calls but the header names {samples} samples")]
    SampleCountMismatch { calls: usize, samples: usize },
    #[error("count {0} does not fit the 8-bit matrix cell")]
    CountOverflow(u32),
    #[error("corrupt matrix cache: {0}")]
    CorruptCache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = FeaturizeError> = std::result::Result<T, E>;

/// Total order used for matrix columns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariantKey {
    pub chrom: String,
    pub pos: u64,
    pub id: String,
}

impl VariantKey {
    pub fn of(record: &VariantRecord) -> Self {
        VariantKey { chrom: record.chrom.clone(), pos: record.pos, id: record.id.clone() }
    }
}

impl fmt::Display for VariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.chrom, self.pos, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleVariant {
    pub sample_id: Arc<str>,
    pub key: Arc<VariantKey>,
    pub alt_count: u8,
}

/// What to do with a call that has a `.` allele.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Count missing alleles as reference.
    #[default]
    ImputeZero,
    /// Drop the whole variant if any call is incomplete.
    DropVariant,
}

impl MissingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            MissingPolicy::ImputeZero => "impute-zero",
            MissingPolicy::DropVariant => "drop-variant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "impute-zero" => Some(MissingPolicy::ImputeZero),
            "drop-variant" => Some(MissingPolicy::DropVariant),
            _ => None,
        }
    }
}

/// Conversion from raw counts to model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Raw counts.
    None,
    /// Counts / 2, landing diploid data in [0, 1].
    #[default]
    Half,
    /// Each row rescaled so that `|x|² / d = 1`.
    UnitNorm,
}

impl Scaling {
    pub fn name(self) -> &'static str {
        match self {
            Scaling::None => "none",
            Scaling::Half => "half",
            Scaling::UnitNorm => "unit-norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Scaling::None),
            "half" => Some(Scaling::Half),
            "unit-norm" => Some(Scaling::UnitNorm),
            _ => None,
        }
    }
}

/// Filter and scaling settings; hashed into every model artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeaturizeSettings {
    pub min_alt: u32,
    pub missing: MissingPolicy,
    pub scaling: Scaling,
}

impl Default for FeaturizeSettings {
    fn default() -> Self {
        FeaturizeSettings { min_alt: 12, missing: MissingPolicy::ImputeZero, scaling: Scaling::Half }
    }
}

impl FeaturizeSettings {
    pub fn canonical(&self) -> String {
        format!("min_alt={};missing={};scaling={}", self.min_alt, self.missing.name(), self.scaling.name())
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Flatten records into one [`SampleVariant`] per (record, sample) pair.
///
/// Under [`MissingPolicy::DropVariant`] a record with any incomplete call
/// produces nothing.
pub fn extract_sample_variants<'a, I>(
    records: I,
    samples: &'a [String],
    policy: MissingPolicy,
) -> impl Iterator<Item = Result<SampleVariant>> + 'a
where
    I: IntoIterator<Item = Result<VariantRecord, GenioError>> + 'a,
{
    let ids: Vec<Arc<str>> = samples.iter().map(|s| Arc::from(s.as_str())).collect();
    records.into_iter().flat_map(move |record| -> Vec<Result<SampleVariant>> {
        match record_counts(record, &ids, policy) {
            Ok(v) => v.into_iter().map(Ok).collect(),
            Err(e) => vec![Err(e)],
        }
    })
}

fn record_counts(
    record: Result<VariantRecord, GenioError>,
    ids: &[Arc<str>],
    policy: MissingPolicy,
) -> Result<Vec<SampleVariant>> {
    let record = record?;
    if record.calls.len() != ids.len() {
        return Err(FeaturizeError::SampleCountMismatch { calls: record.calls.len(), samples: ids.len() });
    }
    if policy == MissingPolicy::DropVariant && record.calls.iter().any(|c| c.has_missing()) {
        return Ok(Vec::new());
    }
    let key = Arc::new(VariantKey::of(&record));
    record
        .calls
        .iter()
        .zip(ids)
        .map(|(call, id)| {
            let count = match alt_allele_count(call) {
                Ok(c) => c,
                // impute-zero: a missing allele contributes nothing
                Err(GenioError::MissingAllele) => {
                    call.alleles.iter().filter(|a| matches!(a, Some(i) if *i > 0)).count() as u32
                }
                Err(e) => return Err(e.into()),
            };
            let alt_count = u8::try_from(count).map_err(|_| FeaturizeError::CountOverflow(count))?;
            Ok(SampleVariant { sample_id: id.clone(), key: key.clone(), alt_count })
        })
        .collect()
}

/// Per-variant count columns indexed by sample.
#[derive(Debug, Clone, Default)]
pub struct GroupedCounts {
    sample_index: HashMap<Arc<str>, usize>,
    samples: Vec<Arc<str>>,
    columns: BTreeMap<VariantKey, Vec<Option<u8>>>,
}

impl GroupedCounts {
    pub fn from_stream<I>(stream: I) -> Result<Self>
    where
        I: IntoIterator<Item = Result<SampleVariant>>,
    {
        let mut grouped = GroupedCounts::default();
        for item in stream {
            grouped.insert(item?)?;
        }
        Ok(grouped)
    }

    pub fn insert(&mut self, sv: SampleVariant) -> Result<()> {
        let idx = match self.sample_index.get(&sv.sample_id) {
            Some(&i) => i,
            None => {
                let i = self.samples.len();
                self.samples.push(sv.sample_id.clone());
                self.sample_index.insert(sv.sample_id.clone(), i);
                i
            }
        };
        let column = self.columns.entry((*sv.key).clone()).or_default();
        if column.len() <= idx {
            column.resize(idx + 1, None);
        }
        if column[idx].is_some() {
            return Err(FeaturizeError::DuplicateVariant {
                sample: sv.sample_id.to_string(),
                variant: (*sv.key).clone(),
            });
        }
        column[idx] = Some(sv.alt_count);
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_variants(&self) -> usize {
        self.columns.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &VariantKey> {
        self.columns.keys()
    }

    fn column_total(column: &[Option<u8>]) -> u64 {
        column.iter().flatten().map(|&c| c as u64).sum()
    }
}

/// Keys with at least one sample carrying an alternate allele.
pub fn support_filter(grouped: &GroupedCounts) -> BTreeSet<VariantKey> {
    grouped
        .columns
        .iter()
        .filter(|(_, col)| col.iter().flatten().any(|&c| c > 0))
        .map(|(k, _)| k.clone())
        .collect()
}

/// Keys whose alternate-allele total across samples is at least `min_alt`.
pub fn frequency_filter(grouped: &GroupedCounts, min_alt: u32) -> BTreeSet<VariantKey> {
    grouped
        .columns
        .iter()
        .filter(|(_, col)| GroupedCounts::column_total(col) >= min_alt as u64)
        .map(|(k, _)| k.clone())
        .collect()
}

/// Dense samples × variants matrix of alternate-allele counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub sample_ids: Vec<String>,
    pub variant_keys: Vec<VariantKey>,
    pub values: Array2<u8>,
}

impl FeatureMatrix {
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_variants(&self) -> usize {
        self.values.ncols()
    }

    /// Widen to `f64` with the requested scaling.
    pub fn to_features(&self, scaling: Scaling) -> Matrix {
        scale_counts(&self.values, scaling)
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            variant_keys: self.variant_keys.clone(),
            values: self.values.select(ndarray::Axis(0), rows),
        }
    }
}

pub fn scale_counts(values: &Array2<u8>, scaling: Scaling) -> Matrix {
    let mut x = values.mapv(f64::from);
    match scaling {
        Scaling::None => {}
        Scaling::Half => x.mapv_inplace(|v| v / 2.0),
        Scaling::UnitNorm => {
            let d = x.ncols().max(1) as f64;
            for mut row in x.rows_mut() {
                let norm2: f64 = row.iter().map(|v| v * v).sum();
                if norm2 > 0.0 {
                    let s = (d / norm2).sqrt();
                    row.mapv_inplace(|v| v * s);
                }
            }
        }
    }
    x
}

/// Lay out the retained columns. Every sample must have a count for every
/// retained key.
pub fn assemble_matrix(grouped: &GroupedCounts, retained: &BTreeSet<VariantKey>) -> Result<FeatureMatrix> {
    let mut order: Vec<usize> = (0..grouped.samples.len()).collect();
    order.sort_by(|&a, &b| grouped.samples[a].cmp(&grouped.samples[b]));
    let keys: Vec<VariantKey> =
        retained.iter().filter(|k| grouped.columns.contains_key(*k)).cloned().collect();
    let mut values = Array2::<u8>::zeros((order.len(), keys.len()));
    for (c, key) in keys.iter().enumerate() {
        let column = &grouped.columns[key];
        for (r, &s) in order.iter().enumerate() {
            match column.get(s).copied().flatten() {
                Some(v) => values[[r, c]] = v,
                None => {
                    return Err(FeaturizeError::InconsistentSampleSet {
                        sample: grouped.samples[s].to_string(),
                        variant: key.clone(),
                    })
                }
            }
        }
    }
    Ok(FeatureMatrix {
        sample_ids: order.iter().map(|&s| grouped.samples[s].to_string()).collect(),
        variant_keys: keys,
        values,
    })
}

/// Summary of one featurize pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturizeStats {
    pub variants_seen: usize,
    pub variants_supported: usize,
    pub variants_retained: usize,
}

/// Full record stream → matrix pass: extract, group, support filter,
/// frequency filter, assemble.
pub fn featurize<I>(
    records: I,
    samples: &[String],
    settings: &FeaturizeSettings,
) -> Result<(FeatureMatrix, FeaturizeStats)>
where
    I: IntoIterator<Item = Result<VariantRecord, GenioError>>,
{
    let grouped = GroupedCounts::from_stream(extract_sample_variants(records, samples, settings.missing))?;
    let supported = support_filter(&grouped);
    let frequent = frequency_filter(&grouped, settings.min_alt);
    let retained: BTreeSet<VariantKey> = supported.intersection(&frequent).cloned().collect();
    let stats = FeaturizeStats {
        variants_seen: grouped.n_variants(),
        variants_supported: supported.len(),
        variants_retained: retained.len(),
    };
    let mut matrix = assemble_matrix(&grouped, &retained)?;
    if grouped.n_samples() == 0 {
        // a header with samples but no surviving records still names rows
        let mut ids = samples.to_vec();
        ids.sort();
        matrix = FeatureMatrix {
            values: Array2::zeros((ids.len(), 0)),
            sample_ids: ids,
            variant_keys: Vec::new(),
        };
    }
    Ok((matrix, stats))
}

/// Which panel column supplies class labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelLevel {
    #[default]
    Population,
    SuperPopulation,
}

impl LabelLevel {
    pub fn name(self) -> &'static str {
        match self {
            LabelLevel::Population => "population",
            LabelLevel::SuperPopulation => "super_population",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "population" | "pop" => Some(LabelLevel::Population),
            "super_population" | "super-population" | "super_pop" => Some(LabelLevel::SuperPopulation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub matrix: FeatureMatrix,
    pub labels: Vec<usize>,
    pub label_vocabulary: Vec<String>,
}

impl LabeledDataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.label_vocabulary.len()
    }

    pub fn features(&self, scaling: Scaling) -> Matrix {
        self.matrix.to_features(scaling)
    }

    /// Rows in the given order; the vocabulary is kept whole.
    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            matrix: self.matrix.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            label_vocabulary: self.label_vocabulary.clone(),
        }
    }

    pub fn label_names(&self) -> Vec<&str> {
        self.labels.iter().map(|&l| self.label_vocabulary[l].as_str()).collect()
    }

    /// Row indices of each class.
    pub fn class_rows(&self) -> Vec<Vec<usize>> {
        class_rows(&self.labels, self.n_classes())
    }
}

pub(crate) fn class_rows(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        rows[l].push(i);
    }
    rows
}

/// Label every matrix row from the panel.
pub fn attach_labels(
    matrix: FeatureMatrix,
    panel: &[PanelEntry],
    level: LabelLevel,
) -> Result<LabeledDataset> {
    let lookup: HashMap<&str, &PanelEntry> = panel.iter().map(|e| (e.sample_id.as_str(), e)).collect();
    let mut names = Vec::with_capacity(matrix.n_samples());
    for id in &matrix.sample_ids {
        let entry = lookup.get(id.as_str()).ok_or_else(|| FeaturizeError::UnknownSample(id.clone()))?;
        names.push(match level {
            LabelLevel::Population => entry.population.clone(),
            LabelLevel::SuperPopulation => entry.super_population.clone(),
        });
    }
    let vocabulary: Vec<String> = names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels =
        names.iter().map(|n| vocabulary.binary_search(n).expect("label drawn from vocabulary")).collect();
    Ok(LabeledDataset { matrix, labels, label_vocabulary: vocabulary })
}

/// Train/test/validation fractions plus the shuffling seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratify: bool,
}

impl SplitSpec {
    pub fn new(train: f64, test: f64, validation: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction: train,
            test_fraction: test,
            validation_fraction: validation,
            seed,
            stratify: true,
        }
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_fraction, self.test_fraction, self.validation_fraction]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FeaturizeError::InvalidSplit(format!("negative fraction in {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FeaturizeError::InvalidSplit(format!("fractions sum to {sum}")));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::new(0.6, 0.2, 0.2, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub validation: LabeledDataset,
}

/// Partition row indices into (train, test, validation), each sorted.
///
/// Stratified: every class is shuffled and cut separately. Per-class counts
/// are the floors of the ideal counts; leftover rows go to the partitions
/// that are furthest behind their global ideal, so both per-class and total
/// sizes stay within one row of exact.
pub fn split_indices(labels: &[usize], vocabulary: &[String], spec: &SplitSpec) -> Result<[Vec<usize>; 3]> {
    spec.validate()?;
    let fractions = spec.fractions();
    let active: Vec<usize> = (0..3).filter(|&p| fractions[p] > 0.0).collect();
    let mut rng = crate::rng_from_seed(spec.seed);
    let groups: Vec<(String, Vec<usize>)> = if spec.stratify {
        let n_classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0).max(vocabulary.len());
        class_rows(labels, n_classes)
            .into_iter()
            .enumerate()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(c, rows)| (vocabulary.get(c).cloned().unwrap_or_else(|| c.to_string()), rows))
            .collect()
    } else {
        vec![("all".to_string(), (0..labels.len()).collect())]
    };

    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut cum_ideal = [0.0f64; 3];
    let mut cum_assigned = [0usize; 3];
    for (name, mut rows) in groups {
        if spec.stratify && rows.len() < active.len() {
            return Err(FeaturizeError::ClassTooSmall {
                class: name,
                rows: rows.len(),
                needed: active.len(),
            });
        }
        rows.shuffle(&mut rng);
        let n = rows.len();
        let mut counts = [0usize; 3];
        let mut ideal = [0.0f64; 3];
        for &p in &active {
            ideal[p] = n as f64 * fractions[p];
            counts[p] = ideal[p].floor() as usize;
        }
        let mut remainder = n - counts.iter().sum::<usize>();
        let mut deficit = [0.0f64; 3];
        for p in 0..3 {
            deficit[p] = cum_ideal[p] + ideal[p] - (cum_assigned[p] + counts[p]) as f64;
        }
        let mut order = active.clone();
        order.sort_by(|&a, &b| deficit[b].total_cmp(&deficit[a]).then(a.cmp(&b)));
        for &p in order.iter().cycle() {
            if remainder == 0 {
                break;
            }
            counts[p] += 1;
            remainder -= 1;
        }
        let mut start = 0;
        for p in 0..3 {
            parts[p].extend_from_slice(&rows[start..start + counts[p]]);
            start += counts[p];
            cum_ideal[p] += ideal[p];
            cum_assigned[p] += counts[p];
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    Ok(parts)
}

pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    let [train, test, validation] = split_indices(&dataset.labels, &dataset.label_vocabulary, spec)?;
    Ok(Split {
        train: dataset.subset(&train),
        test: dataset.subset(&test),
        validation: dataset.subset(&validation),
    })
}

const CACHE_MAGIC: &str = "popstrat-matrix";
const CACHE_VERSION: u32 = 1;

/// Write `matrix.manifest` and `matrix.u8` into `dir`.
pub fn write_matrix_cache(matrix: &FeatureMatrix, settings: &FeaturizeSettings, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = io::BufWriter::new(fs::File::create(dir.join("matrix.manifest"))?);
    writeln!(manifest, "{CACHE_MAGIC} {CACHE_VERSION}")?;
    writeln!(manifest, "rows={}", matrix.n_samples())?;
    writeln!(manifest, "cols={}", matrix.n_variants())?;
    writeln!(manifest, "scaling={}", settings.scaling.name())?;
    writeln!(manifest, "min_alt={}", settings.min_alt)?;
    writeln!(manifest, "missing={}", settings.missing.name())?;
    writeln!(manifest, "settings_hash={}", settings.hash_hex())?;
    for s in &matrix.sample_ids {
        writeln!(manifest, "sample\t{s}")?;
    }
    for k in &matrix.variant_keys {
        writeln!(manifest, "variant\t{}\t{}\t{}", k.chrom, k.pos, k.id)?;
    }
    manifest.flush()?;
    let bytes: Vec<u8> = matrix.values.iter().copied().collect();
    fs::write(dir.join("matrix.u8"), bytes)?;
    Ok(())
}

/// Read a cache written by [`write_matrix_cache`].
pub fn read_matrix_cache(dir: &Path) -> Result<(FeatureMatrix, FeaturizeSettings)> {
    let corrupt = |m: &str| FeaturizeError::CorruptCache(m.to_string());
    let reader = BufReader::new(fs::File::open(dir.join("matrix.manifest"))?);
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| corrupt("empty manifest"))??;
    if first != format!("{CACHE_MAGIC} {CACHE_VERSION}") {
        return Err(corrupt(&format!("unsupported header {first:?}")));
    }
    let (mut rows, mut cols) = (None, None);
    let mut settings = FeaturizeSettings::default();
    let mut samples = Vec::new();
    let mut keys = Vec::new();
    for line in lines {
        let line = line?;
        if let Some(rest) = line.strip_prefix("sample\t") {
            samples.push(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("variant\t") {
            let f: Vec<&str> = rest.split('\t').collect();
            if f.len() != 3 {
                return Err(corrupt("bad variant line"));
            }
            let pos = f[1].parse().map_err(|_| corrupt("bad variant position"))?;
            keys.push(VariantKey { chrom: f[0].to_string(), pos, id: f[2].to_string() });
        } else if let Some((k, v)) = line.split_once('=') {
            match k {
                "rows" => rows = v.parse().ok(),
                "cols" => cols = v.parse().ok(),
                "scaling" => settings.scaling = Scaling::parse(v).ok_or_else(|| corrupt("bad scaling"))?,
                "min_alt" => settings.min_alt = v.parse().map_err(|_| corrupt("bad min_alt"))?,
                "missing" => {
                    settings.missing = MissingPolicy::parse(v).ok_or_else(|| corrupt("bad missing policy"))?
                }
                _ => {}
            }
        }
    }
    let rows: usize = rows.ok_or_else(|| corrupt("missing rows"))?;
    let cols: usize = cols.ok_or_else(|| corrupt("missing cols"))?;
    if samples.len() != rows || keys.len() != cols {
        return Err(corrupt("ordering lists disagree with dimensions"));
    }
    let bytes = fs::read(dir.join("matrix.u8"))?;
    if bytes.len() != rows * cols {
        return Err(corrupt(&format!("expected {} bytes, found {}", rows * cols, bytes.len())));
    }
    let values = Array2::from_shape_vec((rows, cols), bytes).map_err(|e| corrupt(&e.to_string()))?;
    Ok((FeatureMatrix { sample_ids: samples, variant_keys: keys, values }, settings))
}

/// `sample_id,label,<chrom:pos:id>...` with raw counts.
pub fn write_labeled_csv<W: Write>(dataset: &LabeledDataset, mut out: W) -> io::Result<()> {
    write!(out, "sample_id,label")?;
    for k in &dataset.matrix.variant_keys {
        write!(out, ",{k}")?;
    }
    writeln!(out)?;
    for (r, id) in dataset.matrix.sample_ids.iter().enumerate() {
        write!(out, "{id},{}", dataset.label_vocabulary[dataset.labels[r]])?;
        for v in dataset.matrix.values.row(r) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
