//! One function per subcommand. Each writes its artifacts into `out` and
//! returns the score report plus the featurize hash it ran under.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use popstrat_core::dbn::{self, Dbn, DbnConfig};
use popstrat_core::dec::{self, DecConfig, SaeConfig};
use popstrat_core::featurize::{
    self, attach_labels, read_matrix_cache, write_labeled_csv, write_matrix_cache, FeaturizeSettings,
    FeaturizeStats, LabelLevel, MissingPolicy,
};
use popstrat_core::genio::{open_text, parse_panel, parse_vcf};
use popstrat_core::kmeans::{self, KMeansConfig};
use popstrat_core::metrics::{confusion_matrix, confusion_matrix_indices, generalizability};
use popstrat_core::mlp::{self, MlpClassifier, MlpConfig};
use popstrat_core::nn::{DropoutSpec, EpochRecord};
use popstrat_core::report::{csv_escape, format_float, CsvTable, Report};
use popstrat_core::store::{save_model, Persist};
use popstrat_core::synthgen::{write_cohort, CohortSpec};
use popstrat_core::{
    ClassificationScore, ClusteringScore, FeatureMatrix, LabeledDataset, PanelEntry, Scaling, SplitSpec,
};

use crate::args::{parse_widths, Input, SplitArgs, Task};
use crate::Failure;

pub const COHORT_VCF: &str = "cohort.vcf";
pub const PANEL_FILE: &str = "panel.txt";

pub struct Outcome {
    pub report: Report,
    pub featurize_hash: Option<String>,
    pub inputs: Vec<PathBuf>,
}

pub fn run(task: &Task, seed: u64, out: &Path) -> Result<Outcome, Failure> {
    match task {
        Task::Synth { populations, samples, variants, divergence } => {
            let spec = CohortSpec {
                n_populations: *populations,
                samples_per_population: *samples,
                n_variants: *variants,
                divergence: *divergence,
                seed,
            };
            synth(&spec, out)
        }
        Task::Featurize { input } => featurize_task(input, out),
        Task::ClusterKmeans { input, k, restarts, max_iterations } => {
            let config = KMeansConfig { k: *k, max_iterations: *max_iterations, restarts: *restarts, seed };
            cluster_kmeans(input, &config, out)
        }
        Task::ClusterDec {
            input,
            k,
            hidden,
            corruption,
            sae_iterations,
            finetune_iterations,
            max_iterations,
            alpha,
            tol,
            gamma,
            kmeans_restarts,
        } => {
            let sae = SaeConfig {
                hidden: parse_widths(hidden)?,
                corruption: *corruption,
                iterations_per_layer: *sae_iterations,
                finetune_iterations: *finetune_iterations,
                seed,
                ..SaeConfig::default()
            };
            let config = DecConfig {
                alpha: *alpha,
                tol: *tol,
                gamma: *gamma,
                max_iterations: *max_iterations,
                kmeans_restarts: *kmeans_restarts,
                ..DecConfig::new(*k, seed)
            };
            cluster_dec(input, &sae, &config, out)
        }
        Task::TrainMlp { input, split, hidden, epochs, dropout } => {
            let data = load(input)?;
            let config = MlpConfig {
                hidden_layers: parse_widths(hidden)?,
                epochs: *epochs,
                dropout: DropoutSpec::new(*dropout, 0),
                scaling: data.settings.scaling,
                ..MlpConfig::default()
            }
            .with_seed(seed);
            train_classifier(data, split, seed, out, |train, val| Ok(mlp::train_mlp(train, &config, val)?))
        }
        Task::TrainDbn {
            input,
            split,
            hidden,
            pretrain_epochs,
            cd_learning_rate,
            no_pretrain,
            epochs,
            dropout,
        } => {
            let data = load(input)?;
            let mut config = DbnConfig {
                hidden_layers: parse_widths(hidden)?,
                pretrain_enabled: !no_pretrain,
                scaling: data.settings.scaling,
                ..DbnConfig::default()
            };
            config.pretrain.epochs = *pretrain_epochs;
            config.pretrain.learning_rate = *cd_learning_rate;
            config.finetune.epochs = *epochs;
            config.finetune.dropout = DropoutSpec::new(*dropout, 0);
            let config = config.with_seed(seed);
            train_classifier(data, split, seed, out, |train, val| Ok(dbn::train_dbn(train, &config, val)?))
        }
        Task::Evaluate { truth, pred } => evaluate(truth, pred, out),
        Task::Elbow { input, k_min, k_max, restarts, max_iterations } => {
            elbow(input, *k_min, *k_max, *restarts, *max_iterations, seed, out)
        }
    }
}

fn synth(spec: &CohortSpec, out: &Path) -> Result<Outcome, Failure> {
    spec.validate()?;
    let vcf = BufWriter::new(File::create(out.join(COHORT_VCF))?);
    let panel = BufWriter::new(File::create(out.join(PANEL_FILE))?);
    let truth = write_cohort(spec, vcf, panel)?;

    let mut header = vec!["variant".to_string(), "base".to_string()];
    header.extend((0..spec.n_populations).map(|p| format!("P{p}")));
    let mut table = CsvTable::new(&header);
    for (v, (base, pops)) in truth.base_frequencies.iter().zip(&truth.population_frequencies).enumerate() {
        let mut row = vec![v.to_string(), format_float(*base)];
        row.extend(pops.iter().map(|&f| format_float(f)));
        table.push(row);
    }
    table.write(&out.join("frequencies.csv"))?;

    let mut report = Report::new();
    report
        .text("populations", spec.n_populations)
        .text("samples_per_population", spec.samples_per_population)
        .text("variants", spec.n_variants)
        .float("divergence", spec.divergence)
        .text("seed", spec.seed);
    Ok(Outcome { report, featurize_hash: None, inputs: Vec::new() })
}

/// A matrix plus whatever labels the panel supplies.
struct Data {
    matrix: FeatureMatrix,
    dataset: Option<LabeledDataset>,
    settings: FeaturizeSettings,
    stats: Option<FeaturizeStats>,
    inputs: Vec<PathBuf>,
    panel: Option<PathBuf>,
}

impl Data {
    fn hash(&self) -> Option<String> {
        Some(self.settings.hash_hex())
    }

    fn labeled(&self, task: &str) -> Result<&LabeledDataset, Failure> {
        self.dataset.as_ref().ok_or_else(|| Failure::config(format!("{task} needs a panel (--panel)")))
    }
}

fn settings(input: &Input) -> Result<FeaturizeSettings, Failure> {
    Ok(FeaturizeSettings {
        min_alt: input.min_alt,
        missing: MissingPolicy::parse(&input.missing)
            .ok_or_else(|| Failure::config(format!("unknown missing policy {:?}", input.missing)))?,
        scaling: Scaling::parse(&input.scaling)
            .ok_or_else(|| Failure::config(format!("unknown scaling {:?}", input.scaling)))?,
    })
}

fn read_panel(path: &Path) -> Result<Vec<PanelEntry>, Failure> {
    Ok(parse_panel(open_text(path)?)?)
}

/// Resolve `--input DIR` (a featurize cache or a synth cohort) or explicit
/// `--vcf`/`--panel` paths.
fn load(input: &Input) -> Result<Data, Failure> {
    let level = LabelLevel::parse(&input.label_level)
        .ok_or_else(|| Failure::config(format!("unknown label level {:?}", input.label_level)))?;
    let mut vcfs = input.vcf.clone();
    let mut panel = input.panel.clone();
    let mut cache = None;
    if let Some(dir) = &input.input {
        if !dir.is_dir() {
            return Err(Failure::config(format!("input directory {} does not exist", dir.display())));
        }
        if panel.is_none() && dir.join(PANEL_FILE).is_file() {
            panel = Some(dir.join(PANEL_FILE));
        }
        if dir.join("matrix.manifest").is_file() {
            cache = Some(dir.clone());
        } else if vcfs.is_empty() && dir.join(COHORT_VCF).is_file() {
            vcfs.push(dir.join(COHORT_VCF));
        }
    }
    for p in vcfs.iter().chain(&panel) {
        if !p.is_file() {
            return Err(Failure::config(format!("{} does not exist", p.display())));
        }
    }

    let (matrix, settings, stats, inputs) = match cache {
        Some(dir) => {
            let (m, s) = read_matrix_cache(&dir)?;
            (m, s, None, vec![dir])
        }
        None if vcfs.is_empty() => {
            return Err(Failure::config(
                "no input: give --vcf, or --input with a synth or featurize directory",
            ))
        }
        None => {
            let settings = settings(input)?;
            let (m, stats) = featurize_files(&vcfs, &settings)?;
            (m, settings, Some(stats), vcfs)
        }
    };
    let dataset = match &panel {
        Some(p) => Some(attach_labels(matrix.clone(), &read_panel(p)?, level)?),
        None => None,
    };
    let mut inputs = inputs;
    inputs.extend(panel.clone());
    Ok(Data { matrix, dataset, settings, stats, inputs, panel })
}

fn featurize_files(
    vcfs: &[PathBuf],
    settings: &FeaturizeSettings,
) -> Result<(FeatureMatrix, FeaturizeStats), Failure> {
    let mut readers = Vec::with_capacity(vcfs.len());
    for p in vcfs {
        readers.push(parse_vcf(open_text(p)?)?);
    }
    let samples = readers[0].samples().to_vec();
    for (r, p) in readers.iter().zip(vcfs).skip(1) {
        if r.samples() != samples.as_slice() {
            return Err(Failure::data(format!(
                "{} has a different sample header than {}",
                p.display(),
                vcfs[0].display()
            )));
        }
    }
    Ok(featurize::featurize(readers.into_iter().flatten(), &samples, settings)?)
}

fn featurize_task(input: &Input, out: &Path) -> Result<Outcome, Failure> {
    if input.vcf.is_empty() && input.input.as_ref().is_none_or(|d| !d.join(COHORT_VCF).is_file()) {
        return Err(Failure::config("featurize needs --vcf, or --input with a synth directory"));
    }
    let data = load(input)?;
    write_matrix_cache(&data.matrix, &data.settings, out)?;
    if let Some(p) = &data.panel {
        fs::copy(p, out.join(PANEL_FILE))?;
    }
    if let Some(ds) = &data.dataset {
        let mut w = BufWriter::new(File::create(out.join("labeled.csv"))?);
        write_labeled_csv(ds, &mut w)?;
        w.flush()?;
    }
    let stats = data.stats.clone().expect("featurized from VCF");
    let mut report = Report::new();
    report
        .text("samples", data.matrix.n_samples())
        .text("variants_seen", stats.variants_seen)
        .text("variants_supported", stats.variants_supported)
        .text("variants_retained", stats.variants_retained)
        .text("min_alt", data.settings.min_alt)
        .text("missing", data.settings.missing.name())
        .text("scaling", data.settings.scaling.name());
    Ok(Outcome { report, featurize_hash: data.hash(), inputs: data.inputs })
}

fn write_assignments(
    path: &Path,
    ids: &[String],
    labels: impl Iterator<Item = String>,
) -> Result<(), Failure> {
    let mut t = CsvTable::new(&["sample_id", "label"]);
    for (id, l) in ids.iter().zip(labels) {
        t.push(vec![csv_escape(id), csv_escape(&l)]);
    }
    Ok(t.write(path)?)
}

fn score_clusters(report: &mut Report, data: &Data, clusters: &[usize]) -> Result<(), Failure> {
    if let Some(ds) = &data.dataset {
        report.extend("", &ClusteringScore::compute(&ds.labels, clusters)?.report());
    }
    Ok(())
}

fn cluster_kmeans(input: &Input, config: &KMeansConfig, out: &Path) -> Result<Outcome, Failure> {
    let data = load(input)?;
    let x = data.matrix.to_features(data.settings.scaling);
    let model = kmeans::fit(&x, config)?;
    write_assignments(
        &out.join("assignments.csv"),
        &data.matrix.sample_ids,
        model.assignments.iter().map(|a| a.to_string()),
    )?;
    let hash = data.settings.hash_hex();
    save_model(&model, &out.join("model"), &hash, config.seed)?;
    let mut report = Report::new();
    report
        .text("k", model.k)
        .text("restarts", config.restarts)
        .text("iterations", model.iterations_run)
        .float("wcss", model.wcss);
    score_clusters(&mut report, &data, &model.assignments)?;
    Ok(Outcome { report, featurize_hash: Some(hash), inputs: data.inputs })
}

fn cluster_dec(input: &Input, sae: &SaeConfig, config: &DecConfig, out: &Path) -> Result<Outcome, Failure> {
    let data = load(input)?;
    let x = data.matrix.to_features(data.settings.scaling);
    let state = dec::cluster_dec(&x, sae, config)?;
    let (z, _) = state.predict(&x)?;
    dec::embedding_table(&data.matrix.sample_ids, &z, &state.labels).write(&out.join("embedding.csv"))?;
    dec::history_table(&state.history).write(&out.join("history.csv"))?;
    write_assignments(
        &out.join("assignments.csv"),
        &data.matrix.sample_ids,
        state.labels.iter().map(|a| a.to_string()),
    )?;
    let hash = data.settings.hash_hex();
    save_model(&state, &out.join("model"), &hash, config.seed)?;
    let mut report = Report::new();
    report
        .text("k", config.k)
        .text("iterations", state.iterations_run)
        .text("intervals", state.history.len());
    if let Some(last) = state.history.last() {
        report.float("kl_loss", last.kl_loss).float("reconstruction_loss", last.reconstruction_loss);
    }
    score_clusters(&mut report, &data, &state.labels)?;
    Ok(Outcome { report, featurize_hash: Some(hash), inputs: data.inputs })
}

trait Classifier: Persist {
    fn predict_rows(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>, Failure>;
    fn epochs(&self) -> &[EpochRecord];
}

impl Classifier for MlpClassifier {
    fn predict_rows(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>, Failure> {
        Ok(self.predict(matrix)?)
    }

    fn epochs(&self) -> &[EpochRecord] {
        &self.history
    }
}

impl Classifier for Dbn {
    fn predict_rows(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>, Failure> {
        Ok(self.predict(matrix)?)
    }

    fn epochs(&self) -> &[EpochRecord] {
        &self.finetune_history
    }
}

fn history_table(history: &[EpochRecord]) -> CsvTable {
    let mut t = CsvTable::new(&["epoch", "loss", "accuracy", "validation_loss", "validation_accuracy"]);
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for h in history {
        t.push(vec![
            h.epoch.to_string(),
            format_float(h.loss),
            format_float(h.accuracy),
            opt(h.validation_loss),
            opt(h.validation_accuracy),
        ]);
    }
    t
}

fn train_classifier<M: Classifier>(
    data: Data,
    split: &SplitArgs,
    seed: u64,
    out: &Path,
    train: impl FnOnce(&LabeledDataset, Option<&LabeledDataset>) -> Result<M, Failure>,
) -> Result<Outcome, Failure> {
    let ds = data.labeled("training")?;
    let spec = SplitSpec::new(split.train_fraction, split.test_fraction, split.validation_fraction, seed);
    let parts = featurize::split(ds, &spec)?;
    let validation = (parts.validation.n_rows() > 0).then_some(&parts.validation);
    let model = train(&parts.train, validation)?;
    let hash = data.settings.hash_hex();
    save_model(&model, &out.join("model"), &hash, seed)?;
    history_table(model.epochs()).write(&out.join("history.csv"))?;

    let predicted = model.predict_rows(&parts.test.matrix)?;
    let vocab = &ds.label_vocabulary;
    let name = |&i: &usize| vocab[i].clone();
    write_assignments(
        &out.join("predictions.csv"),
        &parts.test.matrix.sample_ids,
        predicted.iter().map(name),
    )?;
    write_assignments(
        &out.join("truth.csv"),
        &parts.test.matrix.sample_ids,
        parts.test.labels.iter().map(name),
    )?;
    let cm = confusion_matrix_indices(&parts.test.labels, &predicted, vocab)?;
    fs::write(out.join("confusion.csv"), cm.to_csv())?;

    let mut report = Report::new();
    report
        .text("train_rows", parts.train.n_rows())
        .text("test_rows", parts.test.n_rows())
        .text("validation_rows", parts.validation.n_rows());
    report.extend("", &ClassificationScore::compute(&parts.test.labels, &predicted, vocab)?.report());
    if let Some(last) = model.epochs().last() {
        report.float("train_loss", last.loss);
        if let Some(vl) = last.validation_loss {
            report.float("validation_loss", vl);
            if let Ok(g) = generalizability(last.loss, vl) {
                report.float("g", g);
            }
        }
    }
    Ok(Outcome { report, featurize_hash: Some(hash), inputs: data.inputs })
}

/// `sample_id,label` rows after a header line.
fn read_labels(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let reader =
        open_text(path).map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut f = line.split(',');
        match (f.next(), f.next()) {
            (Some(id), Some(label)) => rows.push((id.trim().to_string(), label.trim().to_string())),
            _ => {
                return Err(Failure::parse(format!("{}:{}: expected sample_id,label", path.display(), i + 1)))
            }
        }
    }
    Ok(rows)
}

fn evaluate(truth: &Path, pred: &Path, out: &Path) -> Result<Outcome, Failure> {
    let t = read_labels(truth)?;
    let p: HashMap<String, String> = read_labels(pred)?.into_iter().collect();
    if p.len() != t.len() {
        return Err(Failure::data(format!(
            "{} labels {} rows, {} labels {}",
            truth.display(),
            t.len(),
            pred.display(),
            p.len()
        )));
    }
    let mut y_true = Vec::with_capacity(t.len());
    let mut y_pred = Vec::with_capacity(t.len());
    for (id, label) in &t {
        let predicted = p.get(id).ok_or_else(|| Failure::data(format!("no prediction for sample {id}")))?;
        y_true.push(label.clone());
        y_pred.push(predicted.clone());
    }
    let vocab: Vec<String> =
        y_true.iter().chain(&y_pred).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let index = |v: &String| vocab.binary_search(v).expect("label in vocabulary");
    let ti: Vec<usize> = y_true.iter().map(index).collect();
    let pi: Vec<usize> = y_pred.iter().map(index).collect();
    let cm = confusion_matrix(&y_true, &y_pred, &vocab)?;
    fs::write(out.join("confusion.csv"), cm.to_csv())?;

    let mut report = Report::new();
    report.text("rows", t.len());
    report.extend("", &ClassificationScore::compute(&ti, &pi, &vocab)?.report());
    report.extend("", &ClusteringScore::compute(&ti, &pi)?.report());
    Ok(Outcome { report, featurize_hash: None, inputs: vec![truth.to_path_buf(), pred.to_path_buf()] })
}

fn elbow(
    input: &Input,
    k_min: usize,
    k_max: usize,
    restarts: usize,
    max_iterations: usize,
    seed: u64,
    out: &Path,
) -> Result<Outcome, Failure> {
    if k_min == 0 || k_min > k_max {
        return Err(Failure::config(format!("bad k range {k_min}..={k_max}")));
    }
    let data = load(input)?;
    let x = data.matrix.to_features(data.settings.scaling);
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let sweep = kmeans::elbow_sweep(&x, &ks, restarts, max_iterations, seed)?;
    sweep.to_table().write(&out.join("elbow.csv"))?;
    let mut report = Report::new();
    for &(k, w) in &sweep.entries {
        report.float(&format!("wcss_k{k}"), w);
    }
    report.text("elbow_k", sweep.elbow_k().map(|k| k.to_string()).unwrap_or_else(|| "none".into()));
    Ok(Outcome { report, featurize_hash: data.hash(), inputs: data.inputs })
}
