//! Model persistence.
//!
//! An artifact is a directory holding `manifest.txt` (tab-separated
//! key/value lines: format version, model kind, metadata, array names and
//! shapes in order) and `arrays.bin` (the arrays' values as little-endian
//! f64, concatenated in manifest order).

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::dbn::Dbn;
use crate::dec::{Autoencoder, DecState};
use crate::featurize::Scaling;
use crate::kmeans::KMeansModel;
use crate::mlp::MlpClassifier;
use crate::nn::{Activation, DenseLayer, Matrix, Vector};
use crate::rbm::Rbm;

pub const FORMAT_NAME: &str = "popstrat-model";
pub const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.txt";
const ARRAYS: &str = "arrays.bin";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("artifact format version {found} is not supported (this build reads {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error("artifact holds a {found} model, expected {expected}")]
    WrongKind { expected: String, found: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

fn corrupt(msg: impl Into<String>) -> StoreError {
    StoreError::CorruptArtifact(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub version: u32,
    pub kind: String,
    /// Ordered metadata; keys may repeat (one `label` line per class).
    pub meta: Vec<(String, String)>,
    pub arrays: Vec<NamedArray>,
}

impl ModelArtifact {
    pub fn new(kind: &str) -> Self {
        ModelArtifact { version: FORMAT_VERSION, kind: kind.into(), meta: Vec::new(), arrays: Vec::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.meta.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()).collect()
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| corrupt(format!("missing {key}")))
    }

    fn require_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?.parse().map_err(|_| corrupt(format!("bad value for {key}")))
    }

    pub fn push_matrix(&mut self, name: &str, m: &Matrix) {
        self.arrays.push(NamedArray {
            name: name.into(),
            shape: vec![m.nrows(), m.ncols()],
            data: m.iter().copied().collect(),
        });
    }

    pub fn push_vector(&mut self, name: &str, v: &Vector) {
        self.arrays.push(NamedArray { name: name.into(), shape: vec![v.len()], data: v.to_vec() });
    }

    fn array(&self, name: &str) -> Result<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name).ok_or_else(|| corrupt(format!("missing array {name}")))
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        let a = self.array(name)?;
        match a.shape[..] {
            [r, c] => Matrix::from_shape_vec((r, c), a.data.clone()).map_err(|e| corrupt(e.to_string())),
            _ => Err(corrupt(format!("{name} is not a matrix"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<Vector> {
        let a = self.array(name)?;
        match a.shape[..] {
            [_] => Ok(Vector::from(a.data.clone())),
            _ => Err(corrupt(format!("{name} is not a vector"))),
        }
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(StoreError::WrongKind { expected: kind.into(), found: self.kind.clone() });
        }
        Ok(())
    }

    pub fn manifest_text(&self) -> String {
        let mut s = format!("format\t{FORMAT_NAME}\nversion\t{}\nkind\t{}\n", self.version, self.kind);
        for (k, v) in &self.meta {
            s.push_str(&format!("meta\t{k}\t{v}\n"));
        }
        for a in &self.arrays {
            let dims: Vec<String> = a.shape.iter().map(usize::to_string).collect();
            s.push_str(&format!("array\t{}\t{}\n", a.name, dims.join("x")));
        }
        s
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST), self.manifest_text())?;
        let total: usize = self.arrays.iter().map(|a| a.data.len()).sum();
        let mut bytes = Vec::with_capacity(total * 8);
        for a in &self.arrays {
            for v in &a.data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(dir.join(ARRAYS), bytes)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| corrupt("truncated manifest"))?;
            match line.split_once('\t') {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(corrupt(format!("expected {key} line, found {line:?}"))),
            }
        };
        if header("format")? != FORMAT_NAME {
            return Err(corrupt("not a model artifact"));
        }
        let version: u32 = header("version")?.parse().map_err(|_| corrupt("bad version"))?;
        if version != FORMAT_VERSION {
            return Err(StoreError::VersionMismatch { found: version, supported: FORMAT_VERSION });
        }
        let kind = header("kind")?;
        let mut artifact = ModelArtifact { version, kind, meta: Vec::new(), arrays: Vec::new() };
        let mut shapes = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.splitn(3, '\t').collect();
            match parts[..] {
                ["meta", k, v] => artifact.meta.push((k.to_string(), v.to_string())),
                ["meta", k] => artifact.meta.push((k.to_string(), String::new())),
                ["array", name, dims] => {
                    let shape = dims
                        .split('x')
                        .map(|d| d.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| corrupt(format!("bad shape {dims:?}")))?;
                    shapes.push((name.to_string(), shape));
                }
                [""] => {}
                _ => return Err(corrupt(format!("unrecognized manifest line {line:?}"))),
            }
        }
        let bytes = fs::read(dir.join(ARRAYS))?;
        let expected: usize = shapes.iter().map(|(_, s)| s.iter().product::<usize>() * 8).sum();
        if bytes.len() != expected {
            return Err(corrupt(format!(
                "array file has {} bytes, manifest declares {expected}",
                bytes.len()
            )));
        }
        let mut offset = 0;
        for (name, shape) in shapes {
            let n: usize = shape.iter().product();
            let data = bytes[offset..offset + 8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            offset += 8 * n;
            artifact.arrays.push(NamedArray { name, shape, data });
        }
        Ok(artifact)
    }
}

fn push_layers(a: &mut ModelArtifact, prefix: &str, layers: &[DenseLayer]) {
    a.set(&format!("{prefix}.layers"), layers.len());
    for (l, layer) in layers.iter().enumerate() {
        a.set(&format!("{prefix}{l}.activation"), layer.activation.name());
        a.push_matrix(&format!("{prefix}{l}.weights"), &layer.weights);
        a.push_vector(&format!("{prefix}{l}.bias"), &layer.bias);
    }
}

fn read_layers(a: &ModelArtifact, prefix: &str) -> Result<Vec<DenseLayer>> {
    let n: usize = a.require_parse(&format!("{prefix}.layers"))?;
    (0..n)
        .map(|l| {
            let act = a.require(&format!("{prefix}{l}.activation"))?;
            let activation =
                Activation::parse(act).ok_or_else(|| corrupt(format!("unknown activation {act}")))?;
            DenseLayer::new(
                a.matrix(&format!("{prefix}{l}.weights"))?,
                a.vector(&format!("{prefix}{l}.bias"))?,
                activation,
            )
            .map_err(|e| corrupt(e.to_string()))
        })
        .collect()
}

fn push_labels(a: &mut ModelArtifact, labels: &[String]) {
    for l in labels {
        a.set("label", l);
    }
}

fn read_labels(a: &ModelArtifact) -> Vec<String> {
    a.get_all("label").into_iter().map(str::to_string).collect()
}

fn read_scaling(a: &ModelArtifact) -> Result<Scaling> {
    let s = a.require("scaling")?;
    Scaling::parse(s).ok_or_else(|| corrupt(format!("unknown scaling {s}")))
}

/// Conversion to and from the on-disk artifact.
pub trait Persist: Sized {
    const KIND: &'static str;
    fn to_artifact(&self) -> ModelArtifact;
    fn from_artifact(a: &ModelArtifact) -> Result<Self>;
}

impl Persist for MlpClassifier {
    const KIND: &'static str = "mlp";

    fn to_artifact(&self) -> ModelArtifact {
        let mut a = ModelArtifact::new(Self::KIND);
        a.set("scaling", self.scaling.name());
        push_labels(&mut a, &self.label_vocabulary);
        push_layers(&mut a, "layer", &self.layers);
        a
    }

    fn from_artifact(a: &ModelArtifact) -> Result<Self> {
        a.expect_kind(Self::KIND)?;
        Ok(MlpClassifier {
            layers: read_layers(a, "layer")?,
            label_vocabulary: read_labels(a),
            scaling: read_scaling(a)?,
            history: Vec::new(),
        })
    }
}

impl Persist for Dbn {
    const KIND: &'static str = "dbn";

    fn to_artifact(&self) -> ModelArtifact {
        let mut a = ModelArtifact::new(Self::KIND);
        a.set("scaling", self.scaling.name());
        push_labels(&mut a, &self.label_vocabulary);
        push_layers(&mut a, "layer", &self.layers);
        a.set("rbms", self.rbms.len());
        for (l, r) in self.rbms.iter().enumerate() {
            a.push_matrix(&format!("rbm{l}.weights"), &r.weights);
            a.push_vector(&format!("rbm{l}.visible_bias"), &r.visible_bias);
            a.push_vector(&format!("rbm{l}.hidden_bias"), &r.hidden_bias);
        }
        a
    }

    fn from_artifact(a: &ModelArtifact) -> Result<Self> {
        a.expect_kind(Self::KIND)?;
        let n: usize = a.require_parse("rbms")?;
        let rbms = (0..n)
            .map(|l| {
                Ok(Rbm {
                    weights: a.matrix(&format!("rbm{l}.weights"))?,
                    visible_bias: a.vector(&format!("rbm{l}.visible_bias"))?,
                    hidden_bias: a.vector(&format!("rbm{l}.hidden_bias"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dbn {
            rbms,
            layers: read_layers(a, "layer")?,
            label_vocabulary: read_labels(a),
            scaling: read_scaling(a)?,
            pretrain_history: Vec::new(),
            finetune_history: Vec::new(),
        })
    }
}

impl Persist for KMeansModel {
    const KIND: &'static str = "kmeans";

    fn to_artifact(&self) -> ModelArtifact {
        let mut a = ModelArtifact::new(Self::KIND);
        a.set("k", self.k);
        a.set("iterations_run", self.iterations_run);
        a.push_matrix("centroids", &self.centroids);
        a.push_vector("wcss", &Vector::from(vec![self.wcss]));
        a.push_vector("assignments", &self.assignments.iter().map(|&x| x as f64).collect());
        a
    }

    fn from_artifact(a: &ModelArtifact) -> Result<Self> {
        a.expect_kind(Self::KIND)?;
        let centroids = a.matrix("centroids")?;
        let k: usize = a.require_parse("k")?;
        if centroids.nrows() != k {
            return Err(corrupt("centroid count differs from k"));
        }
        let wcss = a.vector("wcss")?;
        Ok(KMeansModel {
            k,
            centroids,
            assignments: a.vector("assignments")?.iter().map(|&x| x as usize).collect(),
            wcss: *wcss.first().ok_or_else(|| corrupt("empty wcss"))?,
            iterations_run: a.require_parse("iterations_run")?,
        })
    }
}

impl Persist for DecState {
    const KIND: &'static str = "dec";

    fn to_artifact(&self) -> ModelArtifact {
        let mut a = ModelArtifact::new(Self::KIND);
        a.set("alpha", crate::report::format_float(self.alpha));
        a.set("alpha_bits", self.alpha.to_bits());
        a.set("tol_bits", self.tol.to_bits());
        a.set("gamma_bits", self.gamma.to_bits());
        a.set("iterations_run", self.iterations_run);
        push_layers(&mut a, "encoder", &self.autoencoder.encoder);
        push_layers(&mut a, "decoder", &self.autoencoder.decoder);
        a.push_matrix("centroids", &self.centroids);
        a.push_matrix("q", &self.q);
        a.push_matrix("p", &self.p);
        a.push_vector("labels", &self.labels.iter().map(|&x| x as f64).collect());
        a
    }

    fn from_artifact(a: &ModelArtifact) -> Result<Self> {
        a.expect_kind(Self::KIND)?;
        let bits = |k: &str| -> Result<f64> { Ok(f64::from_bits(a.require_parse(k)?)) };
        Ok(DecState {
            autoencoder: Autoencoder {
                encoder: read_layers(a, "encoder")?,
                decoder: read_layers(a, "decoder")?,
                pretrained: true,
            },
            centroids: a.matrix("centroids")?,
            alpha: bits("alpha_bits")?,
            tol: bits("tol_bits")?,
            gamma: bits("gamma_bits")?,
            q: a.matrix("q")?,
            p: a.matrix("p")?,
            history: Vec::new(),
            labels: a.vector("labels")?.iter().map(|&x| x as usize).collect(),
            iterations_run: a.require_parse("iterations_run")?,
        })
    }
}

/// Save with provenance metadata (featurize settings hash and seed).
pub fn save_model<M: Persist>(model: &M, dir: &Path, featurize_hash: &str, seed: u64) -> Result<()> {
    let mut a = model.to_artifact();
    a.set("featurize_hash", featurize_hash);
    a.set("seed", seed);
    a.save(dir)
}

pub fn load_model<M: Persist>(dir: &Path) -> Result<M> {
    M::from_artifact(&ModelArtifact::load(dir)?)
}

/// Kind recorded in an artifact's manifest.
pub fn artifact_kind(dir: &Path) -> Result<String> {
    Ok(ModelArtifact::load(dir)?.kind)
}
