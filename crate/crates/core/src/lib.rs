//! Population stratification from SNP genotypes.
//!
//! The crate covers the whole single-node pipeline: VCF and panel ingestion
//! ([`genio`]), the samples × variants alternate-allele matrix
//! ([`featurize`]), seeded synthetic cohorts ([`synthgen`]), a small dense
//! neural-network substrate ([`nn`]) with the classifiers built on it
//! ([`mlp`], [`rbm`], [`dbn`]), clustering ([`kmeans`], [`dec`]), evaluation
//! ([`metrics`]) and model persistence ([`store`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dbn;
pub mod dec;
pub mod error;
pub mod featurize;
pub mod genio;
pub mod kmeans;
pub mod metrics;
pub mod mlp;
pub mod nn;
pub mod rbm;
pub mod report;
pub mod store;
pub mod synthgen;

pub use error::{Error, ErrorCategory, Result};
pub use featurize::{FeatureMatrix, LabeledDataset, Scaling, SplitSpec, VariantKey};
pub use genio::{GenotypeCall, PanelEntry, VariantRecord};
pub use metrics::{ClassificationScore, ClusteringScore, ConfusionMatrix};
pub use nn::Matrix;

/// Derive an independent stream seed from a base seed and a stream index.
///
/// SplitMix64 finalizer; used wherever one user-facing seed has to feed
/// several RNG streams (layers, restarts, folds).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
