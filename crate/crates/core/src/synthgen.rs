//! Seeded synthetic cohorts: a multi-sample VCF and matching panel whose
//! populations differ in allele frequency by a tunable amount.
//!
//! Per variant a base frequency is drawn from U(0.05, 0.95); each population
//! draws its own frequency from a Beta with that mean and variance
//! `divergence·base·(1−base)`; every genotype is two independent draws at the
//! population frequency.

use std::fmt::Write as _;
use std::io::{self, Write};

use indexmap::IndexMap;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::genio::{header_line, GenotypeCall, PanelEntry, VariantRecord, SUPER_POPULATIONS};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortSpec {
    pub n_populations: usize,
    pub samples_per_population: usize,
    pub n_variants: usize,
    pub divergence: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_populations == 0 || self.samples_per_population == 0 || self.n_variants == 0 {
            return Err(SynthError::InvalidSpec("all counts must be at least 1".into()));
        }
        if !(self.divergence > 0.0 && self.divergence < 1.0) {
            return Err(SynthError::InvalidSpec(format!("divergence {} outside (0, 1)", self.divergence)));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_populations * self.samples_per_population
    }

    pub fn sample_id(&self, index: usize) -> String {
        format!("SYN{index:05}")
    }

    pub fn population_of(&self, index: usize) -> usize {
        index / self.samples_per_population
    }

    pub fn panel(&self) -> Vec<PanelEntry> {
        (0..self.n_samples())
            .map(|i| {
                let p = self.population_of(i);
                PanelEntry {
                    sample_id: self.sample_id(i),
                    population: format!("P{p}"),
                    super_population: SUPER_POPULATIONS[p % SUPER_POPULATIONS.len()].to_string(),
                    gender: if i % 2 == 0 { "male" } else { "female" }.to_string(),
                }
            })
            .collect()
    }
}

/// What the generator drew, for checking recovered structure.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortTruth {
    pub base_frequencies: Vec<f64>,
    /// `[variant][population]`.
    pub population_frequencies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub vcf: String,
    pub panel: String,
    pub truth: CohortTruth,
}

const BASES: [&str; 4] = ["A", "C", "G", "T"];

/// Population frequency around `base`. Beta(a, b) with `a + b = 1/div − 1`
/// has mean `base` and variance `div·base·(1−base)`.
fn population_frequency<R: Rng + ?Sized>(base: f64, divergence: f64, rng: &mut R) -> f64 {
    let concentration = 1.0 / divergence - 1.0;
    if concentration > 1e12 {
        return base;
    }
    let beta =
        Beta::new(base * concentration, (1.0 - base) * concentration).expect("positive Beta parameters");
    beta.sample(rng)
}

/// Stream the cohort into two writers; returns the drawn frequencies.
pub fn write_cohort<V: Write, P: Write>(
    spec: &CohortSpec,
    mut vcf: V,
    mut panel: P,
) -> io::Result<CohortTruth> {
    spec.validate().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let mut rng = crate::rng_from_seed(spec.seed);
    let samples: Vec<String> = (0..spec.n_samples()).map(|i| spec.sample_id(i)).collect();

    writeln!(panel, "sample\tpop\tsuper_pop\tgender")?;
    for e in spec.panel() {
        writeln!(panel, "{}\t{}\t{}\t{}", e.sample_id, e.population, e.super_population, e.gender)?;
    }

    writeln!(vcf, "##fileformat=VCFv4.1")?;
    writeln!(vcf, "##source=popstrat-synthgen")?;
    writeln!(vcf, "##FORMAT=<ID=GT,Number=1,Type=String,Description=\"Genotype\">")?;
    writeln!(vcf, "{}", header_line(&samples))?;

    let mut truth = CohortTruth {
        base_frequencies: Vec::with_capacity(spec.n_variants),
        population_frequencies: Vec::with_capacity(spec.n_variants),
    };
    let mut calls = Vec::with_capacity(samples.len());
    for v in 0..spec.n_variants {
        let base: f64 = rng.random_range(0.05..=0.95);
        let freqs: Vec<f64> =
            (0..spec.n_populations).map(|_| population_frequency(base, spec.divergence, &mut rng)).collect();
        let ref_idx = rng.random_range(0..4);
        let alt_idx = (ref_idx + rng.random_range(1..4)) % 4;

        calls.clear();
        let mut ac = 0u64;
        for i in 0..samples.len() {
            let f = freqs[spec.population_of(i)];
            let a = (rng.random::<f64>() < f) as u32;
            let b = (rng.random::<f64>() < f) as u32;
            ac += (a + b) as u64;
            calls.push(GenotypeCall::diploid(a, b, true));
        }
        let an = 2 * samples.len() as u64;
        let mut info = IndexMap::new();
        info.insert("AC".to_string(), ac.to_string());
        let mut af = String::new();
        write!(af, "{:.6}", ac as f64 / an as f64).expect("write to string");
        info.insert("AF".to_string(), af);
        info.insert("AN".to_string(), an.to_string());
        info.insert("NS".to_string(), samples.len().to_string());
        info.insert("VT".to_string(), "SNP".to_string());
        let record = VariantRecord {
            chrom: "1".into(),
            pos: 1000 + 100 * v as u64,
            id: format!("rs{}", 100_000 + v),
            ref_allele: BASES[ref_idx].into(),
            alt_alleles: vec![BASES[alt_idx].into()],
            qual: "100".into(),
            filter: "PASS".into(),
            info,
            calls: std::mem::take(&mut calls),
        };
        writeln!(vcf, "{}", record.to_vcf_line())?;
        calls = record.calls;
        truth.base_frequencies.push(base);
        truth.population_frequencies.push(freqs);
    }
    Ok(truth)
}

/// The whole cohort in memory.
pub fn generate(spec: &CohortSpec) -> Result<Cohort, SynthError> {
    spec.validate()?;
    let mut vcf = Vec::new();
    let mut panel = Vec::new();
    let truth = write_cohort(spec, &mut vcf, &mut panel).expect("writing to memory");
    Ok(Cohort {
        vcf: String::from_utf8(vcf).expect("ASCII output"),
        panel: String::from_utf8(panel).expect("ASCII output"),
        truth,
    })
}
