use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use popstrat_core::dec::{dec_gradients, soft_assign, target_distribution};
use popstrat_core::featurize::{attach_labels, featurize, FeaturizeSettings, LabelLevel};
use popstrat_core::genio::{parse_panel, parse_vcf};
use popstrat_core::kmeans::{self, KMeansConfig};
use popstrat_core::metrics::{adjusted_rand_index, clustering_accuracy, nmi};
use popstrat_core::mlp::{self, MlpConfig};
use popstrat_core::rbm::{CdConfig, Rbm};
use popstrat_core::synthgen::{self, CohortSpec};
use popstrat_core::{LabeledDataset, Matrix, Scaling};

const SPEC: CohortSpec =
    CohortSpec { n_populations: 3, samples_per_population: 100, n_variants: 3000, divergence: 0.1, seed: 42 };

fn dataset(vcf: &str, panel: &str) -> LabeledDataset {
    let reader = parse_vcf(vcf.as_bytes()).unwrap();
    let samples = reader.samples().to_vec();
    let (m, _) = featurize(reader, &samples, &FeaturizeSettings::default()).unwrap();
    attach_labels(m, &parse_panel(panel.as_bytes()).unwrap(), LabelLevel::Population).unwrap()
}

fn ingest(c: &mut Criterion) {
    let cohort = synthgen::generate(&SPEC).unwrap();
    let mut g = c.benchmark_group("ingest");
    g.sample_size(10);
    g.bench_function("synth 300x3000", |b| b.iter(|| synthgen::generate(black_box(&SPEC)).unwrap()));
    g.bench_function("parse+featurize 300x3000", |b| {
        b.iter(|| dataset(black_box(&cohort.vcf), &cohort.panel))
    });
    g.finish();
}

fn models(c: &mut Criterion) {
    let cohort = synthgen::generate(&SPEC).unwrap();
    let ds = dataset(&cohort.vcf, &cohort.panel);
    let x = ds.features(Scaling::Half);

    let mut g = c.benchmark_group("models");
    g.sample_size(10);
    g.bench_function("kmeans k=3 x10 restarts", |b| {
        let config = KMeansConfig { restarts: 10, ..KMeansConfig::new(3, 1) };
        b.iter(|| kmeans::fit(black_box(&x), &config).unwrap())
    });
    g.bench_function("cd1 epoch 3000->256", |b| {
        let config = CdConfig { learning_rate: 0.01, epochs: 1, batch_size: 32, seed: 1 };
        b.iter_batched(
            || Rbm::new_random(x.ncols(), 256, 1),
            |mut rbm| rbm.train(&x, &config).unwrap(),
            BatchSize::LargeInput,
        )
    });
    g.bench_function("mlp epoch 3000-256x4-3", |b| {
        let config = MlpConfig { epochs: 1, ..MlpConfig::default() }.with_seed(1);
        b.iter(|| mlp::train_mlp(black_box(&ds), &config, None).unwrap())
    });
    g.finish();
}

fn clustering_math(c: &mut Criterion) {
    let n = 300;
    let z = Matrix::from_shape_fn((n, 10), |(i, j)| ((i * 31 + j * 17) % 97) as f64 / 97.0);
    let mu = Matrix::from_shape_fn((3, 10), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 11.0);
    let q = soft_assign(&z, &mu, 1.0).unwrap();
    let p = target_distribution(&q).unwrap();
    let truth: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let pred: Vec<usize> = (0..n).map(|i| (i * 7 / 5) % 4).collect();

    let mut g = c.benchmark_group("clustering math");
    g.bench_function("soft assign + target 300x10 k=3", |b| {
        b.iter(|| target_distribution(&soft_assign(black_box(&z), &mu, 1.0).unwrap()).unwrap())
    });
    g.bench_function("dec gradients 300x10 k=3", |b| {
        b.iter(|| dec_gradients(black_box(&z), &mu, &p, &q, 1.0).unwrap())
    });
    g.bench_function("ari+nmi+acc n=300", |b| {
        b.iter(|| {
            (
                adjusted_rand_index(black_box(&truth), &pred).unwrap(),
                nmi(&truth, &pred).unwrap(),
                clustering_accuracy(&truth, &pred).unwrap(),
            )
        })
    });
    g.finish();
}

criterion_group!(benches, ingest, models, clustering_math);
criterion_main!(benches);
