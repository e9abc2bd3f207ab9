use ndarray::Array2;
use popstrat_core::dec::{kl_loss, soft_assign, target_distribution};
use popstrat_core::featurize::{featurize, split_indices, FeaturizeSettings};
use popstrat_core::genio::parse_vcf;
use popstrat_core::kmeans::{self, KMeansConfig};
use popstrat_core::nn::{adadelta_step, Activation};
use popstrat_core::rbm::Rbm;
use popstrat_core::report::Report;
use popstrat_core::store::ModelArtifact;
use popstrat_core::synthgen::{self, CohortSpec};
use popstrat_core::Matrix;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_assignments_and_targets_are_distributions(
        z in matrix(6, 3, -3.0, 3.0),
        mu in matrix(4, 3, -3.0, 3.0),
        alpha in 0.2f64..4.0,
    ) {
        let q = soft_assign(&z, &mu, alpha).unwrap();
        let p = target_distribution(&q).unwrap();
        for row in q.rows().into_iter().chain(p.rows()) {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
        prop_assert!(kl_loss(&p, &q).unwrap() >= -1e-12);
    }

    #[test]
    fn featurized_counts_respect_the_filter(seed in 0u64..1000, min_alt in 0u32..30) {
        let spec = CohortSpec { n_populations: 2, samples_per_population: 5, n_variants: 40, divergence: 0.3, seed };
        let c = synthgen::generate(&spec).unwrap();
        let reader = parse_vcf(c.vcf.as_bytes()).unwrap();
        let samples = reader.samples().to_vec();
        let settings = FeaturizeSettings { min_alt, ..FeaturizeSettings::default() };
        let (m, stats) = featurize(reader, &samples, &settings).unwrap();
        prop_assert_eq!(m.n_variants(), stats.variants_retained);
        prop_assert!(m.values.iter().all(|&v| v <= 2));
        for col in m.values.columns() {
            prop_assert!(col.iter().map(|&v| v as u32).sum::<u32>() >= min_alt);
        }
        let mut sorted = m.sample_ids.clone();
        sorted.sort();
        prop_assert_eq!(&sorted, &m.sample_ids);
    }

    #[test]
    fn splits_partition_the_rows(
        labels in prop::collection::vec(0usize..3, 30..120),
        seed in any::<u64>(),
    ) {
        prop_assume!((0..3).all(|c| labels.iter().filter(|&&l| l == c).count() >= 3));
        let vocab = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let spec = popstrat_core::SplitSpec::new(0.6, 0.2, 0.2, seed);
        let parts = split_indices(&labels, &vocab, &spec).unwrap();
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let n = labels.len() as f64;
        for (part, f) in parts.iter().zip([0.6, 0.2, 0.2]) {
            prop_assert!((part.len() as f64 - n * f).abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn more_restarts_never_hurt(points in matrix(12, 2, -5.0, 5.0), seed in any::<u64>(), k in 1usize..4) {
        let few = kmeans::fit(&points, &KMeansConfig { k, max_iterations: 100, restarts: 2, seed }).unwrap();
        let many = kmeans::fit(&points, &KMeansConfig { k, max_iterations: 100, restarts: 8, seed }).unwrap();
        prop_assert!(many.wcss <= few.wcss);
        prop_assert_eq!(many.assignments.len(), 12);
    }

    #[test]
    fn adadelta_first_step_closed_form(g in -10.0f64..10.0, rho in 0.5f64..0.999, eps in 1e-8f64..1e-2) {
        let (mut p, mut eg, mut ex) = ([0.0], [0.0], [0.0]);
        adadelta_step(&mut p, &[g], &mut eg, &mut ex, rho, eps, 1.0).unwrap();
        let expected = -(eps.sqrt() / ((1.0 - rho) * g * g + eps).sqrt()) * g;
        prop_assert!((p[0] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn rbm_conditionals_are_probabilities(seed in any::<u64>(), v in prop::collection::vec(0.0f64..=1.0, 5)) {
        let rbm = Rbm::new_random(5, 4, seed);
        let h = rbm.hidden_probs(&v).unwrap();
        prop_assert!(h.iter().all(|&p| p > 0.0 && p < 1.0));
        let back = rbm.visible_probs(h.as_slice().unwrap()).unwrap();
        prop_assert!(back.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn softmax_rows_sum_to_one(z in matrix(4, 5, -50.0, 50.0)) {
        let p = Activation::Softmax.apply(&z);
        for row in p.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn report_text_round_trips(values in prop::collection::vec(-1e6f64..1e6, 1..8)) {
        let mut r = Report::new();
        for (i, v) in values.iter().enumerate() {
            r.float(&format!("f{i}"), *v);
        }
        prop_assert_eq!(Report::parse(&r.to_text()), r);
    }

    #[test]
    fn artifacts_round_trip_bit_exact(m in matrix(3, 4, -1e300, 1e300), tag in "[a-z]{1,8}") {
        let dir = tempfile::tempdir().unwrap();
        let mut a = ModelArtifact::new("test");
        a.set("tag", &tag);
        a.push_matrix("m", &m);
        a.save(dir.path()).unwrap();
        let b = ModelArtifact::load(dir.path()).unwrap();
        prop_assert_eq!(b.get("tag"), Some(tag.as_str()));
        let back = b.matrix("m").unwrap();
        prop_assert!(back.iter().zip(m.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
