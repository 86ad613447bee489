use affdim_core::attractor::{count_boxes, generate_exhaustive, generate_random};
use affdim_core::fixtures::{gaussian_matrix, random_contractive};
use affdim_core::ifs::{conjugate, membership_threshold, truncated_projection};
use affdim_core::linalg::{haar_orthogonal, singular_values};
use affdim_core::lyapunov::{exponents_mc, lyapunov_dimension, qr_cadence, QR_CADENCE, QR_SPREAD_LIMIT};
use affdim_core::pressure::{affinity_upper, pressure_sum, svf};
use affdim_core::rng::stream;
use affdim_core::symbolic::{enumerate_words, word_count, word_product};
use affdim_core::{StepMeasure, Word};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn svf_is_submultiplicative(seed in any::<u64>(), d in 1usize..=4, s in 0.0f64..4.0) {
        let mut rng = stream(seed, 0);
        let a = gaussian_matrix(d, rng.random_range(0.1..1.0), &mut rng);
        let b = gaussian_matrix(d, rng.random_range(0.1..1.0), &mut rng);
        let ab = svf(&(&a * &b), s).unwrap();
        prop_assert!(ab <= svf(&a, s).unwrap() * svf(&b, s).unwrap() * (1.0 + 1e-10));
    }

    #[test]
    fn svf_is_monotone_in_s_for_contractions(seed in any::<u64>(), d in 1usize..=3, s in 0.0f64..3.0, ds in 0.0f64..1.0) {
        let mut rng = stream(seed, 0);
        let a = gaussian_matrix(d, 0.9, &mut rng);
        prop_assert!(svf(&a, s + ds).unwrap() <= svf(&a, s).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn pressure_at_zero_counts_words(seed in any::<u64>(), d in 1usize..=3, n_maps in 2usize..=4, n in 1usize..=4) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(d, n_maps, (0.2, 0.6), &mut rng);
        let expected = n as f64 * (n_maps as f64).ln();
        prop_assert!((pressure_sum(&ifs, 0.0, n).unwrap() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn affinity_upper_is_orthogonally_invariant(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(d, 3, (0.2, 0.6), &mut rng);
        let u = haar_orthogonal(d, &mut rng).unwrap();
        let a = affinity_upper(&ifs, 3, 1e-10).unwrap();
        let b = affinity_upper(&conjugate(&ifs, &u).unwrap(), 3, 1e-10).unwrap();
        prop_assert!((a - b).abs() <= 1e-8);
        prop_assert!((0.0..=d as f64).contains(&a));
    }

    #[test]
    fn lyapunov_dimension_stays_in_range(h in 0.0f64..5.0, mut chi in prop::collection::vec(0.01f64..5.0, 1..=4)) {
        chi.sort_by(|a, b| a.total_cmp(b));
        let d = chi.len();
        let dim = lyapunov_dimension(h, &chi, d);
        prop_assert!((0.0..=d as f64).contains(&dim));
        prop_assert!(lyapunov_dimension(h + 0.5, &chi, d) >= dim);
    }

    #[test]
    fn word_products_respect_concatenation(seed in any::<u64>(), a in prop::collection::vec(0usize..3, 0..5), b in prop::collection::vec(0usize..3, 0..5)) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(2, 3, (0.2, 0.8), &mut rng);
        let (u, v) = (Word::new(a), Word::new(b));
        let joint = word_product(ifs.matrices(), &u.concat(&v)).unwrap();
        let split = word_product(ifs.matrices(), &u).unwrap() * word_product(ifs.matrices(), &v).unwrap();
        prop_assert!((joint - split).abs().max() <= 1e-14);
    }

    #[test]
    fn projections_stay_in_the_invariant_ball(seed in any::<u64>(), symbols in prop::collection::vec(0usize..3, 0..30)) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(2, 3, (0.2, 0.7), &mut rng);
        let x = truncated_projection(&ifs, &Word::new(symbols)).unwrap();
        prop_assert!(x.norm() <= ifs.radius().unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn box_counts_are_nested(seed in any::<u64>(), delta in 0.01f64..0.5) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(2, 3, (0.2, 0.5), &mut rng);
        let cloud = generate_random(&ifs, 2000, 30, seed).unwrap();
        let fine = count_boxes(&cloud, delta, 0.0).unwrap();
        let coarse = count_boxes(&cloud, 2.0 * delta, 0.0).unwrap();
        prop_assert!(coarse <= fine && fine <= 4 * coarse);
        prop_assert!(fine as usize <= cloud.len());
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn qr_cadence_bounds_the_spread(seed in any::<u64>(), d in 2usize..=3) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(d, 3, (0.2, 0.8), &mut rng);
        let k = qr_cadence(&ifs);
        prop_assert!((1..=QR_CADENCE).contains(&k));
        let kappa = ifs.spectra().iter().map(|s| s.norm() / s.mininorm()).fold(1.0, f64::max);
        prop_assert!(k == 1 || kappa.powi(k as i32) <= QR_SPREAD_LIMIT * (1.0 + 1e-12));
    }

    #[test]
    fn exponents_are_ordered_and_sum_to_log_det(seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let ifs = random_contractive(2, 3, (0.2, 0.7), &mut rng);
        let measure = StepMeasure::uniform(3, 1).unwrap();
        let spec = exponents_mc(&ifs, &measure, 4000, 4, seed).unwrap();
        prop_assert!(spec.chi()[0] <= spec.chi()[1] + 1e-12);
        let mean_log_det: f64 = ifs
            .matrices()
            .iter()
            .map(|a| -a.determinant().abs().ln())
            .sum::<f64>()
            / 3.0;
        let se: f64 = spec.stderr().iter().sum();
        prop_assert!((spec.sum() - mean_log_det).abs() <= 5.0 * se + 0.05);
    }
}

#[test]
fn enumeration_matches_word_count() {
    for (n, len) in [(2, 0), (2, 5), (3, 4), (5, 2)] {
        let words: Vec<Word> = enumerate_words(n, len).unwrap().collect();
        assert_eq!(words.len() as u128, word_count(n, len).unwrap());
        assert!(words.windows(2).all(|w| w[0].symbols() < w[1].symbols()));
    }
}

#[test]
fn singular_values_are_sorted_and_match_determinant() {
    let mut rng = stream(11, 0);
    for d in 1..=5 {
        let a = gaussian_matrix(d, 0.7, &mut rng);
        let s = singular_values(&a).unwrap();
        assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        assert!((s.product() - a.determinant().abs()).abs() <= 1e-12);
    }
}

#[test]
fn exhaustive_cloud_size_and_thresholds() {
    let mut rng = stream(3, 0);
    let ifs = random_contractive(3, 3, (0.2, 0.5), &mut rng);
    assert_eq!(generate_exhaustive(&ifs, 5).unwrap().len(), 243);
    assert!(membership_threshold(1).is_none());
    assert!((membership_threshold(2).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-15);
    assert!((membership_threshold(4).unwrap() - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-15);
}
