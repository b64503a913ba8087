use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use simplex_learn::evaluation::{coupon_trials_bound, match_vertices};
use simplex_learn::geometry::{isotropic_simplex, AffineFrame};
use simplex_learn::learner::*;
use simplex_learn::sampling::{sample_simplex, SimplexSampler};
use simplex_learn::vertex_finder::ExactGradient;

fn well_conditioned(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::identity(n, n)
        + DMatrix::from_fn(n, n, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            0.3 * g
        })
}

/// With exact gradients the whole pipeline returns the true vertices of an
/// affine image of the isotropic simplex.
#[test]
fn exact_pipeline_through_affine_frame() {
    for n in [2, 4, 6] {
        let linear = well_conditioned(n, n as u64);
        let shift = DVector::from_fn(n, |i, _| i as f64 - 1.5);
        let truth = isotropic_simplex(n).unwrap().affine_image(&linear, &shift).unwrap();
        let frame = AffineFrame::new(shift, linear).unwrap();
        let config = LearnerConfig {
            m: 60,
            ..LearnerConfig::practical(n, 1).unwrap()
        };
        let learned = learn_with_oracle(n, frame, &config, |_, _| ExactGradient::canonical(n + 1)).unwrap();
        let est = learned.simplex.expect("complete");
        assert!(match_vertices(&truth, &est).unwrap().max_error <= 1e-8, "n={n}");
    }
}

/// Exact-mode repetitions find each vertex with equal probability, so the
/// coupon count collects all of them in at least `1 - 2 delta` of trials.
#[test]
fn coupon_calibration() {
    let (n, delta) = (5, 0.1);
    let m = coupon_trials_bound(n + 1, 1.0 / (n as f64 + 1.0), delta).unwrap();
    let mut complete = 0;
    for trial in 0..100u64 {
        let config = LearnerConfig {
            m,
            iterations: 12,
            ..LearnerConfig::practical(n, trial).unwrap()
        };
        let learned = learn_with_oracle(n, AffineFrame::identity(n), &config, |_, _| {
            ExactGradient::canonical(n + 1)
        })
        .unwrap();
        if learned.is_complete() {
            complete += 1;
        }
    }
    assert!(complete as f64 >= 100.0 * (1.0 - 2.0 * delta), "{complete}/100");
}

#[test]
fn sampled_learning_is_reproducible_and_reported() {
    let n = 2;
    let truth = isotropic_simplex(n).unwrap();
    let source = SimplexSampler::new(truth.clone(), 5);
    let config = LearnerConfig {
        t1: 20_000,
        t3: 20_000,
        m: 12,
        ..LearnerConfig::practical(n, 9).unwrap()
    };
    let a = learn_simplex(&source, &config).unwrap();
    let b = learn_simplex(&source, &config).unwrap();
    assert_eq!(a.report.vertices, b.report.vertices);
    assert_eq!(a.repetitions, b.repetitions);
    let mut learned = a;
    assert!(learned.is_complete());
    learned.score_against(&truth, 20_000, 1).unwrap();
    assert!(learned.report.max_match_error.unwrap() <= 0.1 * 8f64.sqrt());
    let json = serde_json::to_value(&learned.report).unwrap();
    for key in [
        "n",
        "config",
        "found_count",
        "vertices",
        "per_vertex_match_error",
        "tv_estimate",
        "wall_time_ms",
        "seed",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn shared_sample_reads_one_block() {
    let n = 2;
    let truth = isotropic_simplex(n).unwrap();
    let config = LearnerConfig {
        t1: 5_000,
        t3: 20_000,
        m: 12,
        shared_sample: true,
        ..LearnerConfig::practical(n, 3).unwrap()
    };
    let finite = sample_simplex(&truth, 25_000, 4).unwrap();
    let learned = learn_simplex(&finite, &config).unwrap();
    assert_eq!(learned.repetitions.len(), 12);
}

#[test]
fn incomplete_run_has_no_simplex() {
    let n = 4;
    let config = LearnerConfig {
        m: n + 1,
        iterations: 12,
        ..LearnerConfig::practical(n, 0).unwrap()
    };
    // With 5 repetitions and 5 vertices, some seed misses a vertex.
    let incomplete = (0..50u64)
        .map(|seed| {
            learn_with_oracle(
                n,
                AffineFrame::identity(n),
                &LearnerConfig { seed, ..config.clone() },
                |_, _| ExactGradient::canonical(n + 1),
            )
            .unwrap()
        })
        .find(|l| !l.is_complete())
        .expect("some run misses a vertex");
    assert!(incomplete.found_count < n + 1);
    assert!(incomplete.report.vertices.is_empty());
    assert!(!incomplete.report.complete());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dedup_keeps_only_separated_points(
        raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..40),
        radius in 0.05f64..1.4,
    ) {
        let points: Vec<DVector<f64>> = raw.into_iter().map(DVector::from_vec).collect();
        let clusters = deduplicate(&points, radius);
        for (i, a) in clusters.iter().enumerate() {
            for b in &clusters[i + 1..] {
                prop_assert!((&a.representative - &b.representative).norm() > radius);
            }
        }
        prop_assert_eq!(clusters.iter().map(|c| c.hits).sum::<usize>(), points.len());
        for p in &points {
            prop_assert!(clusters.iter().any(|c| (&c.representative - p).norm() <= radius));
        }
    }
}
