//! The pipeline promises byte-identical output regardless of how the work
//! is scheduled. These tests run the same generation under differently
//! sized thread pools and compare every bit, then sanity-check the shape
//! of a small bound sweep.

use cone_sampler::{
    dot, generate_dataset, generate_reference_set, run_lb_sweep, GenerationConfig, IdentitySet,
    UnitVector,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

#[test]
fn dataset_bytes_do_not_depend_on_thread_count() {
    let set = generate_reference_set(24, 32, 0.5, 5).unwrap();
    let cfg = GenerationConfig {
        lower_bound: 0.6,
        samples_per_identity: 8,
        base_seed: 1337,
        dim: 32,
        observation_cone: 0.95,
    };
    let single = pool(1).install(|| generate_dataset(&set, &cfg).unwrap());
    let many = pool(8).install(|| generate_dataset(&set, &cfg).unwrap());
    assert_eq!(single.rows(), many.rows());
    assert_eq!(single.labels(), many.labels());
}

#[test]
fn nearest_neighbor_cache_does_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dim = 24;
    let rows: Vec<UnitVector> = (0..200)
        .map(|_| {
            let raw: Vec<f64> = (0..dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            UnitVector::new(raw).unwrap()
        })
        .collect();
    let single = pool(1).install(|| IdentitySet::from_vectors(rows.clone()).unwrap());
    let many = pool(7).install(|| IdentitySet::from_vectors(rows).unwrap());
    for i in 0..single.len() {
        assert_eq!(
            single.nearest_cosine(i).to_bits(),
            many.nearest_cosine(i).to_bits(),
            "nearest cosine of identity {i} differs between pools"
        );
    }
}

#[test]
fn sweep_reports_are_identical_across_thread_counts() {
    let set = generate_reference_set(10, 16, 0.5, 9).unwrap();
    let cfg = GenerationConfig {
        lower_bound: 0.8,
        samples_per_identity: 6,
        base_seed: 2024,
        dim: 16,
        observation_cone: 0.95,
    };
    let bounds = [0.9, 0.7, 0.5];
    let a = pool(1).install(|| run_lb_sweep(&set, &cfg, &bounds).unwrap());
    let b = pool(6).install(|| run_lb_sweep(&set, &cfg, &bounds).unwrap());
    assert_eq!(a.to_json_pretty().unwrap(), b.to_json_pretty().unwrap());
}

#[test]
fn every_sample_carries_its_generating_label() {
    let set = generate_reference_set(12, 16, 0.6, 3).unwrap();
    let cfg = GenerationConfig {
        lower_bound: 0.7,
        samples_per_identity: 10,
        base_seed: 8,
        dim: 16,
        observation_cone: 1.0,
    };
    let ds = generate_dataset(&set, &cfg).unwrap();
    // With no observation jitter every sample must sit inside its own
    // identity's tightened cone, hence closer to it than the base bound.
    for i in 0..ds.len() {
        let class = ds.label(i) as usize;
        let c = dot(ds.row(i), set.row(class));
        assert!(
            c >= 0.7 - 1e-9,
            "sample {i} has cosine {c} to its labeled reference"
        );
    }
}

#[test]
fn tightening_the_cone_does_not_hurt_separability_in_a_small_sweep() {
    let set = generate_reference_set(16, 24, 0.5, 77).unwrap();
    let cfg = GenerationConfig {
        lower_bound: 0.9,
        samples_per_identity: 12,
        base_seed: 1337,
        dim: 24,
        observation_cone: 0.95,
    };
    let sweep = run_lb_sweep(&set, &cfg, &[0.95, 0.5]).unwrap();
    let eer: Vec<f64> = sweep
        .entries
        .iter()
        .map(|e| e.report.metrics.eer.unwrap())
        .collect();
    assert!(
        eer[0] <= eer[1] + 1e-12,
        "EER at bound 0.95 ({}) exceeds EER at 0.5 ({})",
        eer[0],
        eer[1]
    );
    let gmean: Vec<f64> = sweep
        .entries
        .iter()
        .map(|e| e.report.metrics.genuine_mean.unwrap())
        .collect();
    assert!(
        gmean[0] > gmean[1],
        "genuine mean should fall as the cone widens"
    );
}
