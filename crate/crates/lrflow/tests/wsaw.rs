use std::collections::HashSet;

use lrflow::kernels::resolvent;
use lrflow::wsaw::{
    self_intersection_time, susceptibility_estimate, transition_kernel, two_point_estimate, two_point_profile,
    McConfig, WalkSampler,
};
use lrflow::{Error, KernelField, LatticeSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(spec: &LatticeSpec, g: f64, nu: f64, samples: usize, seed: u64) -> McConfig {
    McConfig::new(spec.clone(), g, nu, samples, seed)
}

#[test]
fn jump_distribution_matches_the_alpha_one_weights() {
    let spec = LatticeSpec::new(1, 2, 12, 1.0).unwrap();
    let sampler = WalkSampler::new(&spec).unwrap();
    let m = spec.m as usize;
    // P(|jump| = r) = 2/(4r² − 1), which telescopes to a tail of 1/(2R + 1)
    let bins = 8;
    let mut expected: Vec<f64> = (1..=bins).map(|r| 2.0 / (4.0 * (r * r) as f64 - 1.0)).collect();
    expected.push(1.0 / (2 * bins + 1) as f64);
    let n = 200_000;
    let mut counts = vec![0usize; bins + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..n {
        let y = sampler.sample_jump(&mut rng);
        assert_ne!(y, 0);
        let r = y.min(m - y);
        counts[(r - 1).min(bins)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 8 degrees of freedom, p ≈ 2e-4
    assert!(chi2 < 30.0, "χ² = {chi2}, counts {counts:?}");
    assert!((sampler.rate - 4.0 / std::f64::consts::PI).abs() < 1e-6);
    let total: f64 = sampler.jump_probabilities.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn walk_marginals_match_the_transition_kernel() {
    let spec = LatticeSpec::new(1, 2, 6, 0.8).unwrap();
    let sampler = WalkSampler::new(&spec).unwrap();
    let t = 0.7;
    let kernel = transition_kernel(&spec, t).unwrap();
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut hits = vec![0usize; spec.m as usize];
    for _ in 0..n {
        hits[sampler.sample_walk(t, 0, &mut rng).end()] += 1;
    }
    for x in [0i64, 1, -1, 3] {
        let p = kernel.get(&[x]);
        let freq = hits[spec.index(&[x])] as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "x = {x}: {freq} vs {p} ± {se}");
    }
    assert!((kernel.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn free_walk_two_point_is_the_resolvent() {
    let spec = LatticeSpec::new(1, 2, 6, 0.55).unwrap();
    let nu = 0.5;
    let c = resolvent(&spec, nu).unwrap();
    let cfg = config(&spec, 0.0, nu, 50_000, 33);
    let sampler = WalkSampler::new(&spec).unwrap();
    let ends: Vec<Vec<i64>> = [0i64, 1, 4].iter().map(|x| vec![*x]).collect();
    let prof = two_point_profile(&cfg, &sampler, &[0], &ends).unwrap();
    for (b, est) in ends.iter().zip(&prof.estimates) {
        let want = c.get(b);
        assert!((est.mean - want).abs() < 3.0 * est.stderr, "b = {b:?}: {} ± {} vs {want}", est.mean, est.stderr);
    }
    assert!((prof.susceptibility.mean - 1.0 / nu).abs() < 1e-12);
    assert_eq!(prof.susceptibility.stderr, 0.0);
}

#[test]
fn estimates_are_reproducible_across_thread_counts() {
    let spec = LatticeSpec::new(2, 2, 4, 1.2).unwrap();
    let cfg = config(&spec, 0.1, 0.4, 5000, 34);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| two_point_estimate(&cfg, &[0, 0], &[1, 2]).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
    let other = two_point_estimate(&McConfig { seed: 35, ..cfg.clone() }, &[0, 0], &[1, 2]).unwrap();
    assert_ne!(one.mean, other.mean);
}

#[test]
fn interaction_suppresses_walks_path_by_path() {
    let spec = LatticeSpec::new(1, 2, 8, 0.55).unwrap();
    let mut last = f64::INFINITY;
    for g in [0.0, 0.01, 0.1, 1.0] {
        let chi = susceptibility_estimate(&config(&spec, g, 0.3, 4000, 36)).unwrap();
        assert!(chi.mean <= last);
        last = chi.mean;
    }
    assert!(last < 1.0 / 0.3);
}

#[test]
fn self_intersection_is_at_least_t_squared_over_range() {
    let spec = LatticeSpec::new(2, 2, 3, 0.9).unwrap();
    let sampler = WalkSampler::new(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for k in 0..500 {
        let t = 0.05 * (k % 60) as f64 + 0.01;
        let path = sampler.sample_walk(t, 5, &mut rng);
        let distinct: HashSet<usize> = path.positions.iter().copied().collect();
        let i = self_intersection_time(&path);
        assert!(i >= t * t / distinct.len() as f64 * (1.0 - 1e-12));
        assert!(i <= t * t * (1.0 + 1e-12));
        assert!(path.times.windows(2).all(|w| w[0] < w[1]) && path.times.iter().all(|s| *s <= t));
    }
}

#[test]
fn invalid_inputs() {
    let spec = LatticeSpec::new(1, 2, 4, 1.0).unwrap();
    let mut bad = KernelField::zeros(&spec).unwrap();
    bad.values[0] = 1.0;
    bad.values[1] = 0.5;
    assert!(matches!(WalkSampler::from_kernel(&bad), Err(Error::Construction(_))));
    let empty = KernelField::zeros(&spec).unwrap();
    assert!(matches!(WalkSampler::from_kernel(&empty), Err(Error::Construction(_))));
    assert!(matches!(susceptibility_estimate(&config(&spec, 0.1, 0.0, 100, 1)), Err(Error::Domain(_))));
    assert!(matches!(susceptibility_estimate(&config(&spec, -0.1, 1.0, 100, 1)), Err(Error::Domain(_))));
    let with_rate = |g, nu, r| McConfig { horizon_rate: Some(r), ..config(&spec, g, nu, 100, 1) };
    assert!(matches!(susceptibility_estimate(&with_rate(0.0, -0.1, 0.5)), Err(Error::Domain(_))));
    assert!(matches!(susceptibility_estimate(&with_rate(0.1, 0.5, 0.0)), Err(Error::Domain(_))));
    assert!(susceptibility_estimate(&with_rate(0.1, -0.1, 0.5)).is_ok());
}

#[test]
fn reweighted_horizon_is_unbiased() {
    let spec = LatticeSpec::new(1, 2, 8, 0.55).unwrap();
    // g = 0: the susceptibility is 1/ν whatever the proposal rate
    let free = McConfig { horizon_rate: Some(0.7), ..config(&spec, 0.0, 0.5, 40_000, 40) };
    let chi = susceptibility_estimate(&free).unwrap();
    assert!(((chi.mean - 2.0) / chi.stderr).abs() <= 4.0, "{chi:?}");
    // g > 0: agrees with the plain estimator at the same ν
    let plain = config(&spec, 0.2, 0.3, 40_000, 41);
    let tilted = McConfig { horizon_rate: Some(0.2), seed: 42, ..plain.clone() };
    for b in [[0i64], [3]] {
        let x = two_point_estimate(&plain, &[0], &b).unwrap();
        let y = two_point_estimate(&tilted, &[0], &b).unwrap();
        assert!((x.mean - y.mean).abs() <= 4.0 * x.stderr.hypot(y.stderr), "{x:?} {y:?}");
    }
}
