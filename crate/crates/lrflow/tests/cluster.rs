use lrflow::cluster::{
    convergence_check, log_partition, partition_bruteforce, synthetic_activity, ursell, ursell_bruteforce,
    weighted_tail, ClusterActivity,
};
use lrflow::geometry::{BlockLattice, Polymer};
use lrflow::jet::{derivative_identities_check, jet_exp, jet_log, Algebra, Jet};
use lrflow::LatticeSpec;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice(d: usize, l: u64, n: u32) -> BlockLattice {
    BlockLattice::new(&LatticeSpec::new(d, l, n, 1.0).unwrap(), 0).unwrap()
}

fn single(b: usize) -> Polymer {
    Polymer::new(0, vec![b])
}

/// Singletons and adjacent pairs on a ring, the pair {b, b+1} after {b}.
fn ring_polymers(lat: &BlockLattice) -> Vec<Polymer> {
    let k = lat.count();
    (0..k).flat_map(|b| [single(b), Polymer::new(0, vec![b, (b + 1) % k])]).collect()
}

fn random_jet(rng: &mut ChaCha8Rng, scale: f64) -> Jet {
    let c: Vec<f64> = (0..8).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    Jet::from_coefficients(&c).unwrap()
}

fn random_polymer(lat: &BlockLattice, rng: &mut ChaCha8Rng) -> Polymer {
    loop {
        let n = rng.random_range(1..=3);
        let x = Polymer::new(0, (0..n).map(|_| rng.random_range(0..lat.count())).collect());
        if lat.is_connected(&x) {
            return x;
        }
    }
}

fn touch_graph_connected(lat: &BlockLattice, xs: &[Polymer]) -> bool {
    let mut seen = vec![false; xs.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for k in 0..xs.len() {
            if !seen[k] && lat.touching(&xs[i], &xs[k]) {
                seen[k] = true;
                stack.push(k);
            }
        }
    }
    seen.iter().all(|s| *s)
}

#[test]
fn ursell_recursion_matches_graph_enumeration() {
    let lat = lattice(2, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..400 {
        let n = rng.random_range(1..=5);
        let xs: Vec<Polymer> = (0..n).map(|_| random_polymer(&lat, &mut rng)).collect();
        let (u, brute) = (ursell(&lat, &xs).unwrap(), ursell_bruteforce(&lat, &xs).unwrap());
        assert_eq!(u, brute, "{xs:?}");
        if !touch_graph_connected(&lat, &xs) {
            assert_eq!(u, 0.0);
        }
        // hard-core Ursell functions alternate in sign
        assert!(u * (-1f64).powi(n as i32 - 1) >= 0.0);
        let mut perm = xs.clone();
        perm.shuffle(&mut rng);
        assert_eq!(ursell(&lat, &perm).unwrap(), u);
    }
}

#[test]
fn ursell_examples() {
    let lat = lattice(1, 2, 3);
    let x = single(0);
    assert_eq!(ursell(&lat, &[x.clone()]).unwrap(), 1.0);
    assert_eq!(ursell(&lat, &[x.clone(), x.clone()]).unwrap(), -1.0);
    assert_eq!(ursell(&lat, &[x.clone(), x.clone(), x.clone()]).unwrap(), 2.0);
    assert_eq!(ursell(&lat, &[x.clone(), single(4)]).unwrap(), 0.0);
    let all_touch = vec![x.clone(); 8];
    assert_eq!(ursell(&lat, &all_touch).unwrap(), -5040.0);
    assert!(ursell(&lat, &vec![x; 9]).is_err());
}

#[test]
fn dense_torus_series_is_log_one_plus_total() {
    // on a 3 × 3 torus every pair of blocks touches, so z = 1 + Σ p
    let lat = lattice(2, 3, 1);
    let mut act = ClusterActivity::new(lat.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for b in 0..9 {
        act.insert(single(b), rng.random_range(0.0..0.02)).unwrap();
    }
    let total: f64 = act.iter().map(|(_, p)| *p).sum();
    assert!((partition_bruteforce(&act).unwrap() - (1.0 + total)).abs() < 1e-15);
    let series = log_partition(&act, 10).unwrap();
    assert!((series.value - total.ln_1p()).abs() < 2.0 * total.powi(11), "{} vs {}", series.value, total.ln_1p());
    for (n, o) in series.orders.iter().enumerate() {
        let want = -(-total).powi(n as i32 + 1) / (n + 1) as f64;
        assert!((o - want).abs() <= 1e-12 * want.abs(), "order {}", n + 1);
    }
}

#[test]
fn three_block_ring() {
    let lat = lattice(1, 3, 1);
    let mut act = ClusterActivity::new(lat);
    let p = 0.1;
    for b in 0..3 {
        act.insert(single(b), p).unwrap();
    }
    assert!((partition_bruteforce(&act).unwrap() - (1.0 + 3.0 * p)).abs() < 1e-15);
    let s = log_partition(&act, 3).unwrap();
    let want = [3.0 * p, -4.5 * p * p, 9.0 * p * p * p];
    for (o, w) in s.orders.iter().zip(want) {
        assert!((o - w).abs() < 1e-15);
    }
}

#[test]
fn series_is_additive_over_separated_supports() {
    let lat = lattice(1, 2, 4);
    let (mut left, mut right, mut both) =
        (ClusterActivity::new(lat.clone()), ClusterActivity::new(lat.clone()), ClusterActivity::new(lat.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for x in [single(0), single(1), Polymer::new(0, vec![0, 1])] {
        let v = random_jet(&mut rng, 0.05);
        left.insert(x.clone(), v).unwrap();
        both.insert(x, v).unwrap();
    }
    for x in [single(6), single(7), Polymer::new(0, vec![6, 7])] {
        let v = random_jet(&mut rng, 0.05);
        right.insert(x.clone(), v).unwrap();
        both.insert(x, v).unwrap();
    }
    let n = 8;
    let sum = log_partition(&left, n).unwrap().value + log_partition(&right, n).unwrap().value;
    let joint = log_partition(&both, n).unwrap().value;
    assert!((sum - joint).norm() < 1e-15);
}

fn ring_activity<A: Algebra>(seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> A) -> ClusterActivity<A> {
    let lat = lattice(1, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut act = ClusterActivity::new(lat.clone());
    for x in ring_polymers(&lat) {
        act.insert(x, draw(&mut rng)).unwrap();
    }
    act
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn scalar_series_matches_brute_force(seed in any::<u64>()) {
        let act = ring_activity(seed, |r| r.random_range(-0.05..0.05));
        let z = partition_bruteforce(&act).unwrap();
        let s = log_partition(&act, 6).unwrap();
        let err = (s.value - z.ln()).abs();
        prop_assert!(err <= 2.0 * s.tail_estimate + 1e-14, "{err} vs tail {}", s.tail_estimate);
    }

    #[test]
    fn jet_series_matches_brute_force(seed in any::<u64>()) {
        let act = ring_activity(seed, |r| random_jet(r, 0.05));
        let z = partition_bruteforce(&act).unwrap();
        let s = log_partition(&act, 6).unwrap();
        let err = (s.value - jet_log(z).unwrap()).norm();
        prop_assert!(err <= 2.0 * s.tail_estimate + 1e-14, "{err} vs tail {}", s.tail_estimate);
        prop_assert!((jet_exp(s.value) - z).norm() <= 2.0 * (err + 1e-14) * z.norm());
    }
}

#[test]
fn convergence_sums() {
    let lat = lattice(1, 2, 4);
    let zero = ClusterActivity::<f64>::new(lat.clone());
    let rep = convergence_check(&zero, 1.0);
    assert!(rep.per_block.iter().all(|v| *v == 0.0) && rep.within.iter().all(|w| *w));

    let s_bar: f64 = 0.05;
    let mut act = ClusterActivity::new(lat.clone());
    for b in 0..lat.count() {
        act.insert(single(b), s_bar.powi(3)).unwrap();
    }
    let rep = convergence_check(&act, 1.0);
    let want = 3.0 * s_bar.powi(3) * 1f64.exp();
    assert!(rep.per_block.iter().all(|v| (v - want).abs() < 1e-15));

    let synth = synthetic_activity(&lat, s_bar, 1.0, 0.5, 6).unwrap();
    let rep = convergence_check(&synth, 1.0);
    assert!(rep.within.iter().all(|w| *w));
    // one extra block costs e s̄^{a′} times the growth in the number of arcs
    for k in 2..rep.by_size.len() - 1 {
        let ratio = rep.by_size[k + 1] / rep.by_size[k];
        assert!(ratio <= 1.5 * 1f64.exp() * s_bar.sqrt(), "size {}: {ratio}", k + 1);
    }
}

#[test]
fn weighted_tail_stays_below_the_block_weight() {
    let lat = lattice(1, 2, 3);
    let act = synthetic_activity(&lat, 0.05, 1.0, 0.5, 3).unwrap();
    for x1 in [single(0), Polymer::new(0, vec![2, 3, 4])] {
        let t = weighted_tail(&act, &x1, 5).unwrap();
        assert!(t >= 1.0 && t <= (x1.len() as f64).exp(), "{x1:?}: {t}");
    }
    let empty = ClusterActivity::<f64>::new(lat);
    assert_eq!(weighted_tail(&empty, &single(0), 4).unwrap(), 1.0);
}

#[test]
fn jet_algebra_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (a, b, c) = (random_jet(&mut rng, 1.0), random_jet(&mut rng, 1.0), random_jet(&mut rng, 1.0));
        assert!((a * b - b * a).norm() < 1e-15);
        assert!(((a * b) * c - a * (b * c)).norm() < 1e-14);
        assert!((a * (b + c) - (a * b + a * c)).norm() < 1e-14);
        let back = jet_log(jet_exp(a)).unwrap();
        assert!((back - a).norm() < 1e-14 * a.norm().max(1.0), "{a:?}");
        assert!((jet_exp(a) * jet_exp(b) - jet_exp(a + b)).norm() < 1e-13 * jet_exp(a + b).norm());
    }
}

#[test]
fn derivative_identities() {
    for (g, nu, la, lb, vol) in [(0.2, 0.0, 0.5, 0.5, 10.0), (0.1, 0.3, 1.0, 1.0, 10.0), (0.04, -0.01, 0.9, 1.1, 64.0)] {
        let r = derivative_identities_check(g, nu, la, lb, vol);
        assert!(r.exact, "{r:?}");
        assert_eq!(r.d2, -nu * vol);
        assert_eq!((r.dsa, r.dsb), (la, lb));
        // σ_aσ_b only enters with φ̄², which is beyond the truncation
        assert_eq!(r.jet.c[4], 0.0);
    }
}
