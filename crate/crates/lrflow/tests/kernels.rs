use std::f64::consts::PI;

use lrflow::kernels::{
    fit_decay_exponent, greens_diagonal_tau, multiplier_lambda, resolvent, torus_frac_laplacian, zd_frac_laplacian,
    zd_resolvent, FitMode, FitSign,
};
use lrflow::{Error, KernelField, LatticeSpec, ZdQuadrature};
use proptest::prelude::*;

fn alpha_one_closed_form(x: f64) -> f64 {
    4.0 / (PI * (1.0 - 4.0 * x * x))
}

/// (1/2π) ∫_{−π}^{π} f(k) dk by the periodic trapezoid rule on `n` nodes.
fn trapezoid(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| f(-PI + i as f64 * h)).sum::<f64>() * h / (2.0 * PI)
}

fn delta(spec: &LatticeSpec) -> KernelField {
    let mut k = KernelField::zeros(spec).unwrap();
    k.values[0] = 1.0;
    k
}

#[test]
fn torus_kernel_alpha_one_is_the_periodised_closed_form() {
    let spec = LatticeSpec::new(1, 2, 6, 1.0).unwrap();
    let k = torus_frac_laplacian(&spec).unwrap();
    let m = spec.m as f64;
    for x in 0..spec.m as i64 {
        let periodised: f64 = (-100_000..=100_000).map(|z| alpha_one_closed_form(x as f64 + z as f64 * m)).sum();
        assert!((k.get(&[x]) - periodised).abs() < 1e-8, "x = {x}");
    }
}

#[test]
fn large_torus_alpha_one_values() {
    let spec = LatticeSpec::new(1, 2, 14, 1.0).unwrap();
    let k = torus_frac_laplacian(&spec).unwrap();
    for (x, v) in [(0, 4.0 / PI), (1, -4.0 / (3.0 * PI)), (2, -4.0 / (15.0 * PI))] {
        // the periodisation correction is of order 1/(π M²)
        assert!((k.on_axis(x) - v).abs() < 1e-7);
    }
}

#[test]
fn zd_kernel_matches_trapezoid_oracle() {
    let quad = ZdQuadrature::default();
    for alpha in [0.55, 1.0, 1.5] {
        for x in [0i64, 1, 5, 17] {
            let oracle = trapezoid(1 << 18, |k| multiplier_lambda(&[k]).powf(0.5 * alpha) * (k * x as f64).cos());
            let got = zd_frac_laplacian(&[x], alpha, &quad).unwrap();
            assert!((got - oracle).abs() < 1e-6, "α = {alpha}, x = {x}: {got} vs {oracle}");
        }
    }
    let v = zd_frac_laplacian(&[3], 1.0, &quad).unwrap();
    assert!((v + 4.0 / (35.0 * PI)).abs() < 1e-10);
    assert!((zd_frac_laplacian(&[0, 0], 2.0, &quad).unwrap() - 4.0).abs() < 1e-10);
}

#[test]
fn frac_laplacian_structure() {
    for alpha in [0.3, 0.55, 1.0, 1.5] {
        for spec in [LatticeSpec::new(1, 2, 8, alpha).unwrap(), LatticeSpec::new(2, 2, 4, alpha).unwrap()] {
            let k = torus_frac_laplacian(&spec).unwrap();
            let diag = k.at_origin();
            assert!(diag > 0.0);
            assert!(k.sum().abs() <= 1e-10 * diag, "row sum {}", k.sum());
            assert!(k.values[1..].iter().all(|v| *v <= 1e-14 * diag));
            assert!(k.symmetry_defect() <= 1e-13 * diag);
        }
    }
}

#[test]
fn resolvent_inverts_the_operator() {
    let spec = LatticeSpec::new(2, 2, 4, 0.55).unwrap();
    let k = torus_frac_laplacian(&spec).unwrap();
    for m2 in [1e-4, 1e-2, 1.0] {
        let c = resolvent(&spec, m2).unwrap();
        let mut op = k.clone();
        op.values[0] += m2;
        let id = op.convolve(&c).unwrap();
        let err = id.values.iter().zip(&delta(&spec).values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "m² = {m2}: {err}");
        assert!(c.values.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn massless_resolvent_inverts_on_mean_zero_functions() {
    let spec = LatticeSpec::new(1, 2, 8, 0.55).unwrap();
    let id = torus_frac_laplacian(&spec).unwrap().convolve(&resolvent(&spec, 0.0).unwrap()).unwrap();
    let mean = 1.0 / spec.m as f64;
    for (i, v) in id.values.iter().enumerate() {
        let want = if i == 0 { 1.0 - mean } else { -mean };
        assert!((v - want).abs() < 1e-10);
    }
}

#[test]
fn negative_mass_is_a_domain_error() {
    let spec = LatticeSpec::new(1, 2, 4, 0.55).unwrap();
    assert!(matches!(resolvent(&spec, -1e-3), Err(Error::Domain(_))));
    assert!(matches!(zd_resolvent(&[0], 0.55, -1.0, &ZdQuadrature::default()), Err(Error::Domain(_))));
}

#[test]
fn resolvent_follows_the_bound_shape() {
    let spec = LatticeSpec::new(1, 2, 14, 0.55).unwrap();
    let m2: f64 = 0.1;
    let c = resolvent(&spec, m2).unwrap();
    let ratios: Vec<f64> = (1..=(spec.m / 8) as i64)
        .map(|x| {
            let r = x as f64;
            c.on_axis(x) * r.powf(0.45) * (1.0 + m2 * m2 * r.powf(1.1))
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(lo > 0.0 && hi / lo < 10.0, "shape constant spread {lo}..{hi}");
}

/// (1/π)∫_0^π λ(k)^{−β} dk with the k^{−2β} singularity removed by k = π t^{1/(1−2β)}.
fn tau_oracle_1d(alpha: f64) -> f64 {
    let beta = 0.5 * alpha;
    let p = 1.0 / (1.0 - 2.0 * beta);
    let n = 200_000;
    let h = 1.0 / n as f64;
    let g = |t: f64| {
        if t == 0.0 {
            return PI.powf(1.0 - 2.0 * beta) * p;
        }
        let k = PI * t.powf(p);
        let smooth = (k * k / multiplier_lambda(&[k])).powf(beta);
        PI.powf(1.0 - 2.0 * beta) * p * smooth
    };
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    s * h / 3.0 / PI
}

#[test]
fn tau_matches_independent_oracles() {
    let quad = ZdQuadrature::default();
    let t = greens_diagonal_tau(1, 0.55, &quad).unwrap();
    assert!((t - tau_oracle_1d(0.55)).abs() < 1e-9, "{t}");
    let watson = greens_diagonal_tau(3, 2.0, &quad).unwrap();
    assert!((watson - 0.252_731_009_858_7).abs() < 1e-8, "{watson}");
}

#[test]
fn tau_grows_as_alpha_approaches_d() {
    let quad = ZdQuadrature::default();
    let vals: Vec<f64> = [0.5, 0.7, 0.9, 0.95].iter().map(|a| greens_diagonal_tau(1, *a, &quad).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
    assert!(greens_diagonal_tau(2, 2.0, &quad).is_err());
}

#[test]
fn decay_fit_examples() {
    let spec = LatticeSpec::new(1, 2, 16, 1.0).unwrap();
    let k = torus_frac_laplacian(&spec).unwrap();
    let fit = fit_decay_exponent(&k, (4.0, 256.0), FitSign::Negative, FitMode::Axis).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.01);
    assert!(fit.r_squared > 0.999 && fit.r_squared <= 1.0);

    let spec = LatticeSpec::new(2, 2, 7, 1.0).unwrap();
    let k = torus_frac_laplacian(&spec).unwrap();
    let shell = fit_decay_exponent(&k, (4.0, 24.0), FitSign::Negative, FitMode::Shell).unwrap();
    assert!((shell.slope + 3.0).abs() < 0.15, "{}", shell.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kernel_respects_torus_symmetries(alpha in 0.05f64..1.99, n in 2u32..4) {
        let spec = LatticeSpec::new(2, 2, n, alpha).unwrap();
        let k = torus_frac_laplacian(&spec).unwrap();
        prop_assert!(k.symmetry_defect() <= 1e-13 * k.at_origin());
        prop_assert!(k.sum().abs() <= 1e-10 * k.at_origin());
    }

    #[test]
    fn massive_resolvent_is_nonnegative(alpha in 0.1f64..1.9, m2 in 1e-4f64..10.0) {
        let spec = LatticeSpec::new(1, 2, 7, alpha).unwrap();
        let c = resolvent(&spec, m2).unwrap();
        prop_assert!(c.values.iter().all(|v| *v >= 0.0));
        prop_assert!((c.sum() - 1.0 / m2).abs() <= 1e-9 / m2);
    }
}
