//! Fractional Laplacian kernels, resolvents and decay fits on tori and on ℤ^d.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{power_law_fit, LinearFit};
use crate::fourier;
use crate::lattice::{KernelField, LatticeSpec};
use crate::quad::{Core, ZdQuadrature};

/// λ(k) = 4 Σ_j sin²(k_j/2).
pub fn multiplier_lambda(k: &[f64]) -> f64 {
    k.iter()
        .map(|&kj| {
            let s = (0.5 * kj).sin();
            4.0 * s * s
        })
        .sum()
}

/// Kernel with Fourier multiplier λ(k)^{α/2} on the torus.
///
/// At α = 2 the multiplier is a trigonometric polynomial and the kernel is written down
/// as the nearest-neighbour stencil, so the zeros are exact.
pub fn torus_frac_laplacian(spec: &LatticeSpec) -> Result<KernelField> {
    if spec.alpha == 2.0 {
        let mut k = KernelField::zeros(spec)?;
        k.values[0] = 2.0 * spec.d as f64;
        for axis in 0..spec.d {
            for step in [-1i64, 1] {
                let mut x = vec![0i64; spec.d];
                x[axis] = step;
                k.values[spec.index(&x)] -= 1.0;
            }
        }
        return Ok(k);
    }
    let lam = fourier::torus_lambda(spec)?;
    let half = 0.5 * spec.alpha;
    let mult: Vec<f64> = lam.par_iter().map(|&l| l.powf(half)).collect();
    let values = fourier::inverse(spec, &mult)?;
    Ok(KernelField { spec: spec.clone(), values })
}

/// Torus resolvent ((−Δ)^{α/2} + m²)^{−1}; at m² = 0 the zero mode is dropped.
pub fn resolvent(spec: &LatticeSpec, m2: f64) -> Result<KernelField> {
    if !(m2 >= 0.0) {
        return Err(Error::domain(format!("mass parameter m² = {m2} is negative")));
    }
    let lam = fourier::torus_lambda(spec)?;
    let half = 0.5 * spec.alpha;
    let mult: Vec<f64> = lam
        .par_iter()
        .enumerate()
        .map(|(i, &l)| if i == 0 && m2 == 0.0 { 0.0 } else { 1.0 / (l.powf(half) + m2) })
        .collect();
    let values = fourier::inverse(spec, &mult)?;
    Ok(KernelField { spec: spec.clone(), values })
}

fn k_floor_for(x: &[i64]) -> f64 {
    let r = x.iter().map(|c| (*c as f64).abs()).fold(0.0f64, f64::max);
    1.0 / (1.0 + r)
}

fn cos_factor(k: &[f64], x: &[i64]) -> f64 {
    k.iter().zip(x).map(|(kj, xj)| (kj * *xj as f64).cos()).product()
}

/// ℤ^d fractional Laplacian entry (−Δ)^{α/2}_{0,x}.
pub fn zd_frac_laplacian(x: &[i64], alpha: f64, quad: &ZdQuadrature) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha = {alpha} outside (0, 2]")));
    }
    let d = x.len();
    let osc: Vec<f64> = x.iter().map(|c| *c as f64).collect();
    let v = quad.integrate(d, 1, &osc, k_floor_for(x), &[Core::Regular], |k, out| {
        out[0] = multiplier_lambda(k).powf(0.5 * alpha) * cos_factor(k, x);
    })?;
    Ok(v[0])
}

/// ℤ^d resolvent entry ((−Δ)^{α/2} + m²)^{−1}_{0,x}; m² = 0 requires α < d.
pub fn zd_resolvent(x: &[i64], alpha: f64, m2: f64, quad: &ZdQuadrature) -> Result<f64> {
    let d = x.len();
    if !(m2 >= 0.0) {
        return Err(Error::domain(format!("mass parameter m² = {m2} is negative")));
    }
    if m2 == 0.0 && alpha >= d as f64 {
        return Err(Error::domain("massless ℤ^d Green function needs alpha < d"));
    }
    let osc: Vec<f64> = x.iter().map(|c| *c as f64).collect();
    let (core, floor) = if m2 == 0.0 {
        (Core::Homogeneous(-alpha), k_floor_for(x))
    } else {
        // the multiplier saturates at |k| ~ m^{2/α}
        (Core::Regular, k_floor_for(x).min(m2.powf(1.0 / alpha)))
    };
    let v = quad.integrate(d, 1, &osc, floor, &[core], |k, out| {
        out[0] = cos_factor(k, x) / (multiplier_lambda(k).powf(0.5 * alpha) + m2);
    })?;
    Ok(v[0])
}

/// τ = ∫ λ(k)^{−α/2} dk/(2π)^d, the diagonal of the ℤ^d Green function.
pub fn greens_diagonal_tau(d: usize, alpha: f64, quad: &ZdQuadrature) -> Result<f64> {
    if d == 0 || !(alpha > 0.0) {
        return Err(Error::domain("need d ≥ 1 and alpha > 0"));
    }
    if alpha >= d as f64 {
        return Err(Error::domain(format!("τ diverges for alpha = {alpha} ≥ d = {d}")));
    }
    zd_resolvent(&vec![0; d], alpha, 0.0, quad)
}

/// Massless torus Green function shifted by the constant τ − G(0), which restores
/// the ℤ^d normalisation removed by zero-mode exclusion.
pub fn massless_green_shifted(spec: &LatticeSpec, quad: &ZdQuadrature) -> Result<KernelField> {
    let mut g = resolvent(spec, 0.0)?;
    let tau = greens_diagonal_tau(spec.d, spec.alpha, quad)?;
    let shift = tau - g.at_origin();
    g.values.iter_mut().for_each(|v| *v += shift);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Axis,
    Shell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Log-log least squares of |value| against |x| over a radial window.
pub fn fit_decay_exponent(kernel: &KernelField, window: (f64, f64), sign: FitSign, mode: FitMode) -> Result<DecayFit> {
    let spec = &kernel.spec;
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo && hi < spec.m as f64 / 2.0) {
        return Err(Error::Fit(format!("window [{lo}, {hi}] not inside (0, M/2)")));
    }
    let s = match sign {
        FitSign::Positive => 1.0,
        FitSign::Negative => -1.0,
    };
    let mut rs = Vec::new();
    let mut vs = Vec::new();
    match mode {
        FitMode::Axis => {
            let mut r = lo.ceil() as i64;
            while (r as f64) <= hi {
                rs.push(r as f64);
                vs.push(s * kernel.on_axis(r));
                r += 1;
            }
        }
        FitMode::Shell => {
            let first = lo.floor() as usize;
            let last = hi.floor() as usize;
            let mut sum = vec![0.0; last - first + 1];
            let mut cnt = vec![0usize; last - first + 1];
            for (idx, v) in kernel.values.iter().enumerate() {
                let r = spec.torus_dist2_index(idx).sqrt();
                if r >= lo && r < hi + 1.0 {
                    let b = r.floor() as usize;
                    if b >= first && b <= last {
                        sum[b - first] += v;
                        cnt[b - first] += 1;
                    }
                }
            }
            for (i, (s_, c)) in sum.iter().zip(&cnt).enumerate() {
                if *c > 0 {
                    rs.push((first + i) as f64);
                    vs.push(s * s_ / *c as f64);
                }
            }
        }
    }
    if let Some(bad) = vs.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Fit(format!("value at r = {} is zero or of the wrong sign", rs[bad])));
    }
    let LinearFit { slope, intercept, r_squared } = power_law_fit(&rs, &vs)?;
    Ok(DecayFit { slope, intercept, r_squared, window })
}
