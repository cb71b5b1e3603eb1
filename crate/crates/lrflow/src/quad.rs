//! Gauss-Legendre rules and a dyadic-annulus integrator for Brillouin-zone integrals.
//!
//! Integrals over [−π, π]^d of integrands even in every k_j reduce to π^{−d} times an
//! integral over [0, π]^d. That cube is cut into shells [0, π2^{−i}]^d \ [0, π2^{−i−1}]^d,
//! each shell into 2^d − 1 boxes, and every box gets a tensor Gauss-Legendre rule.
//! The innermost cube is closed analytically, either as a regular value times its volume
//! or as the geometric tail of a homogeneous integrand.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on [a, b] with equal panels.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Behaviour of an integrand component inside the innermost cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Core {
    /// Bounded near k = 0; closed as midpoint value times volume.
    Regular,
    /// Homogeneous of degree p near k = 0 (p > −d).
    Homogeneous(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZdQuadrature {
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    /// Relative agreement required between successive panel doublings.
    pub rel_tol: f64,
    /// Absolute agreement that is always accepted.
    pub abs_tol: f64,
    pub max_doublings: u32,
    /// Dyadic levels below the smallest physical momentum scale.
    pub extra_levels: u32,
}

impl Default for ZdQuadrature {
    fn default() -> Self {
        Self { order: 16, rel_tol: 1e-10, abs_tol: 1e-15, max_doublings: 5, extra_levels: 16 }
    }
}

impl ZdQuadrature {
    fn levels(&self, k_floor: f64) -> usize {
        let base = (std::f64::consts::PI / k_floor.min(1.0)).log2().ceil().max(0.0) as usize;
        base + self.extra_levels as usize
    }

    /// One pass at a fixed panel multiplier. Returns the full integral and the
    /// contribution of the deepest shell per component.
    fn pass<F>(&self, d: usize, out: usize, levels: usize, osc: &[f64], base: usize, cores: &[Core], f: &F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let (gx, gw) = gauss_legendre(self.order);
        let per_level: Vec<Vec<f64>> = (0..levels)
            .into_par_iter()
            .map(|lvl| {
                let h = std::f64::consts::PI * 0.5f64.powi(lvl as i32);
                let half = 0.5 * h;
                let mut acc = vec![0.0; out];
                let mut tmp = vec![0.0; out];
                for mask in 1usize..(1 << d) {
                    let mut axes: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(d);
                    for j in 0..d {
                        let (a, b) = if mask >> j & 1 == 1 { (half, h) } else { (0.0, half) };
                        let width = b - a;
                        let xj = osc.get(j).copied().unwrap_or(0.0).abs();
                        let panels = base * (1 + (width * xj / std::f64::consts::PI).ceil() as usize);
                        let hp = width / panels as f64;
                        let mut nodes = Vec::with_capacity(panels * gx.len());
                        let mut wts = Vec::with_capacity(panels * gx.len());
                        for p in 0..panels {
                            let lo = a + p as f64 * hp;
                            for (x, w) in gx.iter().zip(&gw) {
                                nodes.push(lo + 0.5 * hp * (x + 1.0));
                                wts.push(0.5 * hp * w);
                            }
                        }
                        axes.push((nodes, wts));
                    }
                    let counts: Vec<usize> = axes.iter().map(|a| a.0.len()).collect();
                    let total: usize = counts.iter().product();
                    let mut k = vec![0.0; d];
                    for flat in 0..total {
                        let mut rem = flat;
                        let mut w = 1.0;
                        for j in (0..d).rev() {
                            let i = rem % counts[j];
                            rem /= counts[j];
                            k[j] = axes[j].0[i];
                            w *= axes[j].1[i];
                        }
                        f(&k, &mut tmp);
                        for (a, t) in acc.iter_mut().zip(&tmp) {
                            *a += w * t;
                        }
                    }
                }
                acc
            })
            .collect();

        let mut total = vec![0.0; out];
        for lvl in per_level.iter() {
            for (t, v) in total.iter_mut().zip(lvl) {
                *t += v;
            }
        }
        // innermost cube
        let h_min = std::f64::consts::PI * 0.5f64.powi(levels as i32);
        let mid = vec![0.5 * h_min; d];
        let mut at_mid = vec![0.0; out];
        f(&mid, &mut at_mid);
        let deepest = per_level.last().cloned().unwrap_or_else(|| vec![0.0; out]);
        for c in 0..out {
            total[c] += match cores[c] {
                Core::Regular => at_mid[c] * h_min.powi(d as i32),
                Core::Homogeneous(p) => {
                    let r = 0.5f64.powf(d as f64 + p);
                    deepest[c] * r / (1.0 - r)
                }
            };
        }
        let norm = std::f64::consts::PI.powi(-(d as i32));
        total.iter_mut().for_each(|t| *t *= norm);
        total
    }

    /// π^{−d} ∫_{[0,π]^d} f(k) dk for a vector-valued integrand.
    ///
    /// `osc` holds the largest frequency per axis carried by the integrand (|x_j| for a
    /// cos(k·x) factor) and `k_floor` the smallest momentum scale where f still varies.
    pub fn integrate<F>(&self, d: usize, out: usize, osc: &[f64], k_floor: f64, cores: &[Core], f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        if cores.len() != out {
            return Err(Error::domain("one core model per integrand component is required"));
        }
        for c in cores {
            if let Core::Homogeneous(p) = c {
                if d as f64 + p <= 0.0 {
                    return Err(Error::domain("integrand is not integrable at k = 0"));
                }
            }
        }
        let levels = self.levels(k_floor);
        let mut prev = self.pass(d, out, levels, osc, 1, cores, &f);
        let mut base = 1;
        for _ in 0..self.max_doublings {
            base *= 2;
            let next = self.pass(d, out, levels, osc, base, cores, &f);
            let ok = prev
                .iter()
                .zip(&next)
                .all(|(a, b)| (a - b).abs() <= self.abs_tol + self.rel_tol * b.abs());
            if ok {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::numerical(format!(
            "Brillouin-zone quadrature did not converge after {} panel doublings",
            self.max_doublings
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        for p in 0..32u32 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {p}: {s} vs {exact}");
        }
    }

    #[test]
    fn odd_orders_include_the_midpoint() {
        let (x, w) = gauss_legendre(5);
        assert!(x[2].abs() < 1e-15);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn regular_integrand_with_oscillation() {
        // π^{-1} ∫_0^π cos(kx) dk = 0 for integer x ≠ 0, and 1 at x = 0.
        let q = ZdQuadrature::default();
        for x in [0.0, 1.0, 7.0, 100.0] {
            let v = q
                .integrate(1, 1, &[x], 1.0, &[Core::Regular], |k, out| out[0] = (k[0] * x).cos())
                .unwrap()[0];
            let exact = if x == 0.0 { 1.0 } else { 0.0 };
            assert!((v - exact).abs() < 1e-12, "x = {x}: {v}");
        }
    }

    #[test]
    fn homogeneous_core_closure() {
        // π^{-1} ∫_0^π k^{-1/2} dk = 2/√π.
        let q = ZdQuadrature::default();
        let v = q
            .integrate(1, 1, &[0.0], 1.0, &[Core::Homogeneous(-0.5)], |k, out| out[0] = k[0].powf(-0.5))
            .unwrap()[0];
        assert_relative_eq!(v, 2.0 / std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn two_dimensional_product() {
        // π^{-2} ∫∫ cos(k1) cos(k2) k1^0 ... = 0, and ∫∫ 1 = 1.
        let q = ZdQuadrature::default();
        let v = q
            .integrate(2, 2, &[1.0, 1.0], 1.0, &[Core::Regular, Core::Regular], |k, out| {
                out[0] = 1.0;
                out[1] = (k[0] * k[0] + k[1] * k[1]).exp();
            })
            .unwrap();
        assert_relative_eq!(v[0], 1.0, max_relative = 1e-13);
        // ∫_0^π e^{k²} dk squared, by a fine 1d rule
        let (n, w) = composite_rule(0.0, std::f64::consts::PI, 64, 16);
        let one: f64 = n.iter().zip(&w).map(|(k, w)| w * (k * k).exp()).sum();
        assert_relative_eq!(v[1], one * one / std::f64::consts::PI.powi(2), max_relative = 1e-11);
    }
}
