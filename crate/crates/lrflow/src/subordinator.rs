//! Subordinated representation of the resolvent and its dyadic slicing.
//!
//! With β = α/2,
//!
//!   1/(λ^β + m²) = ∫_0^∞ u_m(s) e^{−sλ} ds,   u_m(s) = s^{β−1} E_{β,β}(−m² s^β),
//!
//! so every slice ∫_{s_{j−1}}^{s_j} u_m(s) e^{−sλ} ds is a positive mixture of
//! nearest-neighbour heat kernels, whose tails are Gaussian rather than power-law.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Default slice offset: s_j = θ L^{2j}.
pub const DEFAULT_THETA: f64 = 1.0 / 2048.0;

const SERIES_SWITCH: f64 = 0.5;

/// u_m(s) via the Mittag-Leffler power series; accurate for m² s^β ≤ 1/2.
pub fn mixing_density_series(s: f64, beta: f64, m2: f64) -> f64 {
    let z = m2 * s.powf(beta);
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 0..200 {
        let term = zk / gamma(beta * k as f64 + beta);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() && k > 2 {
            break;
        }
        zk *= -z;
    }
    s.powf(beta - 1.0) * sum
}

/// u_m(s) from its Stieltjes form ∫_0^∞ σ(r) e^{−rs} dr with
/// σ(r) = π^{−1} r^β sin βπ / (r^{2β} + 2m² r^β cos βπ + m⁴).
pub fn mixing_density_integral(s: f64, beta: f64, m2: f64) -> f64 {
    let (sb, cb) = (std::f64::consts::PI * beta).sin_cos();
    let h = 0.02;
    let (t_lo, t_hi) = (-60.0, 4.5);
    let steps = ((t_hi - t_lo) / h) as usize;
    let mut acc = 0.0;
    for i in 0..=steps {
        let t = t_lo + i as f64 * h;
        let rho = t.exp();
        let r = rho / s;
        let rb = r.powf(beta);
        let sigma = rb * sb / (std::f64::consts::PI * (rb * rb + 2.0 * m2 * rb * cb + m2 * m2));
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += w * sigma * (-rho).exp() * rho;
    }
    acc * h / s
}

/// u_m(s), choosing the series or the integral by the size of m² s^β.
pub fn mixing_density(s: f64, beta: f64, m2: f64) -> f64 {
    if m2 == 0.0 {
        return s.powf(beta - 1.0) / gamma(beta);
    }
    if m2 * s.powf(beta) <= SERIES_SWITCH {
        mixing_density_series(s, beta, m2)
    } else {
        mixing_density_integral(s, beta, m2)
    }
}

#[derive(Debug, Clone)]
struct SliceRule {
    s_lo: f64,
    s_hi: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// μ_k/k! for the analytic piece on [0, ε] of the first slice.
    moments: Vec<f64>,
}

/// Quadrature rules for the slices j = 1..=count with boundaries s_j = θL^{2j}, s_0 = 0.
#[derive(Debug, Clone)]
pub struct SliceSchedule {
    pub alpha: f64,
    pub m2: f64,
    pub l: f64,
    pub theta: f64,
    rules: Vec<SliceRule>,
}

impl SliceSchedule {
    /// `lambda_max` bounds λ(k) over the momenta that will be evaluated (4d).
    pub fn new(alpha: f64, m2: f64, l: f64, count: usize, theta: f64, lambda_max: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!("slicing needs alpha in (0, 2), got {alpha}")));
        }
        if !(m2 >= 0.0) || !(theta > 0.0) || !(l >= 2.0) {
            return Err(Error::domain("slicing needs m² ≥ 0, θ > 0 and L ≥ 2"));
        }
        let beta = 0.5 * alpha;
        let (gx, gw) = gauss_legendre(16);
        let mut rules = Vec::with_capacity(count);
        for j in 1..=count {
            let s_hi = theta * l.powi(2 * j as i32);
            let mut s_lo = if j == 1 { 0.0 } else { theta * l.powi(2 * (j as i32 - 1)) };
            let mut moments = Vec::new();
            if j == 1 {
                let mut eps = 1e-3 / lambda_max.max(1.0);
                if m2 > 0.0 {
                    eps = eps.min((SERIES_SWITCH / m2).powf(1.0 / beta));
                }
                eps = eps.min(s_hi);
                moments = first_slice_moments(eps, beta, m2);
                s_lo = eps;
            }
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            if s_hi > s_lo {
                let (v0, v1) = (s_lo.ln(), s_hi.ln());
                let panels = ((v1 - v0) / 0.5).ceil().max(1.0) as usize;
                let hp = (v1 - v0) / panels as f64;
                for p in 0..panels {
                    let a = v0 + p as f64 * hp;
                    for (x, w) in gx.iter().zip(&gw) {
                        let s = (a + 0.5 * hp * (x + 1.0)).exp();
                        nodes.push(s);
                        weights.push(0.5 * hp * w * s * mixing_density(s, beta, m2));
                    }
                }
            }
            let s_lo_report = if j == 1 { 0.0 } else { s_lo };
            rules.push(SliceRule { s_lo: s_lo_report, s_hi, nodes, weights, moments });
        }
        Ok(Self { alpha, m2, l, theta, rules })
    }

    pub fn count(&self) -> usize {
        self.rules.len()
    }

    /// (s_{j−1}, s_j) for slice j ≥ 1.
    pub fn bounds(&self, j: usize) -> (f64, f64) {
        let r = &self.rules[j - 1];
        (r.s_lo, r.s_hi)
    }

    /// Ĉ_j(λ) for 1 ≤ j ≤ count.
    pub fn eval(&self, j: usize, lambda: f64) -> f64 {
        let r = &self.rules[j - 1];
        let mut acc: f64 = r.nodes.iter().zip(&r.weights).map(|(s, w)| w * (-s * lambda).exp()).sum();
        if !r.moments.is_empty() {
            let mut p = 1.0;
            for mk in &r.moments {
                acc += mk * p;
                p *= -lambda;
            }
        }
        acc
    }

    /// Ĉ_1(λ), …, Ĉ_count(λ).
    pub fn eval_all(&self, lambda: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.rules.len()) {
            *o = self.eval(j + 1, lambda);
        }
    }
}

/// μ_k/k! with μ_k = ∫_0^ε u_m(s) s^k ds, from the termwise-integrated series.
fn first_slice_moments(eps: f64, beta: f64, m2: f64) -> Vec<f64> {
    let kmax = 12;
    let mut out = Vec::with_capacity(kmax);
    let mut fact = 1.0;
    for k in 0..kmax {
        if k > 0 {
            fact *= k as f64;
        }
        let mut sum = 0.0;
        let mut coef = 1.0;
        for i in 0..200 {
            let p = beta * (i + 1) as f64;
            let term = coef * eps.powf(p + k as f64) / (gamma(p) * (p + k as f64));
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() && i > 1 {
                break;
            }
            coef *= -m2;
            if m2 == 0.0 {
                break;
            }
        }
        out.push(sum / fact);
    }
    out
}
