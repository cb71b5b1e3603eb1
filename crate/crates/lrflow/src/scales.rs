//! Per-scale covariance data consumed by the RG flow, from a torus decomposition or
//! directly on ℤ^d.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::decomposition::CovarianceDecomposition;
use crate::error::{Error, Result};
use crate::kernels::{multiplier_lambda, zd_resolvent};
use crate::quad::{Core, ZdQuadrature};
use crate::subordinator::{SliceSchedule, DEFAULT_THETA};

/// Covariance bookkeeping for scales 1..=N, with slice N the infrared remainder.
pub trait ScaleData: Sync {
    fn depth(&self) -> usize;
    fn d(&self) -> usize;
    fn alpha(&self) -> f64;
    fn lf(&self) -> f64;
    fn m2(&self) -> f64;
    /// C_{j;0,0}, 1 ≤ j ≤ N.
    fn c_diag(&self, j: usize) -> f64;
    /// Σ_x C_{j+1;0,x}(w_{j+1;0,x} + w_{j;0,x}), 0 ≤ j ≤ N − 2.
    fn bubble(&self, j: usize) -> f64;
    /// w_j⁽¹⁾, 0 ≤ j ≤ N.
    fn w1(&self, j: usize) -> f64;
    /// C_{j;0,x}, 1 ≤ j ≤ N.
    fn c_at(&self, j: usize, x: &[i64]) -> Result<f64>;
    /// Resolvent entry at the same mass, the telescoped sum of all slices.
    fn resolvent_at(&self, x: &[i64]) -> Result<f64>;

    fn epsilon(&self) -> f64 {
        2.0 * self.alpha() - self.d() as f64
    }

    /// w_{j;0,x} = Σ_{i ≤ j} C_{i;0,x}.
    fn w_at(&self, j: usize, x: &[i64]) -> Result<f64> {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += self.c_at(i, x)?;
        }
        Ok(acc)
    }
}

fn euclid2(x: &[i64]) -> f64 {
    x.iter().map(|c| (*c as f64) * (*c as f64)).sum()
}

impl ScaleData for CovarianceDecomposition {
    fn depth(&self) -> usize {
        self.slices.len()
    }
    fn d(&self) -> usize {
        self.spec.d
    }
    fn alpha(&self) -> f64 {
        self.spec.alpha
    }
    fn lf(&self) -> f64 {
        self.spec.lf()
    }
    fn m2(&self) -> f64 {
        self.m2
    }
    fn c_diag(&self, j: usize) -> f64 {
        self.slice(j).at_origin()
    }
    fn bubble(&self, j: usize) -> f64 {
        let c = &self.slices[j];
        let (w1, w0) = (&self.partials[j + 1], &self.partials[j]);
        c.values.iter().zip(&w1.values).zip(&w0.values).map(|((c, a), b)| c * (a + b)).sum()
    }
    fn w1(&self, j: usize) -> f64 {
        self.w1[j]
    }
    fn c_at(&self, j: usize, x: &[i64]) -> Result<f64> {
        if j == 0 || j > self.slices.len() {
            return Err(Error::domain(format!("scale {j} outside 1..={}", self.slices.len())));
        }
        Ok(self.slice(j).get(x))
    }
    fn resolvent_at(&self, x: &[i64]) -> Result<f64> {
        Ok(self.resolvent.get(x))
    }
}

/// Infinite-volume scale data: the subordinated slices integrated over the Brillouin
/// zone of ℤ^d. Slices j < N obey the range rule C_{j;0,x} = 0 for |x| ≥ ½L^j; the
/// last slice is the ℤ^d resolvent minus the others.
#[derive(Debug)]
pub struct LatticeScales {
    d: usize,
    alpha: f64,
    l: f64,
    n: usize,
    m2: f64,
    quad: ZdQuadrature,
    schedule: SliceSchedule,
    diag: Vec<f64>,
    bubbles: Vec<f64>,
    w1: Vec<f64>,
    resolvent_origin: f64,
    cross: Mutex<HashMap<Vec<i64>, Vec<f64>>>,
}

impl LatticeScales {
    pub fn new(d: usize, alpha: f64, l: u64, n: usize, m2: f64) -> Result<Self> {
        Self::with_settings(d, alpha, l, n, m2, DEFAULT_THETA, ZdQuadrature::default())
    }

    pub fn with_settings(d: usize, alpha: f64, l: u64, n: usize, m2: f64, theta: f64, quad: ZdQuadrature) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("lattice scale data needs N ≥ 2"));
        }
        if !(1..=4).contains(&d) || l < 2 {
            return Err(Error::domain("need 1 ≤ d ≤ 4 and L ≥ 2"));
        }
        if !(m2 >= 0.0) {
            return Err(Error::domain(format!("mass parameter m² = {m2} is negative")));
        }
        if m2 == 0.0 && alpha >= d as f64 {
            return Err(Error::domain("massless infinite-volume data needs alpha < d"));
        }
        let lf = l as f64;
        let truncated = n - 1;
        let schedule = SliceSchedule::new(alpha, m2, lf, truncated, theta, 4.0 * d as f64)?;
        let s_top = schedule.bounds(truncated).1;
        let k_floor = 1.0 / s_top.sqrt();

        // components: C_{j;00} for j < N, then bubbles for j = 0..N−2
        let comps = 2 * truncated;
        let sched = &schedule;
        let vals = quad.integrate(d, comps, &vec![0.0; d], k_floor, &vec![Core::Regular; comps], |k, out| {
            let lam = multiplier_lambda(k);
            let (cs, bs) = out.split_at_mut(truncated);
            sched.eval_all(lam, cs);
            let mut w_prev = 0.0;
            for j in 0..truncated {
                let w_next = w_prev + cs[j];
                bs[j] = cs[j] * (w_next + w_prev);
                w_prev = w_next;
            }
        })?;
        let resolvent_origin = zd_resolvent(&vec![0; d], alpha, m2, &quad)?;
        let mut diag: Vec<f64> = vals[..truncated].to_vec();
        let last = resolvent_origin - diag.iter().sum::<f64>();
        diag.push(last);
        let bubbles = vals[truncated..].to_vec();
        let mut w1 = vec![0.0];
        for j in 1..=truncated {
            w1.push(w1[j - 1] + schedule.eval(j, 0.0));
        }
        w1.push(if m2 > 0.0 { 1.0 / m2 } else { f64::INFINITY });
        Ok(Self {
            d,
            alpha,
            l: lf,
            n,
            m2,
            quad,
            schedule,
            diag,
            bubbles,
            w1,
            resolvent_origin,
            cross: Mutex::new(HashMap::new()),
        })
    }

    pub fn schedule(&self) -> &SliceSchedule {
        &self.schedule
    }

    /// C_{1;0,x}, …, C_{N;0,x} with the range rule applied.
    pub fn profile(&self, x: &[i64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::domain("displacement has the wrong dimension"));
        }
        if x.iter().all(|c| *c == 0) {
            return Ok(self.diag.clone());
        }
        if let Some(v) = self.cross.lock().unwrap().get(x) {
            return Ok(v.clone());
        }
        let truncated = self.n - 1;
        let r2 = euclid2(x);
        let active: Vec<usize> = (1..=truncated).filter(|&j| r2 < (0.5 * self.l.powi(j as i32)).powi(2)).collect();
        let osc: Vec<f64> = x.iter().map(|c| *c as f64).collect();
        let s_top = self.schedule.bounds(truncated).1;
        let rmax = x.iter().map(|c| (*c as f64).abs()).fold(0.0f64, f64::max);
        let k_floor = (1.0 / s_top.sqrt()).min(1.0 / (1.0 + rmax));
        let sched = &self.schedule;
        let mut out = vec![0.0; self.n];
        if !active.is_empty() {
            let vals = self.quad.integrate(self.d, active.len(), &osc, k_floor, &vec![Core::Regular; active.len()], |k, o| {
                let lam = multiplier_lambda(k);
                let c: f64 = k.iter().zip(x).map(|(kj, xj)| (kj * *xj as f64).cos()).product();
                for (slot, &j) in o.iter_mut().zip(&active) {
                    *slot = sched.eval(j, lam) * c;
                }
            })?;
            for (&j, v) in active.iter().zip(vals) {
                out[j - 1] = v;
            }
        }
        let full = zd_resolvent(x, self.alpha, self.m2, &self.quad)?;
        out[self.n - 1] = full - out[..truncated].iter().sum::<f64>();
        self.cross.lock().unwrap().insert(x.to_vec(), out.clone());
        Ok(out)
    }
}

impl ScaleData for LatticeScales {
    fn depth(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn lf(&self) -> f64 {
        self.l
    }
    fn m2(&self) -> f64 {
        self.m2
    }
    fn c_diag(&self, j: usize) -> f64 {
        self.diag[j - 1]
    }
    fn bubble(&self, j: usize) -> f64 {
        self.bubbles[j]
    }
    fn w1(&self, j: usize) -> f64 {
        self.w1[j]
    }
    fn c_at(&self, j: usize, x: &[i64]) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(Error::domain(format!("scale {j} outside 1..={}", self.n)));
        }
        Ok(self.profile(x)?[j - 1])
    }
    fn resolvent_at(&self, x: &[i64]) -> Result<f64> {
        if x.iter().all(|c| *c == 0) {
            return Ok(self.resolvent_origin);
        }
        Ok(self.profile(x)?.iter().sum())
    }
    fn w_at(&self, j: usize, x: &[i64]) -> Result<f64> {
        Ok(self.profile(x)?[..j].iter().sum())
    }
}
