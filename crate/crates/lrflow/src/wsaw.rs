//! Monte Carlo for the continuous-time weakly self-avoiding walk with generator
//! −(−Δ)^{α/2} on the torus.
//!
//! Each sample draws T ~ Exp(r), runs the walk to time T and records
//! e^{−g I_T + (r−ν)T} / r (and the endpoint indicator), so the Laplace transform
//! in T is estimated without bias. The proposal rate r defaults to ν; an explicit
//! rate reaches ν ≤ 0, where only the self-avoidance keeps the integral finite.
//! Sample i uses ChaCha8 seeded by the run seed on stream i.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier;
use crate::kernels::torus_frac_laplacian;
use crate::lattice::{KernelField, LatticeSpec};

/// Generator family written into output metadata.
pub const RNG_DESCRIPTION: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream = sample index";

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    /// Jump times 0 < t_1 < … < t_k ≤ T.
    pub times: Vec<f64>,
    /// Site indices x_0, …, x_k.
    pub positions: Vec<usize>,
    pub horizon: f64,
}

impl WalkPath {
    pub fn end(&self) -> usize {
        *self.positions.last().expect("a path has a start")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub spec: LatticeSpec,
    pub g: f64,
    pub nu: f64,
    pub samples: usize,
    pub seed: u64,
    /// Rate of the exponential horizon; None means ν.
    pub horizon_rate: Option<f64>,
}

impl McConfig {
    pub fn new(spec: LatticeSpec, g: f64, nu: f64, samples: usize, seed: u64) -> Self {
        Self { spec, g, nu, samples, seed, horizon_rate: None }
    }

    fn rate(&self) -> f64 {
        self.horizon_rate.unwrap_or(self.nu)
    }

    fn validate(&self) -> Result<()> {
        if !self.nu.is_finite() {
            return Err(Error::domain(format!("nu = {} must be finite", self.nu)));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::domain(format!("g = {} must be nonnegative", self.g)));
        }
        let rate = self.rate();
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain(match self.horizon_rate {
                None => format!("nu = {} must be positive unless a horizon rate is given", self.nu),
                Some(_) => format!("horizon rate = {rate} must be positive"),
            }));
        }
        if self.nu <= 0.0 && self.g == 0.0 {
            return Err(Error::domain("nu <= 0 needs g > 0"));
        }
        if self.samples < 2 {
            return Err(Error::domain("need at least two samples"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over √samples.
    pub stderr: f64,
    pub samples: usize,
}

/// Running mean and sum of squared deviations, merged in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        let mean = self.mean + delta * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + delta * delta * (self.n as f64 * o.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    fn estimate(&self) -> Estimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { f64::NAN };
        Estimate { mean: self.mean, stderr: (var / self.n as f64).sqrt(), samples: self.n }
    }
}

/// Holding rate (−Δ)^{α/2}_{0,0} and an alias table over jump displacements.
#[derive(Debug, Clone)]
pub struct WalkSampler {
    pub spec: LatticeSpec,
    pub rate: f64,
    /// P(jump to displacement y), y ≠ 0.
    pub jump_probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
    holding: Exp<f64>,
}

impl WalkSampler {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let kernel = torus_frac_laplacian(spec)?;
        Self::from_kernel(&kernel)
    }

    pub fn from_kernel(kernel: &KernelField) -> Result<Self> {
        let spec = kernel.spec.clone();
        if spec.m > u32::MAX as u64 || kernel.values.len() > u32::MAX as usize {
            return Err(Error::Resource("torus too large for the alias table".into()));
        }
        let rate = kernel.at_origin();
        if !(rate > 0.0) {
            return Err(Error::Construction(format!("holding rate {rate} is not positive")));
        }
        let tol = 1e-12 * rate;
        let mut weights = Vec::with_capacity(kernel.values.len());
        for (i, &v) in kernel.values.iter().enumerate() {
            if i == 0 {
                weights.push(0.0);
            } else if v > tol {
                return Err(Error::Construction(format!("positive off-diagonal kernel entry {v:e} at site {i}")));
            } else {
                weights.push((-v).max(0.0));
            }
        }
        let total: f64 = weights.iter().sum();
        let jump_probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::Construction(format!("alias table: {e}")))?;
        let holding = Exp::new(rate).map_err(|e| Error::Construction(format!("holding distribution: {e}")))?;
        Ok(Self { spec, rate, jump_probabilities, alias, holding })
    }

    fn shift(&self, pos: usize, disp: usize) -> usize {
        if self.spec.d == 1 {
            return (pos + disp) % self.spec.m as usize;
        }
        let (a, b) = (self.spec.coords(pos), self.spec.coords(disp));
        let sum: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        self.spec.index(&sum)
    }

    /// One jump displacement as a site index, drawn from the alias table.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }

    /// Walk from `start` up to time `horizon`.
    pub fn sample_walk<R: Rng + ?Sized>(&self, horizon: f64, start: usize, rng: &mut R) -> WalkPath {
        let mut times = Vec::new();
        let mut positions = vec![start];
        let mut t = self.holding.sample(rng);
        let mut pos = start;
        while t <= horizon {
            pos = self.shift(pos, self.sample_jump(rng));
            times.push(t);
            positions.push(pos);
            t += self.holding.sample(rng);
        }
        WalkPath { times, positions, horizon }
    }
}

/// I_T = Σ_x (L_T^x)², from the piecewise-constant trajectory.
pub fn self_intersection_time(path: &WalkPath) -> f64 {
    let mut occupation: BTreeMap<usize, f64> = BTreeMap::new();
    let mut prev = 0.0;
    for (k, &pos) in path.positions.iter().enumerate() {
        let until = path.times.get(k).copied().unwrap_or(path.horizon);
        *occupation.entry(pos).or_insert(0.0) += until - prev;
        prev = until;
    }
    occupation.values().map(|l| l * l).sum()
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Two-point estimates at several endpoints from one set of walks.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointProfile {
    pub estimates: Vec<Estimate>,
    /// Fraction of walks that reached torus distance ≥ M/4 from the start.
    pub wrap_fraction: f64,
    pub susceptibility: Estimate,
}

pub fn two_point_profile(config: &McConfig, sampler: &WalkSampler, a: &[i64], endpoints: &[Vec<i64>]) -> Result<TwoPointProfile> {
    config.validate()?;
    let spec = &sampler.spec;
    if *spec != config.spec {
        return Err(Error::domain("sampler and config disagree on the lattice"));
    }
    if a.len() != spec.d || endpoints.iter().any(|b| b.len() != spec.d) {
        return Err(Error::domain("endpoint dimension does not match the lattice"));
    }
    let start = spec.index(a);
    let targets: Vec<usize> = endpoints.iter().map(|b| spec.index(b)).collect();
    let quarter = (spec.m as f64 / 4.0).powi(2);
    let rate = config.rate();
    let horizon = Exp::new(rate).map_err(|e| Error::domain(format!("{e}")))?;
    let tilt = rate - config.nu;
    let chunks = config.samples.div_ceil(CHUNK);
    let per_chunk: Vec<(Vec<Moments>, Moments, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ms = vec![Moments::default(); targets.len()];
            let mut chi = Moments::default();
            let mut wraps = 0usize;
            for i in c * CHUNK..((c + 1) * CHUNK).min(config.samples) {
                let mut rng = sample_rng(config.seed, i);
                let t = horizon.sample(&mut rng);
                let path = sampler.sample_walk(t, start, &mut rng);
                let weight = (tilt * t - config.g * self_intersection_time(&path)).exp() / rate;
                let end = path.end();
                for (m, &b) in ms.iter_mut().zip(&targets) {
                    m.push(if end == b { weight } else { 0.0 });
                }
                chi.push(weight);
                let reached = path.positions.iter().any(|&p| {
                    let disp: Vec<i64> = spec.coords(p).iter().zip(a).map(|(x, y)| x - y).collect();
                    spec.torus_dist2(&disp) >= quarter
                });
                wraps += reached as usize;
            }
            (ms, chi, wraps)
        })
        .collect();
    let mut totals = vec![Moments::default(); targets.len()];
    let mut chi = Moments::default();
    let mut wraps = 0;
    for (ms, c, w) in per_chunk {
        for (t, m) in totals.iter_mut().zip(ms) {
            *t = t.merge(m);
        }
        chi = chi.merge(c);
        wraps += w;
    }
    Ok(TwoPointProfile {
        estimates: totals.iter().map(Moments::estimate).collect(),
        wrap_fraction: wraps as f64 / config.samples as f64,
        susceptibility: chi.estimate(),
    })
}

pub fn two_point_estimate(config: &McConfig, a: &[i64], b: &[i64]) -> Result<Estimate> {
    let sampler = WalkSampler::new(&config.spec)?;
    Ok(two_point_profile(config, &sampler, a, &[b.to_vec()])?.estimates[0])
}

pub fn susceptibility_estimate(config: &McConfig) -> Result<Estimate> {
    let sampler = WalkSampler::new(&config.spec)?;
    let origin = vec![0; config.spec.d];
    Ok(two_point_profile(config, &sampler, &origin, &[])?.susceptibility)
}

/// (e^{tQ})_{0,x} with Q = −(−Δ)^{α/2}, by inverse DFT.
pub fn transition_kernel(spec: &LatticeSpec, t: f64) -> Result<KernelField> {
    let half = spec.alpha / 2.0;
    let mult: Vec<f64> = fourier::torus_lambda(spec)?.into_iter().map(|l| (-t * l.powf(half)).exp()).collect();
    Ok(KernelField { spec: spec.clone(), values: fourier::inverse(spec, &mult)? })
}
