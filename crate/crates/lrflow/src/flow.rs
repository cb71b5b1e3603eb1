//! Perturbative RG flow of the bulk couplings (g, ν, u) and the observable couplings
//! (λ_a, λ_b, q_a, q_b), with critical tuning, the two-point predictor and the
//! susceptibility exponent.

use crate::error::{Error, Result};
use crate::scales::ScaleData;

/// j_m = ⌈1 + (1/α) log_L m^{−2}⌉, the smallest j with m² L^{α(j−1)} ≥ 1 (at least 1).
///
/// Values of f_m within 1e−9 of an integer are snapped to it, so that m² = L^{−α(J−1)}
/// computed in floating point maps to J.
pub fn mass_scale(m2: f64, alpha: f64, l: f64) -> usize {
    assert!(m2 > 0.0 && alpha > 0.0 && l > 1.0);
    let mut f = 1.0 + (1.0 / m2).ln() / (alpha * l.ln());
    let r = f.round();
    if (f - r).abs() <= 1e-9 * r.abs().max(1.0) {
        f = r;
    }
    f.ceil().max(1.0) as usize
}

/// j_ab = ⌊log_L(2|a−b|)⌋ for Euclidean |a−b|, computed in integers as the largest j
/// with L^{2j} ≤ 4|a−b|².
pub fn coalescence_scale(a: &[i64], b: &[i64], l: u64) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::domain("points of different dimension"));
    }
    let r2: u128 = a.iter().zip(b).map(|(x, y)| ((x - y) as i128 * (x - y) as i128) as u128).sum();
    if r2 == 0 {
        return Err(Error::domain("coalescence scale needs a ≠ b"));
    }
    let bound = 4 * r2;
    let l2 = (l as u128) * (l as u128);
    let mut j = 0usize;
    let mut p: u128 = 1;
    while let Some(next) = p.checked_mul(l2) {
        if next > bound {
            break;
        }
        p = next;
        j += 1;
    }
    Ok(j)
}

/// δ[νw⁽¹⁾] = (ν + (n+2) g C_{+;00}) w₊⁽¹⁾ − ν w⁽¹⁾.
pub fn delta_nu_w1(nu: f64, g: f64, n: u32, c_plus_diag: f64, w_plus_1: f64, w_1: f64) -> f64 {
    (nu + (n as f64 + 2.0) * g * c_plus_diag) * w_plus_1 - nu * w_1
}

/// The same quantity written as ν Σ_x C_{+;0,x} + (n+2) g C_{+;00} w₊⁽¹⁾.
pub fn delta_nu_w1_expanded(nu: f64, g: f64, n: u32, c_plus_diag: f64, c_plus_sum: f64, w_plus_1: f64) -> f64 {
    nu * c_plus_sum + (n as f64 + 2.0) * g * c_plus_diag * w_plus_1
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Couplings {
    pub g: f64,
    pub nu: f64,
    pub u: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub q_a: f64,
    pub q_b: f64,
}

impl Couplings {
    pub fn initial(g0: f64, nu0: f64) -> Self {
        Self { g: g0, nu: nu0, u: 0.0, lambda_a: 1.0, lambda_b: 1.0, q_a: 0.0, q_b: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    /// Number of field components.
    pub n: u32,
    pub g0: f64,
    pub nu0: f64,
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    /// Keep the −(n+2) g ν bubble term in the ν map.
    pub second_order_nu: bool,
    /// Stop after this scale instead of N.
    pub max_scale: Option<usize>,
    /// Scales discarded before plateau windows start.
    pub j_transient: usize,
}

impl FlowParams {
    pub fn new(n: u32, g0: f64, nu0: f64, a: Vec<i64>, b: Vec<i64>) -> Self {
        Self { n, g0, nu0, a, b, second_order_nu: true, max_scale: None, j_transient: 10 }
    }

    fn displacement(&self) -> Vec<i64> {
        self.b.iter().zip(&self.a).map(|(b, a)| b - a).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRecord {
    pub j: usize,
    pub couplings: Couplings,
    pub c_diag: f64,
    pub c_ab: f64,
    pub w1: f64,
    pub g_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub records: Vec<ScaleRecord>,
    pub j_ab: usize,
    pub j_m: usize,
    pub epsilon: f64,
}

fn j_mass(scales: &dyn ScaleData) -> usize {
    if scales.m2() > 0.0 {
        mass_scale(scales.m2(), scales.alpha(), scales.lf())
    } else {
        usize::MAX
    }
}

/// One bulk step j → j+1.
pub fn step_bulk(c: &Couplings, j: usize, scales: &dyn ScaleData, n: u32, second_order_nu: bool) -> Result<Couplings> {
    let bubble = scales.bubble(j);
    let beta = (n as f64 + 8.0) * bubble;
    let g = c.g - beta * c.g * c.g;
    if c.g > 0.0 && g <= 0.0 {
        return Err(Error::FlowLeftDomain { scale: j + 1, reason: format!("g = {g} after the bubble β = {beta}") });
    }
    let tadpole = (n as f64 + 2.0) * c.g;
    let mut nu = c.nu + tadpole * scales.c_diag(j + 1);
    if second_order_nu {
        nu -= tadpole * c.nu * bubble;
    }
    if !g.is_finite() || !nu.is_finite() {
        return Err(Error::FlowLeftDomain { scale: j + 1, reason: "non-finite coupling".into() });
    }
    Ok(Couplings { g, nu, ..*c })
}

/// One observable step j → j+1: λ moves only while j+1 < j_ab; q gains λ_aλ_b C_{j+1;a,b}.
pub fn step_observable(c: &Couplings, j: usize, scales: &dyn ScaleData, n: u32, j_ab: usize, ab: &[i64]) -> Result<Couplings> {
    let mut out = *c;
    if j + 1 < j_ab {
        let delta = delta_nu_w1(c.nu, c.g, n, scales.c_diag(j + 1), scales.w1(j + 1), scales.w1(j));
        out.lambda_a = (1.0 - delta) * c.lambda_a;
        out.lambda_b = (1.0 - delta) * c.lambda_b;
    }
    let dq = c.lambda_a * c.lambda_b * scales.c_at(j + 1, ab)?;
    out.q_a += dq;
    out.q_b += dq;
    Ok(out)
}

fn last_scale(params: &FlowParams, scales: &dyn ScaleData) -> usize {
    params.max_scale.map_or(scales.depth(), |m| m.min(scales.depth()))
}

/// Full trajectory from scale 0 to N. The last step, through the infrared remainder
/// C_{N,N}, advances only the observables.
pub fn run(params: &FlowParams, scales: &dyn ScaleData) -> Result<FlowTrajectory> {
    let n_top = last_scale(params, scales);
    let depth = scales.depth();
    let ab = params.displacement();
    let j_ab = coalescence_scale(&params.a, &params.b, scales.lf() as u64)?;
    let eps = scales.epsilon();
    let lf = scales.lf();
    let mut c = Couplings::initial(params.g0, params.nu0);
    let mut records = Vec::with_capacity(n_top + 1);
    let record = |j: usize, c: &Couplings| -> Result<ScaleRecord> {
        let (c_diag, c_ab) = if j == 0 { (0.0, 0.0) } else { (scales.c_diag(j), scales.c_at(j, &ab)?) };
        Ok(ScaleRecord { j, couplings: *c, c_diag, c_ab, w1: scales.w1(j), g_hat: c.g * lf.powf(eps * j as f64) })
    };
    records.push(record(0, &c)?);
    for j in 0..n_top {
        let mut next = step_observable(&c, j, scales, params.n, j_ab, &ab)?;
        if j + 1 < depth {
            let bulk = step_bulk(&c, j, scales, params.n, params.second_order_nu)?;
            next.g = bulk.g;
            next.nu = bulk.nu;
        }
        c = next;
        records.push(record(j + 1, &c)?);
    }
    Ok(FlowTrajectory { records, j_ab, j_m: j_mass(scales), epsilon: eps })
}

/// 1 − ν_j w_j⁽¹⁾.
pub fn lambda_closed_form(traj: &FlowTrajectory, j: usize) -> f64 {
    let r = &traj.records[j];
    1.0 - r.couplings.nu * r.w1
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    /// Plateau of β_j L^{−εj}.
    pub a: f64,
    /// (1/a)(1 − L^{−ε}).
    pub s_bar: f64,
    pub window: (usize, usize),
}

/// Window [j_transient, min(j_m, N) − 2], clipped to the available scales.
pub fn plateau_window(scales: &dyn ScaleData, j_transient: usize) -> Result<(usize, usize)> {
    let top = j_mass(scales).min(scales.depth()).saturating_sub(2);
    if top <= j_transient {
        return Err(Error::Extraction(format!(
            "plateau window [{j_transient}, {top}] is empty; increase N or reduce the transient"
        )));
    }
    Ok((j_transient, top))
}

pub fn fixed_point(scales: &dyn ScaleData, n: u32, j_transient: usize) -> Result<FixedPoint> {
    let (lo, hi) = plateau_window(scales, j_transient)?;
    let eps = scales.epsilon();
    if !(eps > 0.0) {
        return Err(Error::domain("the fixed point needs ε = 2α − d > 0"));
    }
    let lf = scales.lf();
    let vals: Vec<f64> =
        (lo..=hi).map(|j| (n as f64 + 8.0) * scales.bubble(j) * lf.powf(-eps * j as f64)).collect();
    let a = vals.iter().sum::<f64>() / vals.len() as f64;
    Ok(FixedPoint { a, s_bar: (1.0 - lf.powf(-eps)) / a, window: (lo, hi) })
}

/// Bulk (g, ν) at scales 0..=N−1.
pub fn bulk_trajectory(params: &FlowParams, scales: &dyn ScaleData, nu0: f64) -> Result<Vec<(f64, f64)>> {
    let top = last_scale(params, scales).min(scales.depth() - 1);
    let mut c = Couplings::initial(params.g0, nu0);
    let mut out = Vec::with_capacity(top + 1);
    out.push((c.g, c.nu));
    for j in 0..top {
        c = step_bulk(&c, j, scales, params.n, params.second_order_nu)?;
        out.push((c.g, c.nu));
    }
    Ok(out)
}

fn rescale(scales: &dyn ScaleData, j: usize) -> f64 {
    let jm = j_mass(scales);
    scales.lf().powf(scales.alpha() * j.min(jm) as f64)
}

/// Direction in which ν̂_j = ν_j L^{α(j∧j_m)} leaves the window |ν̂| ≤ threshold,
/// or the sign of the final ν̂ when it never does.
pub fn escape_direction(params: &FlowParams, scales: &dyn ScaleData, nu0: f64, threshold: f64) -> Result<f64> {
    let traj = bulk_trajectory(params, scales, nu0)?;
    for (j, &(_, nu)) in traj.iter().enumerate() {
        let hat = nu * rescale(scales, j);
        if hat.abs() > threshold {
            return Ok(hat.signum());
        }
    }
    let (j, &(_, nu)) = traj.iter().enumerate().last().unwrap();
    let hat = nu * rescale(scales, j);
    Ok(if hat == 0.0 { 0.0 } else { hat.signum() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuning {
    pub nu0_c: f64,
    pub threshold: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Bisection on the escape direction of ν̂, with escape at 10³ s̄.
pub fn tune_critical_nu(params: &FlowParams, scales: &dyn ScaleData) -> Result<Tuning> {
    let fp = fixed_point(scales, params.n, params.j_transient)?;
    let threshold = 1e3 * fp.s_bar;
    let dir = |nu: f64| escape_direction(params, scales, nu, threshold);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut expansions = 0;
    loop {
        let (dl, dh) = (dir(lo)?, dir(hi)?);
        if dl == 0.0 {
            return Ok(Tuning { nu0_c: lo, threshold, bracket: (lo, hi), iterations: 0 });
        }
        if dh == 0.0 {
            return Ok(Tuning { nu0_c: hi, threshold, bracket: (lo, hi), iterations: 0 });
        }
        if dl < 0.0 && dh > 0.0 {
            break;
        }
        expansions += 1;
        if expansions > 20 {
            return Err(Error::Tuning(format!("bracket [{lo}, {hi}] never straddles the critical point")));
        }
        lo *= 2.0;
        hi *= 2.0;
    }
    let bracket = (lo, hi);
    let tol = 1e-12 * (hi - lo);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        iterations += 1;
        let dm = dir(mid)?;
        if dm == 0.0 {
            return Ok(Tuning { nu0_c: mid, threshold, bracket, iterations });
        } else if dm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Tuning { nu0_c: 0.5 * (lo + hi), threshold, bracket, iterations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Plateau eigenvalue of the rescaled ν map, Λ̂.
    pub lambda_hat: f64,
    /// Plateau eigenvalue in unrescaled variables, Λ̂ L^{−α}.
    pub lambda_nu: f64,
    pub gamma_eff: f64,
    pub window: (usize, usize),
    pub ratios: Vec<f64>,
    pub log_ratio_std: f64,
}

/// Largest admitted standard deviation of log Λ̂_j over the plateau window.
pub const PLATEAU_LOG_STD: f64 = 0.02;

/// Linearised ν eigenvalue from two trajectories at ν₀^c ± δ, and γ_eff = α / log_L Λ̂.
pub fn nu_eigenvalue_and_gamma(params: &FlowParams, scales: &dyn ScaleData, nu0_c: f64) -> Result<GammaEstimate> {
    let delta = 1e-8 * nu0_c.abs().max(1.0);
    let plus = bulk_trajectory(params, scales, nu0_c + delta)?;
    let minus = bulk_trajectory(params, scales, nu0_c - delta)?;
    let (lo, hi) = plateau_window(scales, params.j_transient)?;
    let hi = hi.min(plus.len() - 1);
    if hi <= lo {
        return Err(Error::Extraction("plateau window shorter than two scales".into()));
    }
    let diff = |j: usize| (plus[j].1 - minus[j].1) * rescale(scales, j);
    let ratios: Vec<f64> = (lo..hi).map(|j| diff(j + 1) / diff(j)).collect();
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::Extraction("ν differences change sign inside the plateau window".into()));
    }
    let logs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / logs.len() as f64;
    let std = var.sqrt();
    if std > PLATEAU_LOG_STD {
        return Err(Error::Extraction(format!("no plateau: std of log Λ̂ = {std:.3e}")));
    }
    let lambda_hat = mean.exp();
    let lf = scales.lf();
    let gamma_eff = scales.alpha() * lf.ln() / mean;
    Ok(GammaEstimate {
        lambda_hat,
        lambda_nu: lambda_hat * lf.powf(-scales.alpha()),
        gamma_eff,
        window: (lo, hi),
        ratios,
        log_ratio_std: std,
    })
}

/// ½(q_{a,N} + q_{b,N}), the remainder A_N taken as zero.
pub fn predict_two_point(params: &FlowParams, scales: &dyn ScaleData) -> Result<f64> {
    let j_ab = coalescence_scale(&params.a, &params.b, scales.lf() as u64)?;
    if j_ab >= scales.depth() {
        return Err(Error::domain(format!("coalescence scale {j_ab} is not below N = {}", scales.depth())));
    }
    let traj = run(params, scales)?;
    let last = traj.records.last().unwrap().couplings;
    Ok(0.5 * (last.q_a + last.q_b))
}

/// λ_{a,j_ab} λ_{b,j_ab} w_{N;a,b}, equal to q_N in the perturbative engine.
pub fn q_closed_form(traj: &FlowTrajectory, params: &FlowParams, scales: &dyn ScaleData) -> Result<f64> {
    let r = &traj.records[traj.j_ab.min(traj.records.len() - 1)];
    let ab = params.displacement();
    Ok(r.couplings.lambda_a * r.couplings.lambda_b * scales.w_at(traj.records.len() - 1, &ab)?)
}
