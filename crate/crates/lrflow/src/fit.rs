//! Least-squares helpers for log-log decay fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of y against x.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least two paired points, got {}", x.len().min(y.len()))));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite point in regression".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// Fit log|v| = intercept + slope·log r.
pub fn power_law_fit(r: &[f64], v: &[f64]) -> Result<LinearFit> {
    if r.iter().chain(v).any(|a| *a <= 0.0) {
        return Err(Error::Fit("power-law fit needs strictly positive radii and values".into()));
    }
    let lx: Vec<f64> = r.iter().map(|a| a.ln()).collect();
    let ly: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    linear_regression(&lx, &ly)
}
