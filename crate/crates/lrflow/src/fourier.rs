//! Separable d-dimensional discrete Fourier transforms on the torus.
//!
//! Kernels here are real and even, so both directions return real arrays.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::lattice::LatticeSpec;

fn transform(spec: &LatticeSpec, data: &mut [Complex64], inverse: bool) {
    let m = spec.m as usize;
    let total = data.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    for axis in 0..spec.d {
        let stride = m.pow((spec.d - 1 - axis) as u32);
        let lines = total / m;
        let mut gathered: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); total];
        gathered.par_chunks_mut(m).enumerate().for_each(|(line, buf)| {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * m * stride + inner;
            for (t, slot) in buf.iter_mut().enumerate() {
                *slot = data[base + t * stride];
            }
            fft.process(buf);
        });
        for line in 0..lines {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * m * stride + inner;
            let buf = &gathered[line * m..(line + 1) * m];
            for (t, v) in buf.iter().enumerate() {
                data[base + t * stride] = *v;
            }
        }
    }
}

/// Σ_x f(x) e^{−ik·x} over torus momenta, real part.
pub fn forward(spec: &LatticeSpec, values: &[f64]) -> Result<Vec<f64>> {
    spec.sites()?;
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(spec, &mut buf, false);
    Ok(buf.into_iter().map(|c| c.re).collect())
}

/// M^{−d} Σ_k F(k) e^{ik·x}, real part.
pub fn inverse(spec: &LatticeSpec, multiplier: &[f64]) -> Result<Vec<f64>> {
    let n = spec.sites()?;
    let mut buf: Vec<Complex64> = multiplier.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(spec, &mut buf, true);
    let scale = 1.0 / n as f64;
    Ok(buf.into_iter().map(|c| c.re * scale).collect())
}

/// λ(k) at every torus momentum k = 2πm/M, in the kernel index order.
pub fn torus_lambda(spec: &LatticeSpec) -> Result<Vec<f64>> {
    let n = spec.sites()?;
    let m = spec.m as f64;
    let axis: Vec<f64> = (0..spec.m)
        .map(|j| {
            let s = (std::f64::consts::PI * j as f64 / m).sin();
            4.0 * s * s
        })
        .collect();
    Ok((0..n)
        .into_par_iter()
        .map(|idx| spec.coords(idx).iter().map(|&c| axis[c as usize]).sum())
        .collect())
}
