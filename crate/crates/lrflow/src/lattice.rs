//! Lattice specification, torus indexing and translation-invariant kernels.

use crate::error::{Error, Result};

/// Default cap on the number of torus sites a dense kernel may hold.
pub const DEFAULT_MAX_SITES: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub d: usize,
    pub l: u64,
    pub n: u32,
    /// Torus side, `l^n`.
    pub m: u64,
    pub alpha: f64,
    pub max_sites: usize,
}

impl LatticeSpec {
    pub fn new(d: usize, l: u64, n: u32, alpha: f64) -> Result<Self> {
        if !(1..=4).contains(&d) {
            return Err(Error::domain(format!("dimension {d} outside 1..=4")));
        }
        if l < 2 {
            return Err(Error::domain(format!("scale base L = {l} must be at least 2")));
        }
        if n < 1 {
            return Err(Error::domain("depth N must be at least 1"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!("alpha = {alpha} outside (0, 2]")));
        }
        let m = l
            .checked_pow(n)
            .filter(|m| *m <= i64::MAX as u64 / 4)
            .ok_or_else(|| Error::Resource(format!("torus side {l}^{n} overflows")))?;
        Ok(Self { d, l, n, m, alpha, max_sites: DEFAULT_MAX_SITES })
    }

    pub fn with_max_sites(mut self, max_sites: usize) -> Self {
        self.max_sites = max_sites;
        self
    }

    /// ε = 2α − d.
    pub fn epsilon(&self) -> f64 {
        2.0 * self.alpha - self.d as f64
    }

    pub fn lf(&self) -> f64 {
        self.l as f64
    }

    /// Number of torus sites, checked against the memory budget.
    pub fn sites(&self) -> Result<usize> {
        let m = usize::try_from(self.m).map_err(|_| Error::Resource("torus side too large".into()))?;
        m.checked_pow(self.d as u32)
            .filter(|v| *v <= self.max_sites)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "torus with side {} in d = {} exceeds the budget of {} sites",
                    self.m, self.d, self.max_sites
                ))
            })
    }

    pub(crate) fn require_strict_alpha(&self) -> Result<()> {
        if self.alpha >= 2.0 {
            return Err(Error::domain("this operation needs alpha strictly below 2"));
        }
        Ok(())
    }

    /// Linear index of a displacement, with wrap.
    pub fn index(&self, x: &[i64]) -> usize {
        debug_assert_eq!(x.len(), self.d);
        let m = self.m as i64;
        x.iter().fold(0usize, |acc, &xi| acc * self.m as usize + xi.rem_euclid(m) as usize)
    }

    /// Canonical coordinates in `[0, M)` of a linear index.
    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let m = self.m as usize;
        let mut out = vec![0i64; self.d];
        for slot in out.iter_mut().rev() {
            *slot = (idx % m) as i64;
            idx /= m;
        }
        out
    }

    /// Minimal-image representative of a coordinate, in `(−M/2, M/2]`.
    pub fn centered(&self, c: i64) -> i64 {
        let m = self.m as i64;
        let c = c.rem_euclid(m);
        if c > m / 2 {
            c - m
        } else {
            c
        }
    }

    /// Squared Euclidean torus distance of a displacement from the origin.
    pub fn torus_dist2(&self, x: &[i64]) -> f64 {
        x.iter()
            .map(|&c| {
                let c = self.centered(c) as f64;
                c * c
            })
            .sum()
    }

    pub fn torus_dist2_index(&self, idx: usize) -> f64 {
        self.torus_dist2(&self.coords(idx))
    }
}

/// Real translation-invariant kernel on the torus, indexed by displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub spec: LatticeSpec,
    pub values: Vec<f64>,
}

impl KernelField {
    pub fn zeros(spec: &LatticeSpec) -> Result<Self> {
        let n = spec.sites()?;
        Ok(Self { spec: spec.clone(), values: vec![0.0; n] })
    }

    pub fn get(&self, x: &[i64]) -> f64 {
        self.values[self.spec.index(x)]
    }

    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    /// Value at distance `r` along the first coordinate axis.
    pub fn on_axis(&self, r: i64) -> f64 {
        let mut x = vec![0i64; self.spec.d];
        x[0] = r;
        self.get(&x)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Largest asymmetry under x ↦ −x, coordinate reflections and permutations.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.spec.d;
        let mut worst = 0.0f64;
        for (idx, &v) in self.values.iter().enumerate() {
            let x = self.spec.coords(idx);
            let neg: Vec<i64> = x.iter().map(|c| -c).collect();
            worst = worst.max((v - self.get(&neg)).abs());
            for axis in 0..d {
                let mut y = x.clone();
                y[axis] = -y[axis];
                worst = worst.max((v - self.get(&y)).abs());
            }
            for a in 0..d {
                for b in (a + 1)..d {
                    let mut y = x.clone();
                    y.swap(a, b);
                    worst = worst.max((v - self.get(&y)).abs());
                }
            }
        }
        worst
    }

    /// Circular convolution with another kernel on the same torus.
    pub fn convolve(&self, other: &KernelField) -> Result<KernelField> {
        if self.spec != other.spec {
            return Err(Error::domain("convolution of kernels on different tori"));
        }
        let a = crate::fourier::forward(&self.spec, &self.values)?;
        let b = crate::fourier::forward(&self.spec, &other.values)?;
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let values = crate::fourier::inverse(&self.spec, &prod)?;
        Ok(KernelField { spec: self.spec.clone(), values })
    }
}

/// Lattice points in lexicographic order, as coordinates in `[0, M)`.
pub fn lexicographic_sites(spec: &LatticeSpec) -> Result<impl Iterator<Item = Vec<i64>> + '_> {
    let n = spec.sites()?;
    Ok((0..n).map(move |i| spec.coords(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_side_is_exact_power() {
        let s = LatticeSpec::new(2, 3, 4, 1.0).unwrap();
        assert_eq!(s.m, 81);
        assert_eq!(s.sites().unwrap(), 81 * 81);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeSpec::new(0, 2, 3, 1.0).is_err());
        assert!(LatticeSpec::new(1, 1, 3, 1.0).is_err());
        assert!(LatticeSpec::new(1, 2, 0, 1.0).is_err());
        assert!(LatticeSpec::new(1, 2, 3, 0.0).is_err());
        assert!(LatticeSpec::new(1, 2, 3, 2.5).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let s = LatticeSpec::new(3, 2, 10, 1.0).unwrap().with_max_sites(1000);
        assert!(matches!(s.sites(), Err(Error::Resource(_))));
    }

    #[test]
    fn index_round_trip() {
        let s = LatticeSpec::new(3, 2, 2, 1.0).unwrap();
        for i in 0..s.sites().unwrap() {
            assert_eq!(s.index(&s.coords(i)), i);
        }
        assert_eq!(s.index(&[-1, 0, 0]), s.index(&[3, 0, 0]));
    }

    #[test]
    fn minimal_image() {
        let s = LatticeSpec::new(1, 2, 3, 1.0).unwrap();
        assert_eq!(s.centered(5), -3);
        assert_eq!(s.centered(4), 4);
        assert_eq!(s.torus_dist2(&[7]), 1.0);
    }
}
