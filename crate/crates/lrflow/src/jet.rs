//! Scalar and truncated-jet algebras for polymer activities.
//!
//! A [`Jet`] is a polynomial in σ_a, σ_b, φ̄ truncated at total degree 2 with
//! σ_a² = σ_b² = 0, so it keeps the eight monomials
//! 1, σ_a, σ_b, φ̄, σ_aσ_b, σ_aφ̄, σ_bφ̄, φ̄².

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Commutative unital algebra over the reals with exp and log.
pub trait Algebra:
    Copy + Debug + PartialEq + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn scale(self, c: f64) -> Self;
    fn exp(self) -> Self;
    /// Logarithm; `None` unless the constant term is positive.
    fn ln(self) -> Option<Self>;
    /// Largest coefficient in absolute value.
    fn norm(&self) -> f64;
    fn coefficients(&self) -> Vec<f64>;
    fn from_coefficients(c: &[f64]) -> Option<Self>;
    fn coefficient_names() -> &'static [&'static str];
}

impl Algebra for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Option<Self> {
        (self > 0.0).then(|| f64::ln(self))
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn coefficients(&self) -> Vec<f64> {
        vec![*self]
    }
    fn from_coefficients(c: &[f64]) -> Option<Self> {
        (c.len() == 1).then(|| c[0])
    }
    fn coefficient_names() -> &'static [&'static str] {
        &["1"]
    }
}

pub const ONE: usize = 0;
pub const SA: usize = 1;
pub const SB: usize = 2;
pub const PHI: usize = 3;
pub const SA_SB: usize = 4;
pub const SA_PHI: usize = 5;
pub const SB_PHI: usize = 6;
pub const PHI2: usize = 7;

pub const JET_NAMES: [&str; 8] = ["1", "sa", "sb", "phi", "sa_sb", "sa_phi", "sb_phi", "phi2"];

/// Exponents (σ_a, σ_b, φ̄) of each monomial.
const EXPONENTS: [(u8, u8, u8); 8] =
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (0, 0, 2)];

fn monomial(e: (u8, u8, u8)) -> Option<usize> {
    if e.0 > 1 || e.1 > 1 || e.0 + e.1 + e.2 > 2 {
        return None;
    }
    EXPONENTS.iter().position(|x| *x == e)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub c: [f64; 8],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; 8];
        c[ONE] = v;
        Self { c }
    }

    pub fn monomial(index: usize, v: f64) -> Self {
        let mut c = [0.0; 8];
        c[index] = v;
        Self { c }
    }

    /// Part without the constant term; nilpotent of order 3.
    fn nilpotent(self) -> Self {
        let mut c = self.c;
        c[ONE] = 0.0;
        Self { c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a -= b);
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.map(|v| -v) }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; 8];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (k, b) in o.c.iter().enumerate() {
                let (ei, ek) = (EXPONENTS[i], EXPONENTS[k]);
                if let Some(m) = monomial((ei.0 + ek.0, ei.1 + ek.1, ei.2 + ek.2)) {
                    c[m] += a * b;
                }
            }
        }
        Jet { c }
    }
}

impl Algebra for Jet {
    fn zero() -> Self {
        Jet::default()
    }
    fn one() -> Self {
        Jet::constant(1.0)
    }
    fn scale(self, s: f64) -> Self {
        Jet { c: self.c.map(|v| v * s) }
    }
    fn exp(self) -> Self {
        let n = self.nilpotent();
        (Jet::one() + n + (n * n).scale(0.5)).scale(self.c[ONE].exp())
    }
    fn ln(self) -> Option<Self> {
        let c0 = self.c[ONE];
        if !(c0 > 0.0) {
            return None;
        }
        let y = self.nilpotent().scale(1.0 / c0);
        Some(Jet::constant(c0.ln()) + y - (y * y).scale(0.5))
    }
    fn norm(&self) -> f64 {
        self.c.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
    fn coefficients(&self) -> Vec<f64> {
        self.c.to_vec()
    }
    fn from_coefficients(c: &[f64]) -> Option<Self> {
        (c.len() == 8).then(|| {
            let mut a = [0.0; 8];
            a.copy_from_slice(c);
            Jet { c: a }
        })
    }
    fn coefficient_names() -> &'static [&'static str] {
        &JET_NAMES
    }
}

pub fn jet_exp(x: Jet) -> Jet {
    x.exp()
}

pub fn jet_log(x: Jet) -> Option<Jet> {
    x.ln()
}

/// Report of the zero-field derivative identities for I = e^{−V(Λ)}.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub jet: Jet,
    /// D̄² I^∅.
    pub d2: f64,
    pub d2_expected: f64,
    /// D̄ D_{σ_a} I.
    pub dsa: f64,
    pub dsa_expected: f64,
    pub dsb: f64,
    pub dsb_expected: f64,
    pub exact: bool,
}

/// Builds the jet of e^{−V(Λ)} at constant field φ̄, with
/// V = ½ν|Λ|φ̄² + ¼g|Λ|φ̄⁴ − λ_aσ_aφ̄ − λ_bσ_bφ̄ (the quartic term is truncated away),
/// and reads off D̄²I^∅ = 2·[φ̄²] and D̄D_{σ_a}I = [σ_aφ̄].
pub fn derivative_identities_check(g: f64, nu: f64, lambda_a: f64, lambda_b: f64, volume: f64) -> DerivativeReport {
    let phi = Jet::monomial(PHI, 1.0);
    let phi2 = phi * phi;
    let quartic = (phi2 * phi2).scale(0.25 * g * volume);
    let v = phi2.scale(0.5 * nu * volume) + quartic
        - (Jet::monomial(SA, lambda_a) * phi)
        - (Jet::monomial(SB, lambda_b) * phi);
    let jet = (-v).exp();
    let d2 = 2.0 * jet.c[PHI2];
    let d2_expected = -nu * volume;
    let (dsa, dsb) = (jet.c[SA_PHI], jet.c[SB_PHI]);
    let exact = d2 == d2_expected && dsa == lambda_a && dsb == lambda_b && jet.c[ONE] == 1.0;
    DerivativeReport { jet, d2, d2_expected, dsa, dsa_expected: lambda_a, dsb, dsb_expected: lambda_b, exact }
}
