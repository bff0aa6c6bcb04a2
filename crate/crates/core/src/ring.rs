//! Truncated power-series ring of lattice functions.
//!
//! Elements are tuples `(u_0, ..., u_D)` of lattice functions, multiplied by
//! the truncated Cauchy product
//!
//! ```text
//! (u * v)_j (x) = sum_{k=0}^{j} u_k(x) v_{j-k}(x),      j <= D,
//! ```
//!
//! with everything above the degree cap `D` discarded. The ring organises how
//! interaction terms get dressed by smoothed profiles: the embedding
//! [`RingElement::iota`] places a single function in degree one, and the
//! exponential [`RingElement::gamma`] collects the profile powers
//! `f^j / j!`. Since `iota(f)` is nilpotent under truncation, `gamma`
//! satisfies the exact group laws `gamma(f) * gamma(g) = gamma(f + g)` and
//! `gamma(f) * gamma(-f) = identity`, which the interaction layer relies on.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::LatticeFunction;

/// A degree-capped tuple of lattice functions with the Cauchy product.
#[derive(Debug, Clone, PartialEq)]
pub struct RingElement {
    components: Vec<LatticeFunction>,
}

impl RingElement {
    /// Wraps explicit components; `components[j]` is the degree-`j` entry and
    /// the degree cap is `components.len() - 1`.
    pub fn new(components: Vec<LatticeFunction>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidRingElement(
                "a ring element needs at least the degree-zero component".into(),
            ));
        }
        let sites = components[0].len();
        if sites == 0 {
            return Err(Error::InvalidRingElement("components must be non-empty".into()));
        }
        if components.iter().any(|c| c.len() != sites) {
            return Err(Error::InvalidRingElement(
                "all components must live on the same lattice".into(),
            ));
        }
        Ok(Self { components })
    }

    /// The multiplicative unit: constant one in degree zero, zero above.
    pub fn identity(sites: usize, degree_cap: usize) -> Self {
        let mut components = vec![LatticeFunction::zeros(sites); degree_cap + 1];
        components[0] = LatticeFunction::new(vec![Complex64::new(1.0, 0.0); sites]);
        Self { components }
    }

    /// Embeds a single function in degree one. Needs `degree_cap >= 1`.
    pub fn iota(f: &LatticeFunction, degree_cap: usize) -> Result<Self> {
        if degree_cap < 1 {
            return Err(Error::InvalidRingElement(
                "iota needs a degree cap of at least one".into(),
            ));
        }
        let mut components = vec![LatticeFunction::zeros(f.len()); degree_cap + 1];
        components[1] = f.clone();
        Self::new(components)
    }

    /// Truncated exponential `gamma(f)_j = f^j / j!`.
    ///
    /// This is `exp(iota(f))` in the truncated ring, computed directly from
    /// the powers rather than by repeated multiplication.
    pub fn gamma(f: &LatticeFunction, degree_cap: usize) -> Self {
        let sites = f.len();
        let mut components = Vec::with_capacity(degree_cap + 1);
        let mut power = LatticeFunction::new(vec![Complex64::new(1.0, 0.0); sites]);
        let mut factorial = 1.0;
        components.push(power.clone());
        for j in 1..=degree_cap {
            power = power.pointwise_mul(f);
            factorial *= j as f64;
            components.push(power.scale(Complex64::new(1.0 / factorial, 0.0)));
        }
        Self { components }
    }

    pub fn degree_cap(&self) -> usize {
        self.components.len() - 1
    }

    pub fn sites(&self) -> usize {
        self.components[0].len()
    }

    pub fn component(&self, j: usize) -> &LatticeFunction {
        &self.components[j]
    }

    pub fn components(&self) -> &[LatticeFunction] {
        &self.components
    }

    /// Truncated Cauchy product. Both factors must share the degree cap.
    pub fn star(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let sites = self.sites();
        let cap = self.degree_cap();
        let mut components = Vec::with_capacity(cap + 1);
        for j in 0..=cap {
            let mut acc = LatticeFunction::zeros(sites);
            for k in 0..=j {
                acc = &acc + &self.components[k].pointwise_mul(&other.components[j - k]);
            }
            components.push(acc);
        }
        Ok(Self { components })
    }

    /// Componentwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { components })
    }

    /// Multiplies every component pointwise by a fixed lattice function,
    /// e.g. a spatial coupling profile.
    pub fn scalar_mult(&self, weight: &LatticeFunction) -> Result<Self> {
        if weight.len() != self.sites() {
            return Err(Error::LengthMismatch { expected: self.sites(), found: weight.len() });
        }
        let components = self.components.iter().map(|c| c.pointwise_mul(weight)).collect();
        Ok(Self { components })
    }

    /// Pointwise complex conjugate of every component.
    pub fn conjugate(&self) -> Self {
        Self { components: self.components.iter().map(|c| c.conj()).collect() }
    }

    /// Largest entry magnitude over all components, handy for comparisons.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Largest componentwise deviation from `other`.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).max_abs())
            .fold(0.0, f64::max))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.degree_cap() != other.degree_cap() {
            return Err(Error::DegreeCapMismatch {
                left: self.degree_cap(),
                right: other.degree_cap(),
            });
        }
        if self.sites() != other.sites() {
            return Err(Error::LengthMismatch { expected: self.sites(), found: other.sites() });
        }
        Ok(())
    }
}
