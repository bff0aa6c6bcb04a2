//! One-particle structure on a periodic one-dimensional lattice.
//!
//! The single-particle energy operator is `omega = sqrt(-laplacian + m^2)`,
//! where the Laplacian uses the periodic second-difference stencil
//! `(f(x+1) - 2 f(x) + f(x-1)) / dx^2`. On `L` sites its spectrum is known in
//! closed form: the plane-wave symbol gives
//!
//! ```text
//! kappa_k = m^2 + (2 - 2 cos(2 pi k / L)) / dx^2,   omega_k = sqrt(kappa_k),
//! ```
//!
//! with a real orthonormal eigenbasis built from the constant mode, cosine /
//! sine pairs, and (for even `L`) the alternating mode. We build that basis
//! once per lattice in [`Omega`] and express every function of `omega`
//! (heat semigroup, inverse square roots, ...) through it, so repeated
//! evaluations share one spectral decomposition and `omega >= m` holds by
//! construction.
//!
//! Test functions are paired *bilinearly*, without complex conjugation:
//! `pair(h, f) = dx * sum_x h(x) f(x)`. Both smearing maps built on top of
//! this (annihilation and creation) are then linear in their arguments, and
//! the canonical commutator takes the form `[a(h), a*(f)] = pair(h, f) * 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative slack accepted when validating evaluation times against
/// `[0, beta]`; absorbs roundoff from stepping `t = t0 + i * dt`.
const TIME_SLACK: f64 = 1e-9;

/// Geometry and mass of the periodic lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    sites: usize,
    spacing: f64,
    mass: f64,
}

impl LatticeSpec {
    /// A lattice with `sites >= 1` points, spacing `dx > 0` and mass `m > 0`.
    pub fn new(sites: usize, spacing: f64, mass: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidLattice("need at least one site".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidLattice(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidLattice(format!(
                "mass must be positive and finite, got {mass}"
            )));
        }
        Ok(Self { sites, spacing, mass })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Bilinear pairing `dx * sum_x h(x) f(x)` (no conjugation).
    pub fn pair(&self, h: &LatticeFunction, f: &LatticeFunction) -> Result<Complex64> {
        self.check_len(h)?;
        self.check_len(f)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for x in 0..self.sites {
            acc += h.values[x] * f.values[x];
        }
        Ok(acc * self.spacing)
    }

    /// Lattice delta function at `site`: value `1/dx` there, zero elsewhere,
    /// normalised so that `pair(dirac(x), f) = f(x)`.
    pub fn dirac(&self, site: usize) -> Result<LatticeFunction> {
        if site >= self.sites {
            return Err(Error::SiteOutOfRange { index: site, sites: self.sites });
        }
        let mut values = DVector::from_element(self.sites, Complex64::new(0.0, 0.0));
        values[site] = Complex64::new(1.0 / self.spacing, 0.0);
        Ok(LatticeFunction { values })
    }

    /// The `L x L` stencil matrix of `-laplacian + m^2` with periodic wrap.
    ///
    /// For `L = 1` the periodic neighbours coincide with the site itself and
    /// the Laplacian vanishes; for `L = 2` both neighbours are the opposite
    /// site, so the off-diagonal coupling doubles.
    pub fn stencil_matrix(&self) -> DMatrix<f64> {
        let l = self.sites;
        let inv_dx2 = 1.0 / (self.spacing * self.spacing);
        let mut k = DMatrix::zeros(l, l);
        for x in 0..l {
            k[(x, x)] += 2.0 * inv_dx2 + self.mass * self.mass;
            k[(x, (x + 1) % l)] -= inv_dx2;
            k[(x, (x + l - 1) % l)] -= inv_dx2;
        }
        k
    }

    fn check_len(&self, f: &LatticeFunction) -> Result<()> {
        if f.len() != self.sites {
            return Err(Error::LengthMismatch { expected: self.sites, found: f.len() });
        }
        Ok(())
    }
}

/// A complex-valued function on the lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    values: DVector<Complex64>,
}

impl LatticeFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values: DVector::from_vec(values) }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            values: DVector::from_iterator(
                values.len(),
                values.iter().map(|&v| Complex64::new(v, 0.0)),
            ),
        }
    }

    pub fn zeros(sites: usize) -> Self {
        Self { values: DVector::from_element(sites, Complex64::new(0.0, 0.0)) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, site: usize) -> Complex64 {
        self.values[site]
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { values: self.values.map(|v| v.conj()) }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { values: &self.values * factor }
    }

    /// Pointwise product, used to combine a spatial coupling with a profile.
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "pointwise product needs equal lengths");
        Self { values: self.values.component_mul(&other.values) }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }
}

impl std::ops::Add for &LatticeFunction {
    type Output = LatticeFunction;
    fn add(self, other: &LatticeFunction) -> LatticeFunction {
        assert_eq!(self.len(), other.len(), "sum needs equal lengths");
        LatticeFunction { values: &self.values + &other.values }
    }
}

impl std::ops::Sub for &LatticeFunction {
    type Output = LatticeFunction;
    fn sub(self, other: &LatticeFunction) -> LatticeFunction {
        assert_eq!(self.len(), other.len(), "difference needs equal lengths");
        LatticeFunction { values: &self.values - &other.values }
    }
}

/// Cached spectral decomposition of `omega = sqrt(-laplacian + m^2)`.
///
/// Modes are stored as columns of a real matrix, orthonormal for the plain
/// Euclidean product; the lattice-weighted modes `u_k = v_k / sqrt(dx)` are
/// orthonormal for `dx * sum conj(u) v`. Mode coefficients are taken with
/// the weighted product, so `f = sum_k f_k u_k` with
/// `f_k = dx * sum_x u_k(x) f(x)` (the modes are real).
#[derive(Debug, Clone)]
pub struct Omega {
    spec: LatticeSpec,
    /// `omega_k = sqrt(kappa_k)`, ascending.
    frequencies: Vec<f64>,
    /// Plain-orthonormal eigenvectors of the stencil, one column per mode.
    modes: DMatrix<f64>,
}

impl Omega {
    pub fn new(spec: &LatticeSpec) -> Self {
        let l = spec.sites();
        let dx2 = spec.spacing() * spec.spacing();
        let m2 = spec.mass() * spec.mass();
        let mut frequencies = Vec::with_capacity(l);
        let mut modes = DMatrix::zeros(l, l);
        let mut col = 0;

        let norm0 = 1.0 / (l as f64).sqrt();
        for x in 0..l {
            modes[(x, col)] = norm0;
        }
        frequencies.push(m2.sqrt());
        col += 1;

        // Cosine/sine pairs share kappa_k; kappa is increasing in k on
        // 0..=L/2, so pushing pairs in k-order keeps frequencies ascending.
        let pair_norm = (2.0 / l as f64).sqrt();
        for k in 1..=(l - 1) / 2 {
            let kappa = m2 + (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / l as f64).cos()) / dx2;
            for x in 0..l {
                let phase = 2.0 * std::f64::consts::PI * (k * x) as f64 / l as f64;
                modes[(x, col)] = pair_norm * phase.cos();
                modes[(x, col + 1)] = pair_norm * phase.sin();
            }
            frequencies.push(kappa.sqrt());
            frequencies.push(kappa.sqrt());
            col += 2;
        }

        if l > 1 && l % 2 == 0 {
            let kappa = m2 + 4.0 / dx2;
            for x in 0..l {
                modes[(x, col)] = if x % 2 == 0 { norm0 } else { -norm0 };
            }
            frequencies.push(kappa.sqrt());
        }

        Self { spec: spec.clone(), frequencies, modes }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// The eigenvalues `omega_k` in ascending order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// The `k`-th eigenmode, normalised for the lattice-weighted product.
    pub fn mode(&self, k: usize) -> LatticeFunction {
        let scale = 1.0 / self.spec.spacing().sqrt();
        let l = self.spec.sites();
        LatticeFunction {
            values: DVector::from_iterator(
                l,
                (0..l).map(|x| Complex64::new(self.modes[(x, k)] * scale, 0.0)),
            ),
        }
    }

    /// Coefficients `f_k = dx * sum_x u_k(x) f(x)`.
    pub fn mode_coefficients(&self, f: &LatticeFunction) -> Result<Vec<Complex64>> {
        self.spec.check_len(f)?;
        let sqrt_dx = self.spec.spacing().sqrt();
        let l = self.spec.sites();
        Ok((0..l)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..l {
                    acc += f.values[x] * self.modes[(x, k)];
                }
                acc * sqrt_dx
            })
            .collect())
    }

    /// Rebuilds `sum_k c_k u_k` from mode coefficients.
    pub fn from_mode_coefficients(&self, coeffs: &[Complex64]) -> LatticeFunction {
        let l = self.spec.sites();
        assert_eq!(coeffs.len(), l, "one coefficient per mode");
        let inv_sqrt_dx = 1.0 / self.spec.spacing().sqrt();
        let values = DVector::from_iterator(
            l,
            (0..l).map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..l {
                    acc += coeffs[k] * self.modes[(x, k)];
                }
                acc * inv_sqrt_dx
            }),
        );
        LatticeFunction { values }
    }

    /// Applies a scalar function of `omega` spectrally: `g(omega) f`.
    pub fn map(&self, g: impl Fn(f64) -> f64, f: &LatticeFunction) -> Result<LatticeFunction> {
        let mut coeffs = self.mode_coefficients(f)?;
        for (c, &w) in coeffs.iter_mut().zip(&self.frequencies) {
            *c *= g(w);
        }
        Ok(self.from_mode_coefficients(&coeffs))
    }

    /// Heat semigroup `exp(-s omega) f`.
    pub fn semigroup(&self, s: f64, f: &LatticeFunction) -> Result<LatticeFunction> {
        self.map(|w| (-s * w).exp(), f)
    }

    /// The smearing map `(2 omega)^(-1/2) f`.
    pub fn inv_sqrt_two_omega(&self, f: &LatticeFunction) -> Result<LatticeFunction> {
        self.map(|w| 1.0 / (2.0 * w).sqrt(), f)
    }

    /// Heat-smoothed profile `((2 omega)^(-1/2) exp(-s omega) f)`.
    ///
    /// Note the `s = 0` value is `(2 omega)^(-1/2) f`, not `f` itself.
    pub fn smoothed(&self, s: f64, f: &LatticeFunction) -> Result<LatticeFunction> {
        self.map(|w| (-s * w).exp() / (2.0 * w).sqrt(), f)
    }

    /// `omega` as a plain matrix on site values: `sum_k omega_k v_k v_k^T`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let l = self.spec.sites();
        let mut m = DMatrix::zeros(l, l);
        for k in 0..l {
            let w = self.frequencies[k];
            for x in 0..l {
                for y in 0..l {
                    m[(x, y)] += w * self.modes[(x, k)] * self.modes[(y, k)];
                }
            }
        }
        m
    }
}

/// Whether a profile follows the forward heat flow `s` or the reflected
/// flow `beta - s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A time-indexed smoothed profile `f_s = (2 omega)^(-1/2) exp(-s omega) f`,
/// evaluated at `s` (forward) or `beta - s` (backward).
#[derive(Debug, Clone)]
pub struct ProfileTerm {
    pub base: LatticeFunction,
    pub direction: Direction,
    pub beta: f64,
}

impl ProfileTerm {
    pub fn forward(base: LatticeFunction, beta: f64) -> Self {
        Self { base, direction: Direction::Forward, beta }
    }

    pub fn backward(base: LatticeFunction, beta: f64) -> Self {
        Self { base, direction: Direction::Backward, beta }
    }

    /// Conjugates the base function (directions are unaffected).
    pub fn conjugate(&self) -> Self {
        Self { base: self.base.conj(), direction: self.direction, beta: self.beta }
    }

    /// Swaps forward and backward flow, i.e. substitutes `s -> beta - s`.
    pub fn time_reversed(&self) -> Self {
        let direction = match self.direction {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        };
        Self { base: self.base.clone(), direction, beta: self.beta }
    }
}

/// Evaluates a profile term at time `s in [0, beta]` (with roundoff slack).
pub fn profile_at(term: &ProfileTerm, s: f64, omega: &Omega) -> Result<LatticeFunction> {
    let slack = TIME_SLACK * term.beta.max(1.0);
    if !s.is_finite() || s < -slack || s > term.beta + slack {
        return Err(Error::TimeOutOfRange { time: s, lo: 0.0, hi: term.beta });
    }
    let s = s.clamp(0.0, term.beta);
    let t = match term.direction {
        Direction::Forward => s,
        Direction::Backward => term.beta - s,
    };
    omega.smoothed(t, &term.base)
}
