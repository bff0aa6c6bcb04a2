//! Wick-ordered polynomial interactions and the shifted Hamiltonian family.
//!
//! Wick powers of the field at a site are generated by the recursion
//!
//! ```text
//! :phi^0: = 1,    :phi^(n+1): = phi :phi^n: - n c :phi^(n-1):,
//! ```
//!
//! with `c = pair(d, d)` the vacuum variance of the field smearing `d`. An
//! independent route expands the same operator in normal order,
//!
//! ```text
//! :phi^n: = sum_j binom(n, j) a*(d)^j a(d)^(n-j),
//! ```
//!
//! which never references `c`; comparing both routes (and the vanishing of
//! vacuum moments) pins the ordering constant down, so a silently rescaled
//! `c` cannot hide.
//!
//! A polynomial `P` and a site weight `w` give the interaction
//! `H_I(P, w) = dx * sum_x w(x) sum_n p_n :phi(x)^n:`. Shifting the field by
//! a classical profile `g` Taylor-expands into derivative polynomials,
//!
//! ```text
//! dx * sum_x w(x) :P(phi(x) + g(x)): = sum_j H_I(P^(j), w g^j / j!),
//! ```
//!
//! which is exactly the pairing of `P` with the ring element `w * Gamma(g)`;
//! [`bold_interaction`] evaluates that pairing for an arbitrary ring element.
//! [`HamiltonianFamily`] packages `H(s) = H_0 + bold H_I(P, lambda *
//! Gamma(sum_i profile_i(s)))` with the Wick table and `H_0` precomputed.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::lattice::{profile_at, LatticeFunction, ProfileTerm};
use crate::linalg::CMatrix;
use crate::ring::RingElement;

/// A real-coefficient polynomial, coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Any real polynomial; trailing zero coefficients are trimmed, and the
    /// zero polynomial is represented as a single zero coefficient.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidPolynomial("coefficient list is empty".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPolynomial("coefficients must be finite".into()));
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(Self { coeffs })
    }

    /// A stability-grade interaction polynomial: even degree at least two and
    /// leading coefficient one, so the semibounded quartic-type interactions
    /// are the typical members.
    pub fn monic_even(coeffs: Vec<f64>) -> Result<Self> {
        let p = Self::new(coeffs)?;
        if p.degree() == 0 || p.degree() % 2 != 0 {
            return Err(Error::InvalidPolynomial(format!(
                "interaction polynomial must have positive even degree, got degree {}",
                p.degree()
            )));
        }
        if *p.coeffs.last().unwrap() != 1.0 {
            return Err(Error::InvalidPolynomial(format!(
                "interaction polynomial must be monic, got leading coefficient {}",
                p.coeffs.last().unwrap()
            )));
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self { coeffs: vec![0.0] };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| n as f64 * c)
            .collect();
        Self { coeffs }
    }

    /// The `j`-th derivative.
    pub fn derivative_n(&self, j: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..j {
            p = p.derivative();
        }
        p
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

fn binom_f(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Precomputed Wick powers `:phi(x)^n:` for every site and all degrees up to
/// a cap, generated by the two-term recursion.
#[derive(Debug)]
pub struct WickTable {
    space: Arc<FockSpace>,
    max_degree: usize,
    powers: Vec<Vec<CMatrix>>,
    wick_scale: f64,
}

impl WickTable {
    pub fn new(space: &Arc<FockSpace>, max_degree: usize) -> Result<Self> {
        Self::with_wick_scale(space, max_degree, 1.0)
    }

    /// Like [`WickTable::new`] but with the ordering constant multiplied by
    /// `wick_scale`. Anything other than 1.0 deliberately breaks the
    /// ordering convention so the consistency checks can demonstrate the
    /// failure; the shift identities themselves are provably insensitive to
    /// this scale.
    pub fn with_wick_scale(space: &Arc<FockSpace>, max_degree: usize, wick_scale: f64) -> Result<Self> {
        let dim = space.dim();
        let sites = space.lattice().sites();
        let mut powers = Vec::with_capacity(sites);
        for site in 0..sites {
            let phi = space.field_operator(site)?.into_matrix();
            let c = space.wick_constant(site)? * wick_scale;
            let mut tower: Vec<CMatrix> = Vec::with_capacity(max_degree + 1);
            tower.push(CMatrix::identity(dim, dim));
            if max_degree >= 1 {
                tower.push(phi.clone());
            }
            for n in 1..max_degree {
                let next = &phi * &tower[n] - &tower[n - 1] * (c * n as f64);
                tower.push(next);
            }
            powers.push(tower);
        }
        Ok(Self { space: Arc::clone(space), max_degree, powers, wick_scale })
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn wick_scale(&self) -> f64 {
        self.wick_scale
    }

    /// The matrix of `:phi(site)^n:`.
    pub fn power(&self, site: usize, n: usize) -> &CMatrix {
        assert!(n <= self.max_degree, "degree {n} beyond table cap {}", self.max_degree);
        &self.powers[site][n]
    }
}

/// `:phi(site)^n:` assembled in normal order without ever using the ordering
/// constant: `sum_j binom(n, j) a*(d)^j a(d)^(n-j)`.
pub fn wick_power_normal_order(space: &Arc<FockSpace>, site: usize, n: usize) -> Result<CMatrix> {
    let d = space.field_smearing(site)?;
    let a = space.annihilate(&d)?.into_matrix();
    let c = space.create(&d)?.into_matrix();
    let dim = space.dim();
    let mut lower: Vec<CMatrix> = Vec::with_capacity(n + 1);
    let mut raise: Vec<CMatrix> = Vec::with_capacity(n + 1);
    lower.push(CMatrix::identity(dim, dim));
    raise.push(CMatrix::identity(dim, dim));
    for j in 1..=n {
        lower.push(&a * &lower[j - 1]);
        raise.push(&c * &raise[j - 1]);
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for j in 0..=n {
        sum += &raise[j] * &lower[n - j] * Complex64::new(binom_f(n, j), 0.0);
    }
    Ok(sum)
}

/// The smeared interaction `H_I(P, w) = dx * sum_x w(x) sum_n p_n
/// :phi(x)^n:`. The weight may be complex; hermiticity holds exactly when it
/// is real (and the polynomial is, which it always is here).
pub fn interaction(table: &WickTable, poly: &Polynomial, weight: &LatticeFunction) -> Result<CMatrix> {
    let space = table.space();
    let sites = space.lattice().sites();
    if weight.len() != sites {
        return Err(Error::LengthMismatch { expected: sites, found: weight.len() });
    }
    if poly.degree() > table.max_degree() {
        return Err(Error::InvalidPolynomial(format!(
            "polynomial degree {} exceeds the Wick table cap {}",
            poly.degree(),
            table.max_degree()
        )));
    }
    let dim = space.dim();
    let dx = space.lattice().spacing();
    let mut sum = CMatrix::zeros(dim, dim);
    for site in 0..sites {
        let w = weight.value(site);
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (n, &p) in poly.coeffs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            sum += table.power(site, n) * (w * p * dx);
        }
    }
    Ok(sum)
}

/// The ring-weighted interaction
/// `sum_j H_I(P^(j), R_j)` for a ring element `R = (R_0, ..., R_D)`.
///
/// With `R = w * Gamma(g)` this is the Wick-ordered shift
/// `dx * sum_x w(x) :P(phi(x) + g(x)):`, and ring multiplication matches
/// profile addition: `bold(P, w * Gamma(g) * Gamma(f)) = bold(P, w *
/// Gamma(g + f))`.
pub fn bold_interaction(table: &WickTable, poly: &Polynomial, element: &RingElement) -> Result<CMatrix> {
    let dim = table.space().dim();
    let mut sum = CMatrix::zeros(dim, dim);
    let mut deriv = poly.clone();
    for j in 0..=element.degree_cap() {
        if j > 0 {
            deriv = deriv.derivative();
        }
        if deriv.is_zero() {
            break;
        }
        sum += interaction(table, &deriv, element.component(j))?;
    }
    Ok(sum)
}

/// The time-dependent Hamiltonian `H(s) = H_0 + bold H_I(P, lambda *
/// Gamma(sum_i profile_i(s)))` for `s` in `[0, beta]`, with the Wick table
/// and the free part precomputed once.
#[derive(Debug)]
pub struct HamiltonianFamily {
    space: Arc<FockSpace>,
    poly: Polynomial,
    lambda: LatticeFunction,
    profiles: Vec<ProfileTerm>,
    beta: f64,
    table: WickTable,
    h0: CMatrix,
}

impl HamiltonianFamily {
    pub fn new(
        space: &Arc<FockSpace>,
        poly: Polynomial,
        lambda: LatticeFunction,
        profiles: Vec<ProfileTerm>,
        beta: f64,
    ) -> Result<Self> {
        Self::with_wick_scale(space, poly, lambda, profiles, beta, 1.0)
    }

    pub fn with_wick_scale(
        space: &Arc<FockSpace>,
        poly: Polynomial,
        lambda: LatticeFunction,
        profiles: Vec<ProfileTerm>,
        beta: f64,
        wick_scale: f64,
    ) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidEvolution(format!("beta must be positive and finite, got {beta}")));
        }
        let sites = space.lattice().sites();
        if lambda.len() != sites {
            return Err(Error::LengthMismatch { expected: sites, found: lambda.len() });
        }
        for term in &profiles {
            if term.base.len() != sites {
                return Err(Error::LengthMismatch { expected: sites, found: term.base.len() });
            }
            if term.beta != beta {
                return Err(Error::InvalidEvolution(format!(
                    "profile horizon {} does not match the family horizon {beta}",
                    term.beta
                )));
            }
        }
        let table = WickTable::with_wick_scale(space, poly.degree(), wick_scale)?;
        let h0 = space.free_hamiltonian().into_matrix();
        Ok(Self { space: Arc::clone(space), poly, lambda, profiles, beta, table, h0 })
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn lambda(&self) -> &LatticeFunction {
        &self.lambda
    }

    pub fn profiles(&self) -> &[ProfileTerm] {
        &self.profiles
    }

    pub fn table(&self) -> &WickTable {
        &self.table
    }

    pub fn free_part(&self) -> &CMatrix {
        &self.h0
    }

    /// The total classical profile `sum_i profile_i(s)`.
    pub fn profile_sum(&self, s: f64) -> Result<LatticeFunction> {
        let mut sum = LatticeFunction::zeros(self.space.lattice().sites());
        for term in &self.profiles {
            sum = &sum + &profile_at(term, s, self.space.omega())?;
        }
        Ok(sum)
    }

    /// The interaction part `bold H_I(P, lambda * Gamma(g(s)))` alone.
    pub fn interaction_at(&self, s: f64) -> Result<CMatrix> {
        let g = self.profile_sum(s)?;
        let element = RingElement::gamma(&g, self.poly.degree()).scalar_mult(&self.lambda)?;
        bold_interaction(&self.table, &self.poly, &element)
    }

    /// The full generator `H(s)`.
    pub fn evaluate(&self, s: f64) -> Result<CMatrix> {
        Ok(&self.h0 + self.interaction_at(s)?)
    }

    /// Same family with every data field conjugated (the polynomial is real
    /// already): conjugate coupling and conjugate profile bases. For real
    /// input data this is the family itself.
    pub fn conjugate(&self) -> Result<Self> {
        Self::with_wick_scale(
            &self.space,
            self.poly.clone(),
            self.lambda.conj(),
            self.profiles.iter().map(|t| t.conjugate()).collect(),
            self.beta,
            self.table.wick_scale(),
        )
    }

    /// Same family traversed backwards: every profile swaps its direction,
    /// so the new family at `s` equals the old one at `beta - s`.
    pub fn time_reversed(&self) -> Result<Self> {
        Self::with_wick_scale(
            &self.space,
            self.poly.clone(),
            self.lambda.clone(),
            self.profiles.iter().map(|t| t.time_reversed()).collect(),
            self.beta,
            self.table.wick_scale(),
        )
    }

    /// Same family with extra profile terms appended.
    pub fn with_extra_profiles(&self, extra: Vec<ProfileTerm>) -> Result<Self> {
        let mut profiles = self.profiles.clone();
        profiles.extend(extra);
        Self::with_wick_scale(
            &self.space,
            self.poly.clone(),
            self.lambda.clone(),
            profiles,
            self.beta,
            self.table.wick_scale(),
        )
    }
}
