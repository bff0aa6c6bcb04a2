//! Truncated bosonic Fock space over the lattice eigenmodes.
//!
//! Basis vectors are occupation tuples `(n_1, ..., n_L)` over the real
//! eigenmodes of `omega`, kept while the total particle number satisfies
//! `sum_k n_k <= N`. States are enumerated in graded lexicographic order
//! (by total number, then lexicographically), so for any cap `p <= N` the
//! *first* `binom(p + L, L)` basis vectors span the `<= p` particle sector;
//! truncation-sensitive checks use that leading block.
//!
//! Smeared ladder operators expand in mode coefficients
//! `f_k = dx * sum_x u_k(x) f(x)`:
//!
//! ```text
//! a(f)  = sum_k f_k A_k,        a*(f) = sum_k f_k A_k^T,
//! ```
//!
//! both *linear* in `f`; for complex `f` the creation operator is the
//! transpose of `a(f)`, not the conjugate transpose. On states that keep
//! total number `<= N - 1` the canonical commutator is exact:
//! `[a(h), a*(f)] = pair(h, f) * 1`; the top layer sees the truncation, and
//! [`FockSpace::ccr_defect`] measures exactly that.
//!
//! The free Hamiltonian `H_0 = sum_k omega_k A_k^T A_k` is diagonal here, so
//! its heat kernel `exp(-beta H_0)` is evaluated exactly entry by entry.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::Result;
use crate::lattice::{LatticeFunction, LatticeSpec, Omega};
use crate::linalg::{operator_norm, CMatrix};

/// Which ladder operator a coherent exponential is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Annihilation,
    Creation,
}

/// `binom(n + l, l)` without intermediate overflow at desk scales.
fn graded_dimension(n: usize, l: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..l {
        acc = acc * (n + i + 1) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// The truncated Fock space; immutable after construction and shared by the
/// operators built on it.
#[derive(Debug)]
pub struct FockSpace {
    lattice: LatticeSpec,
    omega: Omega,
    n_max: usize,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// Deliberate mis-scaling of the field smearing `(2 omega)^(-1/2) delta`,
    /// exposed for mutation experiments; 1.0 in normal operation.
    field_scale: f64,
}

impl FockSpace {
    pub fn new(lattice: LatticeSpec, n_max: usize) -> Arc<Self> {
        Self::with_field_scale(lattice, n_max, 1.0)
    }

    /// Like [`FockSpace::new`] but scales the single-site field smearing by
    /// `field_scale`. Anything other than 1.0 is a deliberately broken
    /// convention used to demonstrate that the identity checks notice.
    pub fn with_field_scale(lattice: LatticeSpec, n_max: usize, field_scale: f64) -> Arc<Self> {
        let omega = Omega::new(&lattice);
        let sites = lattice.sites();
        let mut basis = Vec::with_capacity(graded_dimension(n_max, sites));
        for total in 0..=n_max {
            push_compositions(total as u32, sites, &mut Vec::with_capacity(sites), &mut basis);
        }
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.clone(), i))
            .collect();
        Arc::new(Self { lattice, omega, n_max, basis, index, field_scale })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn field_scale(&self) -> f64 {
        self.field_scale
    }

    /// Dimension of the sector with total particle number `<= cap`; because
    /// of the graded ordering this sector occupies basis indices
    /// `0..graded_dim(cap)`.
    pub fn graded_dim(&self, cap: usize) -> usize {
        graded_dimension(cap.min(self.n_max), self.lattice.sites())
    }

    /// The vacuum state as a coordinate vector.
    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::from_element(self.dim(), Complex64::new(0.0, 0.0));
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    fn operator(self: &Arc<Self>, matrix: CMatrix, label: impl Into<String>) -> FockOperator {
        FockOperator { space: Arc::clone(self), matrix, label: label.into() }
    }

    /// The identity operator.
    pub fn identity_op(self: &Arc<Self>) -> FockOperator {
        self.operator(CMatrix::identity(self.dim(), self.dim()), "1")
    }

    pub fn zero_op(self: &Arc<Self>) -> FockOperator {
        self.operator(CMatrix::zeros(self.dim(), self.dim()), "0")
    }

    /// Smeared annihilation operator `a(f) = sum_k f_k A_k`.
    pub fn annihilate(self: &Arc<Self>, f: &LatticeFunction) -> Result<FockOperator> {
        let coeffs = self.omega.mode_coefficients(f)?;
        let dim = self.dim();
        let sites = self.lattice.sites();
        let mut m = CMatrix::zeros(dim, dim);
        let mut scratch: Vec<u32>;
        for (col, occ) in self.basis.iter().enumerate() {
            for k in 0..sites {
                if occ[k] == 0 {
                    continue;
                }
                scratch = occ.clone();
                scratch[k] -= 1;
                let row = self.index[&scratch];
                m[(row, col)] += coeffs[k] * (occ[k] as f64).sqrt();
            }
        }
        Ok(self.operator(m, "a"))
    }

    /// Smeared creation operator `a*(f) = sum_k f_k A_k^T` — the same
    /// coefficients as [`FockSpace::annihilate`], transposed structure, no
    /// conjugation. States already at the cap are annihilated by it.
    pub fn create(self: &Arc<Self>, f: &LatticeFunction) -> Result<FockOperator> {
        let coeffs = self.omega.mode_coefficients(f)?;
        let dim = self.dim();
        let sites = self.lattice.sites();
        let mut m = CMatrix::zeros(dim, dim);
        let mut scratch: Vec<u32>;
        for (col, occ) in self.basis.iter().enumerate() {
            let total: u32 = occ.iter().sum();
            if (total as usize) >= self.n_max {
                continue;
            }
            for k in 0..sites {
                scratch = occ.clone();
                scratch[k] += 1;
                let row = self.index[&scratch];
                m[(row, col)] += coeffs[k] * ((occ[k] + 1) as f64).sqrt();
            }
        }
        Ok(self.operator(m, "a*"))
    }

    /// Coherent exponential `exp(a(f))` or `exp(a*(f))`.
    ///
    /// Ladder operators move the total particle number by one, so the power
    /// series terminates exactly at order `N`: this is the *exact*
    /// exponential on the truncated space, not an approximation.
    pub fn coherent_exp(self: &Arc<Self>, f: &LatticeFunction, kind: LadderKind) -> Result<FockOperator> {
        let ladder = match kind {
            LadderKind::Annihilation => self.annihilate(f)?,
            LadderKind::Creation => self.create(f)?,
        };
        let dim = self.dim();
        let mut sum = CMatrix::identity(dim, dim);
        let mut term = CMatrix::identity(dim, dim);
        for j in 1..=self.n_max {
            term = &term * &ladder.matrix / Complex64::new(j as f64, 0.0);
            sum += &term;
        }
        let label = match kind {
            LadderKind::Annihilation => "exp(a)",
            LadderKind::Creation => "exp(a*)",
        };
        Ok(self.operator(sum, label))
    }

    /// `H_0 = sum_k omega_k A_k^T A_k`, diagonal with eigenvalue
    /// `sum_k omega_k n_k` on an occupation state. The vacuum eigenvalue is
    /// exactly zero; no renormalisation is applied.
    pub fn free_hamiltonian(self: &Arc<Self>) -> FockOperator {
        let freqs = self.omega.frequencies();
        let diag = DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|occ| {
                let e: f64 = occ.iter().zip(freqs).map(|(&n, &w)| n as f64 * w).sum();
                Complex64::new(e, 0.0)
            }),
        );
        self.operator(CMatrix::from_diagonal(&diag), "H0")
    }

    /// The exact free heat kernel `exp(-beta H_0)`, evaluated entrywise on
    /// the diagonal. Negative `beta` gives the (well-defined, truncated)
    /// inverse kernel, which the tests use for conjugation identities.
    pub fn free_semigroup(self: &Arc<Self>, beta: f64) -> FockOperator {
        let freqs = self.omega.frequencies();
        let diag = DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|occ| {
                let e: f64 = occ.iter().zip(freqs).map(|(&n, &w)| n as f64 * w).sum();
                Complex64::new((-beta * e).exp(), 0.0)
            }),
        );
        self.operator(CMatrix::from_diagonal(&diag), "exp(-bH0)")
    }

    /// Total particle number operator, diagonal.
    pub fn number_operator(self: &Arc<Self>) -> FockOperator {
        let diag = DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|occ| {
                Complex64::new(occ.iter().sum::<u32>() as f64, 0.0)
            }),
        );
        self.operator(CMatrix::from_diagonal(&diag), "N")
    }

    /// The smearing function behind the field at `site`:
    /// `(2 omega)^(-1/2) dirac(site)`, times the debug `field_scale`.
    pub fn field_smearing(&self, site: usize) -> Result<LatticeFunction> {
        let d = self.lattice.dirac(site)?;
        let smeared = self.omega.inv_sqrt_two_omega(&d)?;
        Ok(smeared.scale(Complex64::new(self.field_scale, 0.0)))
    }

    /// The field operator `phi(site) = a(d) + a*(d)` with
    /// `d = (2 omega)^(-1/2) dirac(site)`; real symmetric.
    pub fn field_operator(self: &Arc<Self>, site: usize) -> Result<FockOperator> {
        let d = self.field_smearing(site)?;
        let a = self.annihilate(&d)?;
        let c = self.create(&d)?;
        let mut op = &a + &c;
        op.label = format!("phi({site})");
        Ok(op)
    }

    /// The Wick-ordering constant at `site`: `pair(d, d)` for the field
    /// smearing `d`. Equals the vacuum expectation of `phi(site)^2`.
    pub fn wick_constant(&self, site: usize) -> Result<Complex64> {
        let d = self.field_smearing(site)?;
        self.lattice.pair(&d, &d)
    }

    /// Operator norm of `[a(h), a*(f)] - pair(h, f) 1` compressed to the
    /// sector with total number `<= N - 1`, where the commutator relation
    /// holds exactly up to roundoff. The full-space defect is dominated by
    /// the top layer and grows with `N`.
    pub fn ccr_defect(self: &Arc<Self>, h: &LatticeFunction, f: &LatticeFunction) -> Result<f64> {
        if self.n_max == 0 {
            return Ok(0.0);
        }
        let a = self.annihilate(h)?;
        let c = self.create(f)?;
        let p = self.lattice.pair(h, f)?;
        let defect = &(&a * &c) - &(&c * &a);
        let mut defect = defect.matrix;
        for i in 0..self.dim() {
            defect[(i, i)] -= p;
        }
        let cap = self.graded_dim(self.n_max - 1);
        Ok(operator_norm(&defect.view((0, 0), (cap, cap)).into_owned()))
    }
}

fn push_compositions(remaining: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if slots == 1 {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=remaining {
        prefix.push(first);
        push_compositions(remaining - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

/// A dense operator on a shared [`FockSpace`], tagged with a short label for
/// diagnostics.
#[derive(Clone)]
pub struct FockOperator {
    space: Arc<FockSpace>,
    matrix: CMatrix,
    label: String,
}

impl FockOperator {
    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn from_matrix(space: &Arc<FockSpace>, matrix: CMatrix, label: impl Into<String>) -> Self {
        assert_eq!(matrix.nrows(), space.dim(), "matrix must match the space dimension");
        assert_eq!(matrix.ncols(), space.dim(), "matrix must match the space dimension");
        FockOperator { space: Arc::clone(space), matrix, label: label.into() }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: &self.matrix * factor,
            label: self.label.clone(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: self.matrix.adjoint(),
            label: format!("({})^+", self.label),
        }
    }

    /// Plain transpose, no conjugation.
    pub fn transpose(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            matrix: self.matrix.transpose(),
            label: format!("({})^T", self.label),
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }

    /// The top-left block acting on the sector with total number `<= cap`.
    pub fn compressed(&self, cap: usize) -> CMatrix {
        let d = self.space.graded_dim(cap);
        self.matrix.view((0, 0), (d, d)).into_owned()
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operators live on different spaces");
        (&self.matrix - &other.matrix)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    fn assert_same_space(&self, other: &Self) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "operators live on different spaces ({} vs {})",
            self.dim(),
            other.dim()
        );
    }
}

impl std::fmt::Debug for FockOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FockOperator[{} on dim {}]", self.label, self.dim())
    }
}

impl std::ops::Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, other: &FockOperator) -> FockOperator {
        self.assert_same_space(other);
        FockOperator {
            space: Arc::clone(&self.space),
            matrix: &self.matrix + &other.matrix,
            label: format!("{} + {}", self.label, other.label),
        }
    }
}

impl std::ops::Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, other: &FockOperator) -> FockOperator {
        self.assert_same_space(other);
        FockOperator {
            space: Arc::clone(&self.space),
            matrix: &self.matrix - &other.matrix,
            label: format!("{} - {}", self.label, other.label),
        }
    }
}

impl std::ops::Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, other: &FockOperator) -> FockOperator {
        self.assert_same_space(other);
        FockOperator {
            space: Arc::clone(&self.space),
            matrix: &self.matrix * &other.matrix,
            label: format!("{} {}", self.label, other.label),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_site_space(n_max: usize) -> Arc<FockSpace> {
        FockSpace::new(LatticeSpec::new(1, 1.0, 1.0).unwrap(), n_max)
    }

    fn unit_mode(space: &Arc<FockSpace>) -> LatticeFunction {
        space.omega().mode(0)
    }

    #[test]
    fn dimension_matches_stars_and_bars() {
        for (l, n, expected) in [(1, 4, 5), (2, 3, 10), (3, 4, 35), (2, 0, 1)] {
            let space = FockSpace::new(LatticeSpec::new(l, 0.5, 1.0).unwrap(), n);
            assert_eq!(space.dim(), expected, "L = {l}, N = {n}");
        }
    }

    #[test]
    fn basis_is_graded_then_lexicographic() {
        let space = FockSpace::new(LatticeSpec::new(2, 1.0, 1.0).unwrap(), 2);
        let expected: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
        ];
        assert_eq!(space.basis(), expected.as_slice());
        // Leading blocks are the low-particle sectors, independent of N.
        assert_eq!(space.graded_dim(0), 1);
        assert_eq!(space.graded_dim(1), 3);
        let bigger = FockSpace::new(LatticeSpec::new(2, 1.0, 1.0).unwrap(), 5);
        assert_eq!(&bigger.basis()[..6], expected.as_slice());
    }

    #[test]
    fn single_mode_lowering_matrix_is_explicit() {
        let space = single_site_space(2);
        let a = space.annihilate(&unit_mode(&space)).unwrap();
        let m = a.matrix();
        let expected = [
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 2.0f64.sqrt()],
            [0.0, 0.0, 0.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[(i, j)].re, expected[i][j], epsilon = 1e-15);
                assert_eq!(m[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn creation_is_the_unconjugated_transpose() {
        let space = FockSpace::new(LatticeSpec::new(2, 0.7, 1.3).unwrap(), 4);
        let f = LatticeFunction::new(vec![
            Complex64::new(0.4, -0.9),
            Complex64::new(-1.1, 0.3),
        ]);
        let a = space.annihilate(&f).unwrap();
        let c = space.create(&f).unwrap();
        assert_eq!(c.matrix(), &a.matrix().transpose());
        // For complex f this is *not* the adjoint.
        assert!(c.max_diff(&a.adjoint()) > 0.1);
    }

    #[test]
    fn annihilators_commute_exactly() {
        let space = FockSpace::new(LatticeSpec::new(3, 0.8, 1.1).unwrap(), 5);
        let h = LatticeFunction::new(vec![
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.2, 0.9),
            Complex64::new(1.0, -0.5),
        ]);
        let g = LatticeFunction::new(vec![
            Complex64::new(-0.7, 0.1),
            Complex64::new(0.6, 0.6),
            Complex64::new(0.2, -1.2),
        ]);
        let ah = space.annihilate(&h).unwrap();
        let ag = space.annihilate(&g).unwrap();
        let zero = space.zero_op();
        assert!((&(&ah * &ag) - &(&ag * &ah)).max_diff(&zero) <= 1e-14);
        let ch = space.create(&h).unwrap();
        let cg = space.create(&g).unwrap();
        assert!((&(&ch * &cg) - &(&cg * &ch)).max_diff(&zero) <= 1e-14);
    }

    #[test]
    fn ccr_holds_on_the_protected_sector() {
        for l in 1..=3 {
            let spec = LatticeSpec::new(l, 0.6, 1.2).unwrap();
            let space = FockSpace::new(spec, 6);
            let h = LatticeFunction::new(
                (0..l).map(|x| Complex64::new(0.3 + 0.2 * x as f64, -0.4 + 0.1 * x as f64)).collect(),
            );
            let f = LatticeFunction::new(
                (0..l).map(|x| Complex64::new(-0.5 + 0.3 * x as f64, 0.2 + 0.2 * x as f64)).collect(),
            );
            let defect = space.ccr_defect(&h, &f).unwrap();
            assert!(defect <= 1e-12, "L = {l}: defect = {defect:.3e}");
        }
    }

    #[test]
    fn full_space_ccr_defect_is_the_top_layer_value() {
        // On the whole truncated space the commutator fails only on the top
        // layer; for a single unit-coefficient mode with N = 2 the defect
        // matrix is diag(0, 0, -(N + 1)), of norm 3.
        let space = single_site_space(2);
        let u = unit_mode(&space);
        let a = space.annihilate(&u).unwrap();
        let c = space.create(&u).unwrap();
        let p = space.lattice().pair(&u, &u).unwrap();
        let mut defect = (&(&a * &c) - &(&c * &a)).into_matrix();
        for i in 0..3 {
            defect[(i, i)] -= p;
        }
        assert_relative_eq!(operator_norm(&defect), 3.0, max_relative = 1e-13);
        // The protected-sector defect is pure roundoff (sqrt(2)^2 - 2).
        assert!(space.ccr_defect(&u, &u).unwrap() <= 1e-15);
    }

    #[test]
    fn coherent_exponential_matches_closed_form() {
        // <m| exp(c a*) |n> = c^(m-n) sqrt(m!/n!) / (m-n)! for m >= n.
        let space = single_site_space(3);
        let c = Complex64::new(0.37, -0.81);
        let f = unit_mode(&space).scale(c);
        let e = space.coherent_exp(&f, LadderKind::Creation).unwrap();
        let fact = [1.0f64, 1.0, 2.0, 6.0];
        for m in 0..4usize {
            for n in 0..4usize {
                let expected = if m >= n {
                    c.powu((m - n) as u32) * (fact[m] / fact[n]).sqrt() / fact[m - n]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!(
                    (e.matrix()[(m, n)] - expected).norm() <= 1e-14,
                    "entry ({m}, {n})"
                );
            }
        }
        // Explicit spot value: entry (2, 0) is c^2 / sqrt(2).
        let spot = c * c / 2.0f64.sqrt();
        assert!((e.matrix()[(2, 0)] - spot).norm() <= 1e-15);
    }

    #[test]
    fn coherent_exponential_inverts_by_negation() {
        let space = FockSpace::new(LatticeSpec::new(2, 0.9, 1.4).unwrap(), 5);
        let f = LatticeFunction::new(vec![
            Complex64::new(0.6, 0.2),
            Complex64::new(-0.4, 0.7),
        ]);
        for kind in [LadderKind::Creation, LadderKind::Annihilation] {
            let plus = space.coherent_exp(&f, kind).unwrap();
            let minus = space
                .coherent_exp(&f.scale(Complex64::new(-1.0, 0.0)), kind)
                .unwrap();
            let prod = &plus * &minus;
            assert!(prod.max_diff(&space.identity_op()) <= 1e-13);
        }
    }

    #[test]
    fn coherent_exponential_of_zero_is_identity() {
        let space = single_site_space(4);
        let z = LatticeFunction::zeros(1);
        let e = space.coherent_exp(&z, LadderKind::Creation).unwrap();
        assert_eq!(e.max_diff(&space.identity_op()), 0.0);
    }

    #[test]
    fn free_hamiltonian_counts_quanta() {
        let space = single_site_space(4);
        let h0 = space.free_hamiltonian();
        for n in 0..=4 {
            assert_relative_eq!(h0.matrix()[(n, n)].re, n as f64, epsilon = 1e-15);
        }
        // Vacuum eigenvalue is exactly zero, not renormalised away.
        assert_eq!(h0.matrix()[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn heat_kernel_pulls_creation_through() {
        // exp(-b H0) a*(f) exp(+b H0) = a*(exp(-b omega) f), exactly on the
        // truncated space because both sides kill the top layer.
        let spec = LatticeSpec::new(2, 0.75, 1.2).unwrap();
        let space = FockSpace::new(spec, 5);
        let f = LatticeFunction::new(vec![
            Complex64::new(0.8, -0.1),
            Complex64::new(0.05, 0.65),
        ]);
        let beta = 0.7;
        let lhs = &(&space.free_semigroup(beta) * &space.create(&f).unwrap())
            * &space.free_semigroup(-beta);
        let smoothed = space.omega().semigroup(beta, &f).unwrap();
        let rhs = space.create(&smoothed).unwrap();
        assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn field_operator_entries_on_one_site() {
        // With m = dx = 1 the smearing is 1/sqrt(2), so phi has entries
        // sqrt(n/2) on the first off-diagonals.
        let space = single_site_space(3);
        let phi = space.field_operator(0).unwrap();
        for n in 1..=3usize {
            let expected = (n as f64 / 2.0).sqrt();
            assert_relative_eq!(phi.matrix()[(n - 1, n)].re, expected, epsilon = 1e-14);
            assert_relative_eq!(phi.matrix()[(n, n - 1)].re, expected, epsilon = 1e-14);
        }
        let wick = space.wick_constant(0).unwrap();
        assert_relative_eq!(wick.re, 0.5, epsilon = 1e-14);
        assert_eq!(wick.im, 0.0);
    }

    #[test]
    fn field_operator_is_real_symmetric() {
        let space = FockSpace::new(LatticeSpec::new(3, 0.5, 0.9).unwrap(), 4);
        for site in 0..3 {
            let phi = space.field_operator(site).unwrap();
            assert!(phi.max_diff(&phi.transpose()) <= 1e-14);
            assert!(phi.matrix().iter().all(|v| v.im == 0.0));
        }
    }

    #[test]
    fn two_point_function_matches_the_smearing_pair() {
        let space = FockSpace::new(LatticeSpec::new(4, 0.6, 1.1).unwrap(), 3);
        let vac = space.vacuum();
        for x in 0..4 {
            for y in 0..4 {
                let phix = space.field_operator(x).unwrap();
                let phiy = space.field_operator(y).unwrap();
                let prod = &phix * &phiy;
                let got = vac.dotc(&prod.apply(&vac));
                let dx = space.field_smearing(x).unwrap();
                let dy = space.field_smearing(y).unwrap();
                let expected = space.lattice().pair(&dx, &dy).unwrap();
                assert!((got - expected).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn mismatched_function_lengths_are_rejected() {
        let space = FockSpace::new(LatticeSpec::new(2, 1.0, 1.0).unwrap(), 3);
        let wrong = LatticeFunction::from_real(&[1.0, 2.0, 3.0]);
        assert!(space.annihilate(&wrong).is_err());
        assert!(space.create(&wrong).is_err());
        assert!(space.coherent_exp(&wrong, LadderKind::Creation).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        // The canonical commutator holds for arbitrary complex smearing
        // functions wherever the raised state still fits under the cutoff.
        #[test]
        fn commutator_holds_for_random_functions(
            entries in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
            sites in 1usize..3,
            n_max in 2usize..7,
        ) {
            let space = FockSpace::new(LatticeSpec::new(sites, 0.8, 1.1).unwrap(), n_max);
            let take = |offset: usize| {
                LatticeFunction::new(
                    (0..sites)
                        .map(|i| {
                            let (re, im) = entries[(offset + i) % entries.len()];
                            Complex64::new(re, im)
                        })
                        .collect(),
                )
            };
            let defect = space.ccr_defect(&take(0), &take(2)).unwrap();
            proptest::prop_assert!(defect <= 1e-12, "defect {defect:.3e}");
        }
    }
}
