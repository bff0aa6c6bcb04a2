//! Small dense-matrix utilities shared across the crate: an operator norm,
//! a scaling-and-squaring matrix exponential, commutators, and Gauss-Legendre
//! quadrature nodes for the iterated-integral expansions.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
}

/// Largest entry magnitude; cheap scale estimate used for tolerances.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Matrix exponential by scaling and squaring with a Taylor tail.
///
/// The argument is scaled by `2^-k` until its infinity norm is at most 1/2,
/// the series is summed until terms fall below machine precision relative to
/// the partial sum, and the result is squared `k` times. For the
/// desk-scale, moderate-norm matrices used here this is accurate to a few
/// ulps and has no Pade breakdown cases to worry about.
pub fn matrix_exp(m: &CMatrix) -> CMatrix {
    assert_eq!(m.nrows(), m.ncols(), "matrix exponential needs a square matrix");
    let dim = m.nrows();
    if dim == 0 {
        return m.clone();
    }
    let inf_norm = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let scalings = if inf_norm > 0.5 {
        (inf_norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / Complex64::new(2.0f64.powi(scalings as i32), 0.0);

    let mut sum = identity(dim);
    let mut term = identity(dim);
    for j in 1..200 {
        term = &term * &scaled / Complex64::new(j as f64, 0.0);
        sum += &term;
        if max_abs(&term) <= 1e-17 * max_abs(&sum).max(1.0) {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..scalings {
        result = &result * &result;
    }
    result
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; standard and accurate to
/// machine precision for the small orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} at x by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
