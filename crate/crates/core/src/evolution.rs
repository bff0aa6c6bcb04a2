//! Ordered exponentials of a time-dependent generator family.
//!
//! For a family `H(s)` on `[0, beta]` the two-parameter kernels are the
//! solutions of
//!
//! ```text
//! d/dt2 R(t2, t1) = -H(t2) R(t2, t1),    R(t1, t1) = 1,
//! d/dt2 A(t2, t1) = -A(t2, t1) H(t2),    A(t1, t1) = 1,
//! ```
//!
//! so in the time-ordered kernel `R` later generators multiply on the
//! *left*, `R(t2, t1) ~ exp(-h H(t2)) ... exp(-h H(t1))`, while the
//! anti-ordered kernel `A` puts them on the *right*. Differentiating the
//! composition law `R(t3, t1) = R(t3, t2) R(t2, t1)` in `t2` gives the
//! companion equation `d/dt1 R(t2, t1) = R(t2, t1) H(t1)`; the two residual
//! functions here check both sides by central differences.
//!
//! Both kernels are produced by a fixed-step explicit integrator (classical
//! Runge-Kutta or the midpoint rule), so kernel errors scale as the fourth
//! (resp. second) power of the step. [`dyson_partial`] instead sums the
//! first few iterated integrals
//!
//! ```text
//! sum_{j<=order} (-1)^j  int_{t1 <= s_j <= ... <= s_1 <= t2}
//!                        H(s_1) ... H(s_j) ds,
//! ```
//!
//! by nested Gauss-Legendre quadrature; the truncation defect shrinks like
//! `(t2 - t1)^(order + 1)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interaction::HamiltonianFamily;
use crate::linalg::{gauss_legendre, operator_norm, CMatrix};

/// Explicit fixed-step integrator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta.
    RungeKutta4,
    /// Explicit midpoint rule, second order.
    Midpoint,
}

/// Step count and integrator for kernel propagation.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub steps: usize,
    pub method: Method,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { steps: 200, method: Method::RungeKutta4 }
    }
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn rhs(h: &CMatrix, y: &CMatrix, side: Side) -> CMatrix {
    match side {
        Side::Left => -(h * y),
        Side::Right => -(y * h),
    }
}

fn validate_interval(family: &HamiltonianFamily, t1: f64, t2: f64) -> Result<()> {
    if !t1.is_finite() || !t2.is_finite() || t2 < t1 {
        return Err(Error::InvalidEvolution(format!(
            "need an ordered finite interval, got [{t1}, {t2}]"
        )));
    }
    let beta = family.beta();
    let slack = 1e-9 * beta.max(1.0);
    if t1 < -slack || t2 > beta + slack {
        return Err(Error::TimeOutOfRange { time: if t1 < -slack { t1 } else { t2 }, lo: 0.0, hi: beta });
    }
    Ok(())
}

fn propagate(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    config: &EvolutionConfig,
    side: Side,
) -> Result<CMatrix> {
    validate_interval(family, t1, t2)?;
    if config.steps == 0 {
        return Err(Error::InvalidEvolution("step count must be positive".into()));
    }
    let dim = family.space().dim();
    let mut y = CMatrix::identity(dim, dim);
    if t2 == t1 {
        return Ok(y);
    }
    let n = config.steps;
    let h = (t2 - t1) / n as f64;
    let mut h_lo = family.evaluate(t1)?;
    for i in 0..n {
        let t = t1 + i as f64 * h;
        match config.method {
            Method::Midpoint => {
                let h_mid = family.evaluate((t + 0.5 * h).min(t2))?;
                let k1 = rhs(&h_lo, &y, side);
                let y_mid = &y + &k1 * Complex64::new(0.5 * h, 0.0);
                let k2 = rhs(&h_mid, &y_mid, side);
                y += k2 * Complex64::new(h, 0.0);
                h_lo = family.evaluate((t + h).min(t2))?;
            }
            Method::RungeKutta4 => {
                let h_mid = family.evaluate((t + 0.5 * h).min(t2))?;
                let h_hi = family.evaluate((t + h).min(t2))?;
                let k1 = rhs(&h_lo, &y, side);
                let k2 = rhs(&h_mid, &(&y + &k1 * Complex64::new(0.5 * h, 0.0)), side);
                let k3 = rhs(&h_mid, &(&y + &k2 * Complex64::new(0.5 * h, 0.0)), side);
                let k4 = rhs(&h_hi, &(&y + &k3 * Complex64::new(h, 0.0)), side);
                let incr = k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4;
                y += incr * Complex64::new(h / 6.0, 0.0);
                h_lo = h_hi;
            }
        }
    }
    Ok(y)
}

/// The time-ordered kernel `R(t2, t1)`, later generators on the left.
pub fn time_ordered_exp(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    config: &EvolutionConfig,
) -> Result<CMatrix> {
    propagate(family, t1, t2, config, Side::Left)
}

/// The anti-time-ordered kernel `A(t2, t1)`, later generators on the right.
pub fn anti_time_ordered_exp(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    config: &EvolutionConfig,
) -> Result<CMatrix> {
    propagate(family, t1, t2, config, Side::Right)
}

/// Central-difference residual of `d/dt1 R(t2, t1) = R(t2, t1) H(t1)` in the
/// operator norm. Near the ends of `[0, t2]` a one-sided second-order
/// stencil keeps the truncation error at `eps^2`.
pub fn right_ode_residual(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    config: &EvolutionConfig,
    eps: f64,
) -> Result<f64> {
    validate_interval(family, t1, t2)?;
    check_eps(eps, t2 - t1)?;
    let r = |a: f64| time_ordered_exp(family, a, t2, config);
    let derivative = stencil(&r, t1, eps, 0.0, t2)?;
    let expected = r(t1)? * family.evaluate(t1)?;
    Ok(operator_norm(&(derivative - expected)))
}

/// Central-difference residual of `d/dt2 R(t2, t1) = -H(t2) R(t2, t1)`.
pub fn left_ode_residual(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    config: &EvolutionConfig,
    eps: f64,
) -> Result<f64> {
    validate_interval(family, t1, t2)?;
    check_eps(eps, t2 - t1)?;
    let r = |b: f64| time_ordered_exp(family, t1, b, config);
    let derivative = stencil(&r, t2, eps, t1, family.beta())?;
    let expected = -(family.evaluate(t2)? * r(t2)?);
    Ok(operator_norm(&(derivative - expected)))
}

fn check_eps(eps: f64, span: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() || 2.0 * eps >= span.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidEvolution(format!(
            "difference step {eps} must be positive and small against the interval {span}"
        )));
    }
    Ok(())
}

/// Second-order difference of `f` at `x`, staying inside `[lo, hi]`:
/// central where possible, else the three-point one-sided stencil.
fn stencil(
    f: &dyn Fn(f64) -> Result<CMatrix>,
    x: f64,
    eps: f64,
    lo: f64,
    hi: f64,
) -> Result<CMatrix> {
    let half = Complex64::new(0.5 / eps, 0.0);
    if x - eps >= lo && x + eps <= hi {
        Ok((f(x + eps)? - f(x - eps)?) * half)
    } else if x + 2.0 * eps <= hi {
        let c0 = Complex64::new(-1.5 / eps, 0.0);
        let c1 = Complex64::new(2.0 / eps, 0.0);
        let c2 = Complex64::new(-0.5 / eps, 0.0);
        Ok(f(x)? * c0 + f(x + eps)? * c1 + f(x + 2.0 * eps)? * c2)
    } else if x - 2.0 * eps >= lo {
        let c0 = Complex64::new(1.5 / eps, 0.0);
        let c1 = Complex64::new(-2.0 / eps, 0.0);
        let c2 = Complex64::new(0.5 / eps, 0.0);
        Ok(f(x)? * c0 + f(x - eps)? * c1 + f(x - 2.0 * eps)? * c2)
    } else {
        Err(Error::InvalidEvolution(format!(
            "no room for a second-order stencil at {x} within [{lo}, {hi}]"
        )))
    }
}

/// The order-`order` partial sum of the iterated-integral expansion of
/// `R(t2, t1)`, with every simplex integral evaluated by nested
/// Gauss-Legendre quadrature on `quad_points` nodes per level.
pub fn dyson_partial(
    family: &HamiltonianFamily,
    t1: f64,
    t2: f64,
    order: usize,
    quad_points: usize,
) -> Result<CMatrix> {
    validate_interval(family, t1, t2)?;
    if quad_points < 2 {
        return Err(Error::InvalidEvolution(format!(
            "need at least two quadrature nodes, got {quad_points}"
        )));
    }
    let (nodes, weights) = gauss_legendre(quad_points);
    let dim = family.space().dim();
    let mut sum = CMatrix::identity(dim, dim);
    for j in 1..=order {
        let term = iterated_integral(family, t1, t2, j, &nodes, &weights)?;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += term * Complex64::new(sign, 0.0);
    }
    Ok(sum)
}

/// `K_j(t) = int_{t1}^{t} H(s) K_(j-1)(s) ds`, the ordered simplex integral
/// with the latest generator leftmost.
fn iterated_integral(
    family: &HamiltonianFamily,
    t1: f64,
    t: f64,
    j: usize,
    nodes: &[f64],
    weights: &[f64],
) -> Result<CMatrix> {
    let dim = family.space().dim();
    if j == 0 {
        return Ok(CMatrix::identity(dim, dim));
    }
    let center = 0.5 * (t + t1);
    let radius = 0.5 * (t - t1);
    let mut acc = CMatrix::zeros(dim, dim);
    for (&x, &w) in nodes.iter().zip(weights) {
        let s = center + radius * x;
        let inner = iterated_integral(family, t1, s, j - 1, nodes, weights)?;
        acc += family.evaluate(s)? * inner * Complex64::new(w * radius, 0.0);
    }
    Ok(acc)
}
