//! Reference solutions independent of the time stepper.
//!
//! [`contour_solution`] evaluates the inverse Laplace transform
//!
//! ```text
//! V(t) = 1/(2πi) ∫_Γ e^{zt} (z^α - A)^{-1} (z^{-1} A v + Γ(μ+1) z^{-(μ+1)} q) dz
//! ```
//!
//! for `g = t^μ q` on the contour made of the arc `|z| = κ`, `|arg z| ≤ θ`
//! and the two rays `arg z = ±θ`, `|z| ≥ κ`. Only the upper half is
//! integrated; the lower half is its conjugate mirror, so `V = Im(I_+)/π`.
//! Both pieces use 32-point Gauss-Legendre panels. `A` is reduced once to
//! Hessenberg form so each node costs a single `O(n^2)` complex solve.
//!
//! [`mittag_leffler`] sums the power series with enough guard bits to absorb
//! the cancellation between its largest terms.

use std::f64::consts::{LN_10, PI};

use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, HessenbergForm};
use crate::mp::{Complex, Precision};
use crate::source_smoothing::jacobi_rule;
use crate::spatial::SpatialOperator;

/// Gauss-Legendre nodes per contour panel.
pub const PANEL_NODES: usize = 32;
/// Upper bound on `t` times the length of a ray panel.
const PANEL_SPAN: f64 = 12.0;
/// Largest `|z|^{1/α}` the series is summed for; beyond this the guard bits
/// needed exceed any sensible budget.
const ML_SERIES_LIMIT: f64 = 2.0e5;
pub const ML_MAX_ARG: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourParams {
    /// Ray angle in `(π/2, π)`.
    pub theta: f64,
    /// Arc radius; `1/t` when absent.
    pub kappa: Option<f64>,
    /// Ray truncation radius; `(D ln 10 + 5)/(t |cos θ|)` when absent.
    pub radius: Option<f64>,
    pub n_ray: usize,
    pub n_arc: usize,
}

impl Default for ContourParams {
    fn default() -> Self {
        ContourParams { theta: 0.75 * PI, kappa: None, radius: None, n_ray: 400, n_arc: 100 }
    }
}

#[derive(Debug, Clone)]
struct Resolved {
    theta: f64,
    kappa: f64,
    radius: f64,
}

impl ContourParams {
    fn resolve(&self, t: f64, prec: Precision) -> Result<Resolved> {
        if !(self.theta > PI / 2.0 && self.theta < PI) {
            return Err(Error::Config(format!("contour angle must lie in (π/2, π), got {}", self.theta)));
        }
        let kappa = self.kappa.unwrap_or(1.0 / t);
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Config(format!("arc radius must be positive, got {kappa}")));
        }
        let cos = self.theta.cos().abs();
        let radius = self
            .radius
            .unwrap_or((f64::from(prec.digits()) * LN_10 + 5.0) / (t * cos));
        if !(radius.is_finite() && radius > kappa) {
            return Err(Error::Config(format!("ray radius {radius} must exceed arc radius {kappa}")));
        }
        if self.n_ray == 0 || self.n_arc == 0 {
            return Err(Error::Config("contour pieces need at least one node".into()));
        }
        let tail_log10 = -radius * t * cos / LN_10;
        if tail_log10 > -f64::from(prec.digits().saturating_sub(10)) {
            return Err(Error::Accuracy(format!(
                "contour truncation tail e^(R t cos θ) ≈ 1e{tail_log10:.1} is above working tolerance"
            )));
        }
        Ok(Resolved { theta: self.theta, kappa, radius })
    }
}

/// Ray breakpoints: doubling panels from `κ` while shorter than the span
/// cap, then equal panels up to `R`. At least `ceil(n_ray / 32)` panels.
fn ray_breaks(kappa: f64, radius: f64, t: f64, n_ray: usize) -> Vec<f64> {
    let cap = PANEL_SPAN / t;
    let budget = n_ray.div_ceil(PANEL_NODES);
    let mut breaks = vec![kappa];
    let mut s = kappa;
    while s * 2.0 <= radius && s <= cap && breaks.len() < budget {
        s *= 2.0;
        breaks.push(s);
    }
    let geometric = breaks.len() - 1;
    let needed = ((radius - s) / cap).ceil() as usize;
    let uniform = needed.max(budget.saturating_sub(geometric)).max(1);
    let step = (radius - s) / uniform as f64;
    for i in 1..uniform {
        breaks.push(s + step * i as f64);
    }
    breaks.push(radius);
    breaks
}

/// Integration nodes `z` and weights `w = ω_gauss · dz/ds` on the upper half
/// of the contour.
fn upper_contour(res: &Resolved, t: f64, n_ray: usize, n_arc: usize, prec: Precision) -> Result<Vec<(Complex, Complex)>> {
    let rule = jacobi_rule(&prec.zero(), PANEL_NODES, prec)?;
    let theta = prec.from_f64(res.theta);
    let kappa = prec.from_f64(res.kappa);
    let mut out = Vec::new();

    let arc_panels = n_arc.div_ceil(PANEL_NODES);
    for p in 0..arc_panels {
        let a = theta.clone() * p as u32 / arc_panels as u32;
        let b = theta.clone() * (p + 1) as u32 / arc_panels as u32;
        let half = (b.clone() - &a) / 2u32;
        let mid = (b + &a) / 2u32;
        for (s, w) in rule.nodes().iter().zip(rule.weights()) {
            let phi = mid.clone() + half.clone() * s;
            let z = Complex::polar(&kappa, &phi);
            // dz/dφ = i z
            let dz = Complex::new(-z.im.clone(), z.re.clone());
            out.push((z, dz.scale(&(half.clone() * w))));
        }
    }

    let dir = Complex::polar(&prec.one(), &theta);
    let breaks: Vec<Float> = ray_breaks(res.kappa, res.radius, t, n_ray).into_iter().map(|b| prec.from_f64(b)).collect();
    // the first break must coincide with the arc end
    let mut breaks = breaks;
    breaks[0] = kappa.clone();
    for pair in breaks.windows(2) {
        let half = (pair[1].clone() - &pair[0]) / 2u32;
        let mid = (pair[1].clone() + &pair[0]) / 2u32;
        for (s, w) in rule.nodes().iter().zip(rule.weights()) {
            let r = mid.clone() + half.clone() * s;
            out.push((dir.scale(&r), dir.scale(&(half.clone() * w))));
        }
    }
    Ok(out)
}

struct Integrand {
    hess: HessenbergForm,
    alpha: Float,
    av: Vec<Float>,
    q: Vec<Float>,
    gamma_coeff: Float,
    neg_mu_minus_one: Float,
}

impl Integrand {
    fn new(a: &DenseMatrix, alpha: f64, v: &[Float], mu: f64, q: &[Float], prec: Precision) -> Result<Self> {
        let hess = HessenbergForm::reduce(a)?;
        let av = hess.to_basis(&a.matvec(v)?);
        let q = hess.to_basis(q);
        let mu = prec.from_f64(mu);
        let gamma_coeff = (mu.clone() + 1u32).gamma();
        Ok(Integrand { hess, alpha: prec.from_f64(alpha), av, q, gamma_coeff, neg_mu_minus_one: -(mu + 1u32) })
    }

    /// `Σ w e^{zt} (z^α - H)^{-1} b̃(z)` in the Hessenberg basis.
    fn accumulate(&self, nodes: &[(Complex, Complex)], t: &Float, prec: Precision) -> Result<Vec<Complex>> {
        let n = self.av.len();
        let mut acc = vec![Complex::zero(prec); n];
        for (z, w) in nodes {
            let shift = z.powf(&self.alpha);
            let zinv = z.recip();
            let zq = z.powf(&self.neg_mu_minus_one).scale(&self.gamma_coeff);
            let rhs: Vec<Complex> = (0..n)
                .map(|i| {
                    let mut r = zinv.scale(&self.av[i]);
                    r.add_mul(&zq, &Complex::real(self.q[i].clone()));
                    r
                })
                .collect();
            let y = self.hess.solve_shifted(&shift, &rhs)?;
            let factor = &z.scale(t).exp() * w;
            for (a, yi) in acc.iter_mut().zip(&y) {
                a.add_mul(&factor, yi);
            }
        }
        Ok(acc)
    }
}

/// `u(t) = v + V(t)` for `∂_t^α (u - v) - A u = t^μ q` with `A` the
/// Chebyshev Laplacian.
pub fn contour_solution(
    op: &SpatialOperator,
    alpha: f64,
    v: &[Float],
    mu: f64,
    q: &[Float],
    t: f64,
    params: &ContourParams,
) -> Result<Vec<Float>> {
    contour_solution_operator(op.laplacian(), alpha, v, mu, q, t, params)
}

/// As [`contour_solution`] for any real matrix `A` whose spectrum lies in
/// the left half-plane.
pub fn contour_solution_operator(
    a: &DenseMatrix,
    alpha: f64,
    v: &[Float],
    mu: f64,
    q: &[Float],
    t: f64,
    params: &ContourParams,
) -> Result<Vec<Float>> {
    let (prec, res) = check_inputs(a, alpha, v, mu, q, t, params)?;
    if v.iter().chain(q).all(Float::is_zero) {
        return Ok(vec![prec.zero(); v.len()]);
    }
    let integrand = Integrand::new(a, alpha, v, mu, q, prec)?;
    let nodes = upper_contour(&res, t, params.n_ray, params.n_arc, prec)?;
    let acc = integrand.accumulate(&nodes, &prec.from_f64(t), prec)?;
    let pi = prec.pi();
    let shift_basis: Vec<Float> = acc.into_iter().map(|c| c.im / &pi).collect();
    let shift = integrand.hess.from_basis(&shift_basis);
    Ok(shift.into_iter().zip(v).map(|(s, vi)| s + vi).collect())
}

/// `1/(2πi) ∫_Γ` over the whole contour without using conjugate symmetry;
/// returns the complex shift `V(t)` in the original basis. Its imaginary part
/// measures how far the computed integrand is from being conjugate-symmetric.
pub fn contour_shift_full(
    a: &DenseMatrix,
    alpha: f64,
    v: &[Float],
    mu: f64,
    q: &[Float],
    t: f64,
    params: &ContourParams,
) -> Result<Vec<Complex>> {
    let (prec, res) = check_inputs(a, alpha, v, mu, q, t, params)?;
    let integrand = Integrand::new(a, alpha, v, mu, q, prec)?;
    let upper = upper_contour(&res, t, params.n_ray, params.n_arc, prec)?;
    // lower half: mirror points, traversed in the opposite direction
    let lower: Vec<(Complex, Complex)> = upper.iter().map(|(z, w)| (z.conj(), -w.conj())).collect();
    let tf = prec.from_f64(t);
    let mut acc = integrand.accumulate(&upper, &tf, prec)?;
    for (a, b) in acc.iter_mut().zip(integrand.accumulate(&lower, &tf, prec)?) {
        *a = &*a + &b;
    }
    // divide by 2πi: (x + iy)/(2πi) = (y - ix)/(2π)
    let two_pi = prec.pi() * 2u32;
    let re: Vec<Float> = acc.iter().map(|c| c.im.clone() / &two_pi).collect();
    let im: Vec<Float> = acc.iter().map(|c| -(c.re.clone() / &two_pi)).collect();
    let re = integrand.hess.from_basis(&re);
    let im = integrand.hess.from_basis(&im);
    Ok(re.into_iter().zip(im).map(|(r, i)| Complex::new(r, i)).collect())
}

fn check_inputs(
    a: &DenseMatrix,
    alpha: f64,
    v: &[Float],
    mu: f64,
    q: &[Float],
    t: f64,
    params: &ContourParams,
) -> Result<(Precision, Resolved)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("contour solution needs t > 0, got {t}")));
    }
    if !(mu > -1.0) {
        return Err(Error::Domain(format!("source exponent must exceed -1, got {mu}")));
    }
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::Shape { expected: n, actual: a.cols() });
    }
    for len in [v.len(), q.len()] {
        if len != n {
            return Err(Error::Shape { expected: n, actual: len });
        }
    }
    let prec = Precision::new(v.first().map_or(Precision::DEFAULT.bits(), Float::prec))?;
    let res = params.resolve(t, prec)?;
    Ok((prec, res))
}

/// `E_{α,β}(z) = Σ_j z^j / Γ(αj + β)` for `0 < α ≤ 1`, `|z| ≤ 50`, at the
/// precision of `z`.
pub fn mittag_leffler(alpha: &Float, beta: &Float, z: &Float) -> Result<Float> {
    let prec = Precision::new(z.prec())?;
    if !(*alpha > 0 && *alpha <= 1) {
        return Err(Error::Domain(format!("Mittag-Leffler order must lie in (0, 1], got {}", alpha.to_f64())));
    }
    if z.is_nan() || z.clone().abs() > ML_MAX_ARG {
        return Err(Error::Domain(format!("|z| = {} outside the series regime |z| <= {ML_MAX_ARG}", z.to_f64())));
    }
    if z.is_zero() {
        return Ok(prec.of(beta).gamma().recip());
    }
    let a = alpha.to_f64();
    let b = beta.to_f64();
    let ln_z = z.to_f64().abs().ln();
    if (ln_z / a).exp() > ML_SERIES_LIMIT {
        return Err(Error::Domain(format!(
            "series for E_{a}(z) at |z| = {} needs more guard bits than supported",
            z.to_f64().abs()
        )));
    }
    // largest term magnitude, to size the guard bits
    let ln_term = |j: usize| j as f64 * ln_z - ln_abs_gamma(a * j as f64 + b);
    let mut peak = ln_term(0);
    let mut peak_j = 0;
    let mut j = 1;
    loop {
        let lt = ln_term(j);
        if lt > peak {
            peak = lt;
            peak_j = j;
        } else if j > peak_j + 8 && lt < peak - 40.0 {
            break;
        }
        j += 1;
    }
    // alternating sums can end far below their peak term; twice the peak
    // exponent covers the loss for every order in (0, 1]
    let extra = (2.0 * peak.max(0.0) / std::f64::consts::LN_2).ceil() as u32 + 32;
    let work = prec.widened(extra);
    let zw = work.of(z);
    let aw = work.of(alpha);
    let bw = work.of(beta);
    let stop = Float::with_val(work.bits(), Float::u_exp(1, -(prec.bits() as i32) - 16));
    let mut sum = work.zero();
    let mut power = work.one();
    let mut j = 0usize;
    loop {
        let arg = aw.clone() * j as u32 + &bw;
        let term = power.clone() * arg.gamma().recip();
        sum += &term;
        if j > peak_j && !term.is_zero() && term.clone().abs() < stop.clone() * sum.clone().abs() {
            break;
        }
        if j > peak_j && term.is_zero() && power.is_zero() {
            break;
        }
        power *= &zw;
        j += 1;
    }
    Ok(prec.of(&sum))
}

fn ln_abs_gamma(x: f64) -> f64 {
    Float::with_val(64, x).ln_abs_gamma().0.to_f64()
}

/// `v E_α(-λ t^α)`, the solution of `∂_t^α (u - v) = -λ u`.
pub fn scalar_reference(alpha: &Float, lambda: &Float, v: &Float, t: &Float) -> Result<Float> {
    if !(*lambda > 0) {
        return Err(Error::Domain(format!("decay rate must be positive, got {}", lambda.to_f64())));
    }
    if *t < 0 {
        return Err(Error::Domain(format!("time must be non-negative, got {}", t.to_f64())));
    }
    let prec = Precision::new(v.prec())?;
    if t.is_zero() {
        return Ok(v.clone());
    }
    let arg = -(prec.of(t).pow(alpha) * lambda);
    let beta = prec.one();
    Ok(mittag_leffler(alpha, &beta, &arg)? * v)
}

#[cfg(test)]
mod tests;
