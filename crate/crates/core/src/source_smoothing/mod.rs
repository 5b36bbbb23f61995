//! Separable singular sources `g(x, t) = g_t(t) q(x)` and their `m`-fold
//! integrals `G = J^m g` on the uniform time grid.
//!
//! Pure powers `t^μ` are smoothed in closed form. Products `t^μ f(t)` and
//! convolutions `t^μ * f` go through Gauss-Jacobi rules that absorb the
//! endpoint singularity into the weight.

mod jacobi;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::mp::{self, Precision};

pub use jacobi::{jacobi_rule, JacobiRule};

/// Default Gauss-Jacobi node count for the smoothing integrals.
pub const DEFAULT_QUAD_NODES: usize = 64;

/// A named scalar function evaluated in extended precision.
#[derive(Clone)]
pub struct ScalarFn {
    name: String,
    f: Arc<dyn Fn(&Float) -> Float + Send + Sync>,
}

impl ScalarFn {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Float) -> Float + Send + Sync + 'static,
    {
        ScalarFn { name: name.into(), f: Arc::new(f) }
    }

    pub fn constant(value: f64) -> Self {
        ScalarFn::new(format!("{value}"), move |x: &Float| {
            Precision::new(x.prec()).map(|p| p.from_f64(value)).unwrap_or_else(|_| Float::with_val(x.prec(), value))
        })
    }

    /// `e^t + 1`, the smooth time factor of the two-term test source.
    pub fn exp_plus_one() -> Self {
        ScalarFn::new("exp(t)+1", |t: &Float| t.clone().exp() + 1u32)
    }

    /// `e^x (1 + χ_(0,1)(x))` with `χ(0) = χ(1) = 0`.
    pub fn exp_with_indicator() -> Self {
        ScalarFn::new("exp(x)*(1+chi(0,1))", |x: &Float| {
            let base = x.clone().exp();
            if *x > 0 && *x < 1 {
                base * 2u32
            } else {
                base
            }
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &Float) -> Float {
        (self.f)(x)
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ScalarFn").field(&self.name).finish()
    }
}

/// `coefficient · t^exponent`, optionally composed with a smooth factor.
#[derive(Debug, Clone)]
pub struct TimeKernelTerm {
    coefficient: Float,
    exponent: Float,
    smooth_factor: Option<ScalarFn>,
}

impl TimeKernelTerm {
    pub fn new(coefficient: Float, exponent: Float, smooth_factor: Option<ScalarFn>) -> Result<Self> {
        if exponent.is_nan() || exponent <= -1 {
            return Err(Error::Domain(format!(
                "power exponent must exceed -1 for integrability at t = 0, got {}",
                mp::to_decimal_digits(&exponent, 12)
            )));
        }
        Ok(TimeKernelTerm { coefficient, exponent, smooth_factor })
    }

    pub fn power(coefficient: Float, exponent: Float) -> Result<Self> {
        TimeKernelTerm::new(coefficient, exponent, None)
    }

    pub fn coefficient(&self) -> &Float {
        &self.coefficient
    }

    pub fn exponent(&self) -> &Float {
        &self.exponent
    }

    pub fn smooth_factor(&self) -> Option<&ScalarFn> {
        self.smooth_factor.as_ref()
    }
}

/// How the power kernel `Σ c_i t^{μ_i}` combines with the smooth factor `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    None,
    PurePower,
    Product,
    Convolution,
}

#[derive(Debug, Clone)]
pub struct SourceSpec {
    mode: SourceMode,
    time_terms: Vec<TimeKernelTerm>,
    spatial_profile: ScalarFn,
    description: String,
}

impl SourceSpec {
    pub fn new(
        mode: SourceMode,
        time_terms: Vec<TimeKernelTerm>,
        spatial_profile: ScalarFn,
        description: impl Into<String>,
    ) -> Result<Self> {
        match mode {
            SourceMode::None if !time_terms.is_empty() => {
                return Err(Error::Config("a source without mode cannot carry time terms".into()))
            }
            SourceMode::PurePower if time_terms.iter().any(|t| t.smooth_factor.is_some()) => {
                return Err(Error::Config("pure-power sources take no smooth factor".into()))
            }
            SourceMode::Product | SourceMode::Convolution
                if time_terms.iter().any(|t| t.smooth_factor.is_none()) =>
            {
                return Err(Error::Config("product and convolution terms need a smooth factor".into()))
            }
            SourceMode::PurePower | SourceMode::Product | SourceMode::Convolution if time_terms.is_empty() => {
                return Err(Error::Config("source mode needs at least one time term".into()))
            }
            _ => {}
        }
        Ok(SourceSpec { mode, time_terms, spatial_profile, description: description.into() })
    }

    pub fn none() -> Self {
        SourceSpec {
            mode: SourceMode::None,
            time_terms: Vec::new(),
            spatial_profile: ScalarFn::constant(0.0),
            description: "g = 0".into(),
        }
    }

    pub fn mode(&self) -> SourceMode {
        self.mode
    }

    pub fn time_terms(&self) -> &[TimeKernelTerm] {
        &self.time_terms
    }

    pub fn spatial_profile(&self) -> &ScalarFn {
        &self.spatial_profile
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_zero(&self) -> bool {
        self.mode == SourceMode::None
    }

    /// `g_t(t)` at `t > 0`. Convolution terms are integrated with `quad_n`
    /// Gauss-Jacobi nodes.
    pub fn eval_time(&self, t: &Float, quad_n: usize, prec: Precision) -> Result<Float> {
        let mut acc = prec.zero();
        for term in &self.time_terms {
            let value = match self.mode {
                SourceMode::None => prec.zero(),
                SourceMode::PurePower => power_value(term, t, prec),
                SourceMode::Product => {
                    let f = term.smooth_factor.as_ref().expect("validated on construction");
                    power_value(term, t, prec) * f.eval(t)
                }
                SourceMode::Convolution => {
                    let rule = jacobi_rule(&prec.of(&term.exponent), quad_n, prec)?;
                    convolution_with_rule(term, 0, t, &rule, prec)
                }
            };
            acc += value;
        }
        Ok(acc)
    }
}

fn power_value(term: &TimeKernelTerm, t: &Float, prec: Precision) -> Float {
    let tp = if t.is_zero() && term.exponent.is_zero() { prec.one() } else { prec.of(t).pow(&term.exponent) };
    tp * &term.coefficient
}

/// Per-node values `G^n = (J^m g_t)(t_n)`, `n = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTable {
    m: usize,
    final_time: Float,
    values: Vec<Float>,
    quadrature_order: usize,
}

impl SmoothedTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Float] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn time(&self, n: usize) -> Float {
        self.final_time.clone() * n as u32 / self.steps() as u32
    }

    /// Writes `n,t_n,G^n` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "t_n", "G_n"])?;
        for (n, value) in self.values.iter().enumerate() {
            w.write_record([n.to_string(), mp::to_decimal(&self.time(n)), mp::to_decimal(value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_mu(mu: &Float) -> Result<()> {
    if mu.is_nan() || *mu <= -1 {
        return Err(Error::Domain(format!("μ must exceed -1, got {}", mp::to_decimal_digits(mu, 12))));
    }
    Ok(())
}

/// `J^m t^μ = Γ(μ+1) t^{μ+m} / Γ(μ+m+1)`.
pub fn smooth_pure_power(mu: &Float, m: usize, t: &Float, prec: Precision) -> Result<Float> {
    check_mu(mu)?;
    if m == 0 {
        return Err(Error::InvalidOrder("smoothing order m must be at least 1".into()));
    }
    if t.is_sign_negative() && !t.is_zero() {
        return Err(Error::Domain("time must be non-negative".into()));
    }
    let mu = prec.of(mu);
    if t.is_zero() {
        return Ok(prec.zero());
    }
    let exponent = mu.clone() + m as u32;
    let ratio = (mu.clone() + 1u32).gamma() / (exponent.clone() + 1u32).gamma();
    Ok(prec.of(t).pow(&exponent) * ratio)
}

fn smooth_factor(term: &TimeKernelTerm) -> Result<&ScalarFn> {
    term.smooth_factor
        .as_ref()
        .ok_or_else(|| Error::Config("term has no smooth factor to integrate".into()))
}

fn positive_time(t: &Float) -> Result<()> {
    if t.is_nan() || *t <= 0 {
        return Err(Error::Domain("smoothing quadrature needs t > 0".into()));
    }
    Ok(())
}

fn half_rule(beta: &Float, quad_n: usize, prec: Precision) -> Result<JacobiRule> {
    jacobi_rule(beta, (quad_n / 2).max(1), prec)
}

/// Gauss rules on analytic integrands converge geometrically, so the error
/// of the full rule is about the square of the relative half-rule error.
fn check_tail(full: &Float, half: &Float, prec: Precision, what: &str) -> Result<()> {
    let scale = full.clone().abs().max(&prec.one());
    let rel_half = (full.clone() - half).abs() / &scale;
    let estimate = rel_half.clone().square();
    let tol = prec.tolerance(15);
    if estimate > tol {
        return Err(Error::Accuracy(format!(
            "{what}: tail estimate {} exceeds {tol:e} (half rule off by {})",
            mp::to_decimal_digits(&estimate, 6),
            mp::to_decimal_digits(&rel_half, 6)
        )));
    }
    Ok(())
}

/// `c J^m (t^μ f) = c/Γ(m) ∫_0^t (t-s)^{m-1} s^μ f(s) ds` through the
/// substitution `s = t(1+x)/2` and the `(0, μ)` Gauss-Jacobi rule.
fn product_with_rule(term: &TimeKernelTerm, m: usize, t: &Float, rule: &JacobiRule, prec: Precision) -> Float {
    let f = term.smooth_factor.as_ref().expect("checked by caller");
    let half_t = prec.of(t) / 2u32;
    let sum = rule.integrate(|x| {
        let s = (x.clone() + 1u32) * &half_t;
        let poly = (prec.one() - x).pow(m as u32 - 1);
        poly * f.eval(&s)
    });
    let scale = half_t.pow(term.exponent.clone() + m as u32) / prec.int(m as i64).gamma();
    sum * scale * &term.coefficient
}

/// `c Γ(μ+1)/Γ(μ+m+1) ∫_0^t (t-s)^{μ+m} f(s) ds` through `s = t(1-x)/2`
/// and the `(0, μ+m)` Gauss-Jacobi rule; `m = 0` gives the plain
/// convolution `c (t^μ * f)(t)`.
fn convolution_with_rule(term: &TimeKernelTerm, m: usize, t: &Float, rule: &JacobiRule, prec: Precision) -> Float {
    let f = term.smooth_factor.as_ref().expect("checked by caller");
    let half_t = prec.of(t) / 2u32;
    let sum = rule.integrate(|x| {
        let s = (prec.one() - x) * &half_t;
        f.eval(&s)
    });
    let mu = prec.of(&term.exponent);
    let beta = mu.clone() + m as u32;
    let gamma_ratio = (mu + 1u32).gamma() / (beta.clone() + 1u32).gamma();
    sum * half_t.pow(beta + 1u32) * gamma_ratio * &term.coefficient
}

/// `J^m` of a product term `c t^μ f(t)` at time `t`.
pub fn smooth_product(term: &TimeKernelTerm, m: usize, t: &Float, quad_n: usize, prec: Precision) -> Result<Float> {
    smooth_factor(term)?;
    positive_time(t)?;
    if m == 0 {
        return Err(Error::InvalidOrder("smoothing order m must be at least 1".into()));
    }
    let beta = prec.of(&term.exponent);
    let rule = jacobi_rule(&beta, quad_n, prec)?;
    let full = product_with_rule(term, m, t, &rule, prec);
    let half = product_with_rule(term, m, t, &half_rule(&beta, quad_n, prec)?, prec);
    check_tail(&full, &half, prec, "product smoothing")?;
    Ok(full)
}

/// `J^m` of a convolution term `c (t^μ * f)(t)` at time `t`.
pub fn smooth_convolution(
    term: &TimeKernelTerm,
    m: usize,
    t: &Float,
    quad_n: usize,
    prec: Precision,
) -> Result<Float> {
    smooth_factor(term)?;
    positive_time(t)?;
    let beta = prec.of(&term.exponent) + m as u32;
    let rule = jacobi_rule(&beta, quad_n, prec)?;
    let full = convolution_with_rule(term, m, t, &rule, prec);
    let half = convolution_with_rule(term, m, t, &half_rule(&beta, quad_n, prec)?, prec);
    check_tail(&full, &half, prec, "convolution smoothing")?;
    Ok(full)
}

/// Evaluates `G^n = J^m g_t(t_n)` for `t_n = nT/N`, summing the time terms;
/// `G^0 = 0` exactly. Quadrature rules are built once per term, and the
/// halved-rule accuracy check runs at the final node where the mapped
/// integrand is widest.
pub fn build_smoothed_table(
    spec: &SourceSpec,
    m: usize,
    steps: usize,
    final_time: &Float,
    quad_n: usize,
    prec: Precision,
) -> Result<SmoothedTable> {
    if spec.mode == SourceMode::None {
        return Err(Error::Config("no source to smooth (mode none)".into()));
    }
    if m == 0 {
        return Err(Error::InvalidOrder("smoothing order m must be at least 1".into()));
    }
    if steps == 0 {
        return Err(Error::Config("time grid needs at least one step".into()));
    }
    let final_time = prec.of(final_time);
    let mut values = vec![prec.zero(); steps + 1];
    for term in &spec.time_terms {
        let rules = match spec.mode {
            SourceMode::Product => {
                let beta = prec.of(&term.exponent);
                Some((jacobi_rule(&beta, quad_n, prec)?, half_rule(&beta, quad_n, prec)?))
            }
            SourceMode::Convolution => {
                let beta = prec.of(&term.exponent) + m as u32;
                Some((jacobi_rule(&beta, quad_n, prec)?, half_rule(&beta, quad_n, prec)?))
            }
            _ => None,
        };
        for (n, slot) in values.iter_mut().enumerate().skip(1) {
            let t = final_time.clone() * n as u32 / steps as u32;
            let value = match (&rules, spec.mode) {
                (None, _) => smooth_pure_power(&term.exponent, m, &t, prec)? * &term.coefficient,
                (Some((rule, half)), SourceMode::Product) => {
                    let full = product_with_rule(term, m, &t, rule, prec);
                    if n == steps {
                        let coarse = product_with_rule(term, m, &t, half, prec);
                        check_tail(&full, &coarse, prec, &format!("product smoothing at n = {n}"))?;
                    }
                    full
                }
                (Some((rule, half)), _) => {
                    let full = convolution_with_rule(term, m, &t, rule, prec);
                    if n == steps {
                        let coarse = convolution_with_rule(term, m, &t, half, prec);
                        check_tail(&full, &coarse, prec, &format!("convolution smoothing at n = {n}"))?;
                    }
                    full
                }
            };
            *slot += value;
        }
    }
    Ok(SmoothedTable { m, final_time, values, quadrature_order: quad_n })
}

/// Unsmoothed source samples `g_t(t_n)` for `n ≥ 1`, with the `n = 0` slot
/// left at zero (never read by the schemes). Zero sources give all zeros.
pub fn build_pointwise_table(
    spec: &SourceSpec,
    steps: usize,
    final_time: &Float,
    quad_n: usize,
    prec: Precision,
) -> Result<SmoothedTable> {
    if steps == 0 {
        return Err(Error::Config("time grid needs at least one step".into()));
    }
    let final_time = prec.of(final_time);
    let mut values = vec![prec.zero(); steps + 1];
    if spec.mode != SourceMode::None {
        // convolution rules depend only on μ, so build them once
        let conv_rules = if spec.mode == SourceMode::Convolution {
            spec.time_terms
                .iter()
                .map(|term| jacobi_rule(&prec.of(&term.exponent), quad_n, prec))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        for (n, slot) in values.iter_mut().enumerate().skip(1) {
            let t = final_time.clone() * n as u32 / steps as u32;
            if spec.mode == SourceMode::Convolution {
                for (term, rule) in spec.time_terms.iter().zip(&conv_rules) {
                    *slot += convolution_with_rule(term, 0, &t, rule, prec);
                }
            } else {
                *slot = spec.eval_time(&t, quad_n, prec)?;
            }
        }
    }
    Ok(SmoothedTable { m: 0, final_time, values, quadrature_order: quad_n })
}
