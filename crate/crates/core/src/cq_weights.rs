//! BDF generating polynomials and the power-series weights of the discrete
//! fractional derivative `∂^α_{τ,k}` and the integer-order derivative
//! `∂^m_{τ,k}`.
//!
//! Weights are `τ`-free: the stepper divides by `τ^order` when applying them.

use std::io::Write;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::mp::{self, Complex, Precision};

pub const MAX_BDF_ORDER: usize = 6;
pub const MAX_EULERIAN_ROW: usize = 12;

/// Dense polynomial `Σ coeffs[j] ξ^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    coeffs: Vec<Float>,
}

impl PolyCoeffs {
    pub fn new(coeffs: Vec<Float>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("polynomial needs at least one coefficient".into()));
        }
        Ok(PolyCoeffs { coeffs })
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.coeffs[0].prec()).expect("constructed from a valid precision")
    }

    pub fn eval(&self, xi: &Complex) -> Complex {
        let prec = self.precision();
        let mut acc = Complex::zero(prec);
        for c in self.coeffs.iter().rev() {
            acc = &acc * xi;
            acc.re += c;
        }
        acc
    }
}

/// Coefficients `ω_0..ω_N` of `(Σ c_j ξ^j)^order`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    order: Float,
    k: usize,
    weights: Vec<Float>,
}

impl WeightTable {
    pub fn order(&self) -> &Float {
        &self.order
    }

    /// BDF order of the generating polynomial (its degree).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[Float] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Writes `j,weight` rows with full-precision decimal strings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "weight"])?;
        for (j, value) in self.weights.iter().enumerate() {
            w.write_record([j.to_string(), mp::to_decimal(value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact rational coefficients of `Σ_{j=1}^k (1-ξ)^j / j`.
pub fn bdf_poly_exact(k: usize) -> Result<Vec<Rational>> {
    if !(1..=MAX_BDF_ORDER).contains(&k) {
        return Err(Error::InvalidOrder(format!("BDF order must be in 1..={MAX_BDF_ORDER}, got {k}")));
    }
    let mut coeffs = vec![Rational::new(); k + 1];
    for j in 1..=k {
        for (i, c) in coeffs.iter_mut().enumerate().take(j + 1) {
            let binom = Integer::from(Integer::binomial_u(j as u32, i as u32));
            let mut term = Rational::from((binom, Integer::from(j)));
            if i % 2 == 1 {
                term = -term;
            }
            *c += term;
        }
    }
    Ok(coeffs)
}

/// Coefficients of `τ δ_{τ,k}(ξ)` at the requested precision.
pub fn bdf_poly(k: usize, prec: Precision) -> Result<PolyCoeffs> {
    let coeffs = bdf_poly_exact(k)?
        .into_iter()
        .map(|c| Float::with_val(prec.bits(), c))
        .collect();
    PolyCoeffs::new(coeffs)
}

fn positive_constant(poly: &PolyCoeffs) -> Result<&Float> {
    let c0 = &poly.coeffs[0];
    if c0.is_sign_negative() || c0.is_zero() || c0.is_nan() {
        return Err(Error::IllPosedBranch(format!(
            "constant coefficient must be positive for a real power, got {}",
            mp::to_decimal_digits(c0, 12)
        )));
    }
    Ok(c0)
}

/// First `n + 1` coefficients of `poly^p` by the power-series recurrence
/// `w_0 = c_0^p`, `w_n = (n c_0)^{-1} Σ_{j=1}^{min(n,k)} ((p+1) j - n) c_j w_{n-j}`.
pub fn frac_power_weights(poly: &PolyCoeffs, p: &Float, n: usize) -> Result<WeightTable> {
    let c0 = positive_constant(poly)?;
    let prec = poly.precision();
    let k = poly.degree();
    let p = prec.of(p);
    let p_plus_one = p.clone() + 1u32;
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(c0.clone().pow(&p));
    for idx in 1..=n {
        let mut acc = prec.zero();
        for j in 1..=idx.min(k) {
            let cj = &poly.coeffs[j];
            if cj.is_zero() {
                continue;
            }
            let mut factor = p_plus_one.clone() * j as u32;
            factor -= idx as u32;
            factor *= cj;
            acc += &factor * &weights[idx - j];
        }
        acc /= c0;
        acc /= idx as u32;
        weights.push(acc);
    }
    Ok(WeightTable { order: p, k, weights })
}

/// First `n + 1` coefficients of `poly^m` by repeated multiplication; exact
/// up to rounding, with support `k m`.
pub fn int_power_weights(poly: &PolyCoeffs, m: usize, n: usize) -> Result<WeightTable> {
    let prec = poly.precision();
    let k = poly.degree();
    let mut acc: Vec<Float> = vec![prec.one()];
    for _ in 0..m {
        let mut next = vec![prec.zero(); (acc.len() + k).min(n + 1)];
        for (i, a) in acc.iter().enumerate() {
            for (j, c) in poly.coeffs.iter().enumerate() {
                if i + j > n {
                    break;
                }
                next[i + j] += a * c;
            }
        }
        acc = next;
    }
    acc.resize(n + 1, prec.zero());
    Ok(WeightTable { order: prec.int(m as i64), k, weights: acc })
}

/// Cross-check route: samples `poly(ξ)^p` on the circle `|ξ| = ρ`,
/// `ρ = ε^{1/(2N)}` with `ε = 10^{-digits/2}`, and inverts a radix-2 FFT.
///
/// The sampling count is the smallest power of two that is at least
/// `2(N+1)` and pushes the aliasing factor `ρ^M` below `10^{-digits-8}`;
/// the transform runs with enough guard bits to absorb the `ρ^{-N}`
/// amplification of rounding errors.
pub fn frac_power_weights_fft(poly: &PolyCoeffs, p: &Float, n: usize) -> Result<WeightTable> {
    positive_constant(poly)?;
    let prec = poly.precision();
    let digits = f64::from(prec.digits());
    let half_digits = digits / 2.0;
    // log10 ρ = -half_digits / (2N)
    let n_eff = n.max(1);
    let log10_rho = -half_digits / (2.0 * n_eff as f64);
    let target = digits + 8.0;
    let min_samples = (target / -log10_rho).ceil() as usize;
    let samples = (2 * (n + 1)).max(min_samples).next_power_of_two();
    let guard = ((half_digits / 2.0) * std::f64::consts::LOG2_10).ceil() as u32 + 64;
    let work = prec.widened(guard);

    let eps = Float::with_val(work.bits(), 10u32).pow(-half_digits);
    let rho = eps.pow(work.one() / (2 * n_eff as u32));
    let wpoly = PolyCoeffs::new(poly.coeffs.iter().map(|c| work.of(c)).collect())?;
    let wp = work.of(p);
    let two_pi = work.pi() * 2u32;

    let mut values: Vec<Complex> = (0..samples)
        .map(|l| {
            let phi = two_pi.clone() * l as u32 / samples as u32;
            let xi = Complex::polar(&rho, &phi);
            wpoly.eval(&xi).powf(&wp)
        })
        .collect();
    fft_in_place(&mut values, false, work);

    let inv_m = work.one() / samples as u32;
    let recovered: Vec<Float> = values
        .iter()
        .enumerate()
        .map(|(j, c)| {
            // b_j = a_j ρ^j
            c.re.clone() * &inv_m / rho.clone().pow(j as u32)
        })
        .collect();

    // The upper half holds coefficients that alias into the lower ones with
    // an extra factor ρ^{M - j}.
    let mut tail = work.zero();
    for (j, c) in values.iter().enumerate().skip(samples / 2) {
        let b = c.abs() * &inv_m * rho.clone().pow((samples - j) as u32);
        if b > tail {
            tail = b;
        }
    }
    let tolerance = prec.tolerance(10);
    if tail > tolerance {
        return Err(Error::Accuracy(format!(
            "FFT coefficient tail estimate {} exceeds {tolerance:e} with {samples} samples",
            mp::to_decimal_digits(&tail, 6)
        )));
    }

    let weights = recovered.into_iter().take(n + 1).map(|w| prec.of(&w)).collect();
    Ok(WeightTable { order: prec.of(p), k: poly.degree(), weights })
}

/// Iterative radix-2 Cooley-Tukey transform, `X_j = Σ x_l e^{∓2πi jl/M}`
/// (minus sign for the forward direction).
fn fft_in_place(data: &mut [Complex], inverse: bool, prec: Precision) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign: i32 = if inverse { 1 } else { -1 };
    let mut len = 2;
    while len <= n {
        let angle: Float = prec.pi() * 2u32 * sign / len as u32;
        let twiddles: Vec<Complex> = (0..len / 2)
            .map(|t| Complex::polar(&prec.one(), &(angle.clone() * t as u32)))
            .collect();
        for start in (0..n).step_by(len) {
            for (t, w) in twiddles.iter().enumerate() {
                let odd = &data[start + t + len / 2] * w;
                let even = data[start + t].clone();
                data[start + t] = &even + &odd;
                data[start + t + len / 2] = &even - &odd;
            }
        }
        len <<= 1;
    }
}

/// Row `l` of the Eulerian coefficients `a_{l,1..l}` from the proof of the
/// `γ_l` bound: `γ_l(ξ) = Σ_{n≥1} n^l ξ^n = Σ_j a_{l,j} ξ^j / (1-ξ)^{l+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerianRow {
    l: usize,
    a: Vec<u64>,
}

impl EulerianRow {
    pub fn l(&self) -> usize {
        self.l
    }

    /// `a_{l,1}, ..., a_{l,l}`.
    pub fn coeffs(&self) -> &[u64] {
        &self.a
    }

    /// `γ_l(e^{-η})`, with `1 - e^{-η}` formed through `expm1` so that small
    /// `η` keeps full relative accuracy.
    pub fn gamma_at_exp_neg(&self, eta: &Float) -> Float {
        let prec = eta.prec();
        let xi = (-eta.clone()).exp();
        let one_minus_xi = -((-eta.clone()).exp_m1());
        let mut num = Float::new(prec);
        let mut power = xi.clone();
        for &a in &self.a {
            num += &power * Float::with_val(prec, a);
            power *= &xi;
        }
        num / one_minus_xi.pow(self.l as u32 + 1)
    }

    /// `γ_l(ξ)` for `|ξ| < 1`.
    pub fn gamma(&self, xi: &Float) -> Float {
        let prec = xi.prec();
        let mut num = Float::new(prec);
        let mut power = xi.clone();
        for &a in &self.a {
            num += &power * Float::with_val(prec, a);
            power *= xi;
        }
        let denom = (Float::with_val(prec, 1) - xi).pow(self.l as u32 + 1);
        num / denom
    }
}

/// Eulerian row by `a_{l,j} = j a_{l-1,j} + (l+1-j) a_{l-1,j-1}` with
/// `a_{0,0} = 1` and `a_{l,0} = a_{l,l+1} = 0` for `l ≥ 1`.
pub fn eulerian_coeffs(l: usize) -> Result<EulerianRow> {
    if !(1..=MAX_EULERIAN_ROW).contains(&l) {
        return Err(Error::InvalidOrder(format!("Eulerian row must be in 1..={MAX_EULERIAN_ROW}, got {l}")));
    }
    // prev[j] = a_{r-1, j} for j = 0..=r
    let mut prev: Vec<u64> = vec![1, 0];
    for r in 1..=l {
        let mut next = vec![0u64; r + 2];
        for (j, slot) in next.iter_mut().enumerate().take(r + 1).skip(1) {
            let keep = prev.get(j).copied().unwrap_or(0) * j as u64;
            let shift = prev.get(j - 1).copied().unwrap_or(0) * (r + 1 - j) as u64;
            *slot = keep + shift;
        }
        prev = next;
    }
    Ok(EulerianRow { l, a: prev[1..=l].to_vec() })
}
