//! Extended-precision scalar helpers shared by every module.
//!
//! All numerics run on MPFR floats (`rug::Float`). The working precision is
//! carried explicitly as a [`Precision`] so that every constructed value has
//! a known significand width.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Significand width in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl TryFrom<u32> for Precision {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        Precision::new(bits)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

impl Precision {
    pub const DEFAULT: Precision = Precision(256);
    pub const MIN_BITS: u32 = 53;

    pub fn new(bits: u32) -> Result<Self> {
        if !(Self::MIN_BITS..=1 << 20).contains(&bits) {
            return Err(Error::Config(format!(
                "precision must be between {} and {} bits, got {bits}",
                Self::MIN_BITS,
                1 << 20
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Decimal digits carried by the significand, `floor(bits * log10(2))`.
    pub fn digits(self) -> u32 {
        (f64::from(self.0) * std::f64::consts::LOG10_2).floor() as u32
    }

    /// `10^{-(digits - slack)}` as an `f64`.
    pub fn tolerance(self, slack: u32) -> f64 {
        10f64.powi(-(self.digits().saturating_sub(slack) as i32))
    }

    /// A wider precision for internal work that must absorb cancellation.
    pub fn widened(self, extra_bits: u32) -> Precision {
        Precision(self.0 + extra_bits)
    }

    pub fn zero(self) -> Float {
        Float::new(self.0)
    }

    pub fn one(self) -> Float {
        Float::with_val(self.0, 1)
    }

    pub fn int(self, value: i64) -> Float {
        Float::with_val(self.0, value)
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.0, Constant::Pi)
    }

    /// Exact ratio `num / den`, correctly rounded.
    pub fn ratio(self, num: i64, den: i64) -> Float {
        Float::with_val(self.0, num) / den
    }

    /// Converts an `f64` through its shortest decimal representation, so that
    /// `0.3` becomes the 256-bit rounding of 3/10 rather than of the binary
    /// double nearest to it.
    pub fn from_f64(self, value: f64) -> Float {
        if value.is_finite() {
            self.parse(&format!("{value}")).expect("Display of f64 is a valid float literal")
        } else {
            Float::with_val(self.0, value)
        }
    }

    pub fn parse(self, text: &str) -> Result<Float> {
        let parsed = Float::parse(text.trim())
            .map_err(|e| Error::Parse(format!("invalid decimal `{text}`: {e}")))?;
        Ok(Float::with_val(self.0, parsed))
    }

    pub fn of(self, value: &Float) -> Float {
        Float::with_val(self.0, value)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DEFAULT
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// Shortest decimal string that reads back to exactly the same value at the
/// value's own precision.
pub fn to_decimal(value: &Float) -> String {
    value.to_string_radix(10, None)
}

/// Decimal string with a fixed number of significant digits.
pub fn to_decimal_digits(value: &Float, digits: usize) -> String {
    value.to_string_radix(10, Some(digits.max(1)))
}

/// Largest absolute entry, zero for an empty slice.
pub fn max_abs(values: &[Float]) -> Float {
    let prec = values.first().map_or(53, Float::prec);
    values
        .iter()
        .fold(Float::new(prec), |acc, v| if v.clone().abs() > acc { v.clone().abs() } else { acc })
}

/// Minimal complex number over MPFR floats. Only the operations the FFT and
/// the contour quadrature need are provided.
#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn zero(prec: Precision) -> Self {
        Complex { re: prec.zero(), im: prec.zero() }
    }

    pub fn real(re: Float) -> Self {
        let im = Float::new(re.prec());
        Complex { re, im }
    }

    /// `r * e^{i phi}`.
    pub fn polar(r: &Float, phi: &Float) -> Self {
        let (s, c) = phi.clone().sin_cos(Float::new(phi.prec()));
        Complex { re: c * r, im: s * r }
    }

    pub fn conj(&self) -> Self {
        Complex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> Float {
        let mut out = self.re.clone().square();
        out += self.im.clone().square();
        out
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    /// Principal branch `z^p = exp(p log z)`.
    pub fn powf(&self, p: &Float) -> Self {
        if self.re.is_zero() && self.im.is_zero() {
            return self.clone();
        }
        let log_r = self.abs().ln();
        let theta = self.arg();
        let r = (log_r * p).exp();
        Complex::polar(&r, &(theta * p))
    }

    pub fn exp(&self) -> Self {
        let r = self.re.clone().exp();
        Complex::polar(&r, &self.im)
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        Complex { re: self.re.clone() / &d, im: -(self.im.clone() / &d) }
    }

    pub fn scale(&self, s: &Float) -> Self {
        Complex { re: self.re.clone() * s, im: self.im.clone() * s }
    }

    pub fn div(&self, other: &Complex) -> Self {
        self * &other.recip()
    }

    /// `self += a * b`.
    pub fn add_mul(&mut self, a: &Complex, b: &Complex) {
        self.re += &a.re * &b.re;
        self.re -= &a.im * &b.im;
        self.im += &a.re * &b.im;
        self.im += &a.im * &b.re;
    }

    /// `self -= a * b`.
    pub fn sub_mul(&mut self, a: &Complex, b: &Complex) {
        self.re -= &a.re * &b.re;
        self.re += &a.im * &b.im;
        self.im -= &a.re * &b.im;
        self.im -= &a.im * &b.re;
    }
}

impl Add<&Complex> for &Complex {
    type Output = Complex;
    fn add(self, rhs: &Complex) -> Complex {
        Complex { re: self.re.clone() + &rhs.re, im: self.im.clone() + &rhs.im }
    }
}

impl Sub<&Complex> for &Complex {
    type Output = Complex;
    fn sub(self, rhs: &Complex) -> Complex {
        Complex { re: self.re.clone() - &rhs.re, im: self.im.clone() - &rhs.im }
    }
}

impl Mul<&Complex> for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        let mut re = self.re.clone() * &rhs.re;
        re -= &self.im * &rhs.im;
        let mut im = self.re.clone() * &rhs.im;
        im += &self.im * &rhs.re;
        Complex { re, im }
    }
}

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex { re: -self.re, im: -self.im }
    }
}
