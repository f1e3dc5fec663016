//! Arbitrary-precision complex numbers used by every numeric pipeline.
//!
//! Precision is requested in decimal digits. Internally every pipeline works
//! with [`GUARD_DIGITS`] extra digits, so a value requested at `d` digits is
//! accurate to roughly `10^(-d)` after the usual accumulation of rounding.

use std::cmp::max;
use std::fmt;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Rational};

/// Extra decimal digits carried by all numeric computations.
pub const GUARD_DIGITS: u32 = 15;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Binary precision needed for `digits` decimal digits plus guard digits.
pub fn working_bits(digits: u32) -> u32 {
    ((digits + GUARD_DIGITS) as f64 * LOG2_10).ceil() as u32 + 8
}

/// Binary precision for exactly `digits` decimal digits, without guard.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + 4
}

pub fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

/// `10^(-digits)` as a float.
pub fn tolerance(digits: i32, bits: u32) -> Float {
    Float::with_val(bits, 10).pow(-digits)
}

/// A complex number with MPFR/MPC precision.
///
/// Binary operations return a value at the larger of the two operand
/// precisions, so exact constants such as `0` and `1` can be created at a
/// small precision without degrading results.
#[derive(Clone, PartialEq)]
pub struct BigComplex(pub Complex);

const CONST_BITS: u32 = 64;

impl BigComplex {
    pub fn from_float(re: Float) -> Self {
        let prec = re.prec();
        BigComplex(Complex::with_val(prec, (re, 0)))
    }

    pub fn from_parts(re: Float, im: Float) -> Self {
        let prec = max(re.prec(), im.prec());
        BigComplex(Complex::with_val(prec, (re, im)))
    }

    pub fn from_rational(q: &Rational, bits: u32) -> Self {
        BigComplex(Complex::with_val(bits, (q, 0)))
    }

    pub fn from_i64(v: i64) -> Self {
        BigComplex(Complex::with_val(CONST_BITS, (v, 0)))
    }

    /// `i*pi` at the given precision.
    pub fn i_pi(bits: u32) -> Self {
        BigComplex(Complex::with_val(bits, (0, pi(bits))))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec().0
    }

    pub fn real(&self) -> &Float {
        self.0.real()
    }

    pub fn imag(&self) -> &Float {
        self.0.imag()
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.0.abs_ref())
    }

    /// Absolute value as an `f64`, for tail-bound bookkeeping.
    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn ln(&self) -> Self {
        BigComplex(Complex::with_val(self.prec(), self.0.ln_ref()))
    }

    pub fn exp(&self) -> Self {
        BigComplex(Complex::with_val(self.prec(), self.0.exp_ref()))
    }

    pub fn recip(&self) -> Self {
        BigComplex(Complex::with_val(self.prec(), self.0.recip_ref()))
    }

    pub fn powi(&self, k: i32) -> Self {
        BigComplex(Complex::with_val(self.prec(), self.0.clone().pow(k)))
    }

    pub fn with_prec(&self, bits: u32) -> Self {
        BigComplex(Complex::with_val(bits, &self.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = max(self.prec(), other.prec());
        BigComplex(Complex::with_val(prec, &self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let prec = max(self.prec(), other.prec());
        BigComplex(Complex::with_val(prec, &self.0 - &other.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = max(self.prec(), other.prec());
        BigComplex(Complex::with_val(prec, &self.0 * &other.0))
    }

    pub fn div(&self, other: &Self) -> Self {
        let prec = max(self.prec(), other.prec());
        BigComplex(Complex::with_val(prec, &self.0 / &other.0))
    }

    pub fn neg(&self) -> Self {
        BigComplex(Complex::with_val(self.prec(), -&self.0))
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        BigComplex(Complex::with_val(self.prec(), &self.0 * q))
    }

    pub fn is_zero(&self) -> bool {
        self.0.real().is_zero() && self.0.imag().is_zero()
    }

    /// Decimal rendering `(re, im)` with `digits` significant digits each.
    pub fn to_decimal_parts(&self, digits: usize) -> (String, String) {
        (
            self.0.real().to_string_radix(10, Some(digits)),
            self.0.imag().to_string_radix(10, Some(digits)),
        )
    }

    /// Parses a decimal real and imaginary part; precision follows the
    /// length of the longer string.
    pub fn parse_parts(re: &str, im: &str) -> Option<Self> {
        let digits = max(re.len(), im.len()).max(20) as u32;
        let bits = bits_for_digits(digits) + 16;
        let re = Float::parse(re).ok()?;
        let im = Float::parse(im).ok()?;
        Some(BigComplex(Complex::with_val(
            bits,
            (Float::with_val(bits, re), Float::with_val(bits, im)),
        )))
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal_parts(20);
        write!(f, "({re} + {im}i)")
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Parses a decimal or `p/q` string into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Ok(q) = s.parse::<Rational>() {
        return Some(q);
    }
    // Decimal literal such as "0.1" or "-2.5e-3".
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: rug::Integer = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let mut q = Rational::from(numer);
    if scale >= 0 {
        q *= Rational::from(ten.pow(scale as u32));
    } else {
        q /= Rational::from(ten.pow((-scale) as u32));
    }
    if neg {
        q = -q;
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_rationals_are_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), Rational::from((1, 10)));
        assert_eq!(parse_rational("-2.5e-3").unwrap(), Rational::from((-1, 400)));
        assert_eq!(parse_rational("3/4").unwrap(), Rational::from((3, 4)));
        assert_eq!(parse_rational("7").unwrap(), Rational::from(7));
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn constants_do_not_limit_precision() {
        let bits = working_bits(40);
        let x = BigComplex::i_pi(bits);
        let y = x.mul(&BigComplex::from_i64(1));
        assert_eq!(y.prec(), bits);
        let sq = x.mul(&x);
        let expected = Float::with_val(bits, pi(bits).square_ref());
        let diff = Float::with_val(bits, sq.real() + &expected);
        assert!(diff.abs() < tolerance(45, bits));
    }
}
