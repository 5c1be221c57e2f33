//! Rational helpers shared by every module.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact value of a finite float.
pub fn rat_from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::Malformed(format!("non-finite number {v}")))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"a/b"`, an integer, or a decimal literal such as `"0.25"` into an
/// exact rational. Decimals are read digit by digit, not through `f64`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Malformed(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * Pow::pow(&ten, scale as u32))
    } else {
        Rational::new(all, Pow::pow(&ten, (-scale) as u32))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Canonical text form: `"num/den"`, or `"num"` for integers.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1)
        let num = (n - i) as u128;
        let g = num_integer::gcd(acc, (i + 1) as u128);
        let a = acc / g;
        let den = (i + 1) as u128 / g;
        let b = num / den;
        match a.checked_mul(b) {
            Some(v) => acc = v,
            None => return u128::MAX,
        }
    }
    acc
}

/// `floor(z^alpha)` for rational `alpha = a/b` in `(0, 1)`, computed exactly as
/// the largest integer `t` with `t^b <= z^a`.
pub fn floor_rational_power(z: u64, alpha: &Rational) -> Result<u64> {
    if !alpha.is_positive() || *alpha >= Rational::one() {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let a = alpha.numer().to_u32().ok_or_else(|| Error::InvalidParameter("alpha numerator too large".into()))?;
    let b = alpha.denom().to_u32().ok_or_else(|| Error::InvalidParameter("alpha denominator too large".into()))?;
    let target = Pow::pow(&BigUint::from(z), a);
    let (mut lo, mut hi) = (0u64, z.max(1));
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if Pow::pow(&BigUint::from(mid), b) <= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

/// Floor of a non-negative rational.
pub fn floor_nonneg(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn is_multiple_of(r: &Rational, unit_den: u64) -> bool {
    let scaled = r * rat_int(unit_den);
    scaled.is_integer()
}
