//! Exact rational helpers: decimal parsing and fixed-point rendering.

use alloc::string::String;
use core::fmt::Write;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};

/// Parses a plain non-negative decimal (`"0.9"`, `"1"`, `".25"`) exactly.
pub fn parse_decimal(s: &str) -> Option<Ratio<u64>> {
    let s = s.trim();
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let den = 10u64.checked_pow(frac.len() as u32)?;
    let int_part: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac_part: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let num = int_part.checked_mul(den)?.checked_add(frac_part)?;
    Some(Ratio::new(num, den))
}

pub fn to_big(r: &Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Renders with `places` digits after the point, rounding half away from zero.
pub fn format_fixed(value: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = value.abs() * BigRational::from_integer(scale.clone());
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let rounded = if r * 2u32 >= *scaled.denom() { q + 1u32 } else { q };
    let (int, frac) = rounded.div_rem(&scale);
    let mut out = String::new();
    if value.is_negative() && !(int.is_zero() && frac.is_zero()) {
        out.push('-');
    }
    let _ = write!(out, "{int}");
    if places > 0 {
        let digits = frac.magnitude().to_str_radix(10);
        out.push('.');
        for _ in digits.len()..places as usize {
            out.push('0');
        }
        out.push_str(&digits);
    }
    out
}

pub fn format_fixed_u64(value: &Ratio<u64>, places: u32) -> String {
    format_fixed(&to_big(value), places)
}

/// `"p/q"` in lowest terms.
pub fn format_exact(value: &BigRational) -> String {
    let mut out = String::new();
    let _ = write!(out, "{}/{}", value.numer(), value.denom());
    out
}

pub fn parse_exact(s: &str) -> Option<BigRational> {
    let (n, d) = s.trim().split_once('/')?;
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigUint = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, BigInt::from(d)))
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
