//! Exact scalars. All algebraic checks run over arbitrary-precision rationals;
//! complex pairs of rationals appear only where a factor of `i` is unavoidable.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type CQ = Complex<Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn cq(re: Q, im: Q) -> CQ {
    Complex::new(re, im)
}

pub fn cq_i() -> CQ {
    Complex::new(Q::zero(), Q::one())
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for direct conversion
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Parses `"3"`, `"-1/2"` or `"0.25"` into an exact rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let ip_val: BigInt = if ip_abs.is_empty() { BigInt::zero() } else { ip_abs.parse().ok()? };
        if !fp.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let scale = BigInt::from(10u32).pow(fp.len() as u32);
        let fp_val: BigInt = if fp.is_empty() { BigInt::zero() } else { fp.parse().ok()? };
        let v = Q::new(ip_val * &scale + fp_val, scale);
        return Some(if neg { -v } else { v });
    }
    s.parse::<BigInt>().ok().map(Q::from_integer)
}

pub fn sign(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}
