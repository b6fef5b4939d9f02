//! Exact rational helpers on top of `num-rational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Parses `p`, `p/q` or a decimal literal such as `0.125`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.starts_with('-');
        let ip: BigInt = if a.is_empty() || a == "-" { BigInt::zero() } else { a.parse().ok()? };
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let fp: BigInt = b.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), b.len());
        let frac = Q::new(fp, den);
        let ipq = Q::from_integer(ip.abs());
        let v = ipq + frac;
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // huge numerators: divide in log space
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn lcm_denoms<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Best rational approximation with denominator at most `max_den` (continued fractions).
pub fn approx_rational(x: f64, max_den: i64) -> Q {
    if !x.is_finite() {
        return zero();
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i64;
        let p2 = a.saturating_mul(p1).saturating_add(p0);
        let q2 = a.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den || q2 <= 0 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return zero();
    }
    let r = q(p1, q1);
    if neg {
        -r
    } else {
        r
    }
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

/// Smallest-denominator rational strictly between `lo` and `hi` (Stern-Brocot descent).
pub fn simplest_between(lo: &Q, hi: &Q) -> Q {
    assert!(lo < hi);
    let (mut ln, mut ld) = (BigInt::zero(), BigInt::one());
    let (mut rn, mut rd) = (BigInt::one(), BigInt::zero());
    // shift integer part
    let fl = lo.floor();
    let base = fl.to_integer();
    let lo0 = lo - &fl;
    let hi0 = hi - &fl;
    loop {
        let mn = &ln + &rn;
        let md = &ld + &rd;
        let m = Q::new(mn.clone(), md.clone());
        if m <= lo0 {
            ln = mn;
            ld = md;
        } else if m >= hi0 {
            rn = mn;
            rd = md;
        } else {
            return m + Q::from_integer(base);
        }
    }
}
