//! Exact rational helpers.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-2/5"` or a finite decimal such as `"0.125"`.
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
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let ip: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().ok()? };
        let fpn: BigInt = fp.parse().ok()?;
        let den = num::pow(BigInt::from(10), fp.len());
        let v = Q::new(ip * &den + fpn, den);
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

/// Exact conversion of a finite double.
pub fn from_f64(x: f64) -> Option<Q> {
    Q::from_float(x)
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `"3"`, `"-2/5"`.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Coefficient prefix for pretty printing: `""` for 1, `"−"` for -1, `"4"`, `"(3/2)"`.
pub fn fmt_coeff_prefix(x: &Q) -> String {
    let neg = x.is_negative();
    let a = x.abs();
    let body = if a.is_one() {
        String::new()
    } else if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("({}/{})", a.numer(), a.denom())
    };
    if neg {
        format!("−{body}")
    } else {
        body
    }
}

pub fn is_integer(x: &Q) -> bool {
    x.is_integer()
}

pub fn binom(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

/// Signed Stirling numbers of the first kind, `s1[k][m]`, for `k <= kmax`,
/// via `s1(k+1,m) = s1(k,m-1) - k s1(k,m)`.
pub fn stirling1_table(kmax: usize) -> Vec<Vec<BigInt>> {
    let mut t = vec![vec![BigInt::zero(); kmax + 1]; kmax + 1];
    t[0][0] = BigInt::one();
    for k in 0..kmax {
        for m in 0..=kmax {
            let prev = if m > 0 { t[k][m - 1].clone() } else { BigInt::zero() };
            t[k + 1][m] = prev - BigInt::from(k as u64) * &t[k][m];
        }
    }
    t
}

/// Stirling numbers of the second kind, `s2[n][k]`.
pub fn stirling2_table(nmax: usize) -> Vec<Vec<BigInt>> {
    let mut t = vec![vec![BigInt::zero(); nmax + 1]; nmax + 1];
    t[0][0] = BigInt::one();
    for n in 0..nmax {
        for k in 1..=nmax {
            t[n + 1][k] = BigInt::from(k as u64) * &t[n][k] + &t[n][k - 1];
        }
    }
    t
}
