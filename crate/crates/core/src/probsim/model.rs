use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Independent events `S_1, S_2, …, S_K` with `P(S_k) = 1/k`.
///
/// `S_k` is the event that the `k`-th coordinate of a point in
/// `[1] × [2] × [3] × …` (each factor uniform) equals 1, so `S_1` is sure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndepEventModel {
    max_index: u64,
}

impl IndepEventModel {
    pub fn new(max_index: u64) -> Result<Self> {
        if max_index == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                min: 1,
                max: u64::MAX,
            });
        }
        Ok(Self { max_index })
    }

    pub fn max_index(&self) -> u64 {
        self.max_index
    }

    pub fn probability(&self, k: u64) -> Result<BigRational> {
        if k > self.max_index {
            return Err(Error::IndexOutOfRange {
                index: k,
                min: 1,
                max: self.max_index,
            });
        }
        event_probability(k)
    }
}

/// `P(S_k) = 1/k`.
pub fn event_probability(k: u64) -> Result<BigRational> {
    if k < 1 {
        return Err(Error::IndexOutOfRange {
            index: k,
            min: 1,
            max: u64::MAX,
        });
    }
    Ok(BigRational::new(BigInt::one(), BigInt::from(k)))
}

/// Exact `∏ num_i / ∏ den_i` over small factors.
///
/// Runs on `u128` with gcd reduction only when the next multiplication would
/// overflow, and moves to big integers when even a reduced fraction does not
/// fit.
fn small_fraction_product(factors: impl Iterator<Item = (u64, u64)>) -> BigRational {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    let mut factors = factors.peekable();
    while let Some(&(a, b)) = factors.peek() {
        let (a, b) = (a as u128, b as u128);
        match (num.checked_mul(a), den.checked_mul(b)) {
            (Some(x), Some(y)) => {
                num = x;
                den = y;
                factors.next();
            }
            _ => {
                let g = num.gcd(&den);
                if g > 1 {
                    num /= g;
                    den /= g;
                    continue;
                }
                let mut big_num = BigInt::from(num);
                let mut big_den = BigInt::from(den);
                for (a, b) in factors {
                    big_num *= a;
                    big_den *= b;
                }
                return BigRational::new(big_num, big_den);
            }
        }
    }
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `1 − ∏_{k=n+1}^{2n} (1 − 1/k) = P(S_{n+1} ∪ … ∪ S_{2n})`, in exact arithmetic.
pub fn union_probability_exact(n: u64) -> Result<BigRational> {
    if n < 1 {
        return Err(Error::IndexOutOfRange {
            index: n,
            min: 1,
            max: u64::MAX / 2,
        });
    }
    let miss_all = small_fraction_product((n + 1..=2 * n).map(|k| (k - 1, k)));
    Ok(BigRational::one() - miss_all)
}

/// Formats a rational as `"p/q"`, including integers (`"1/1"`).
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"`, `"p"`, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    // decimal literal: read digits exactly rather than through f64
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(digits * sign, scale))
}
