//! Exact expectations by enumerating occurrence patterns.
//!
//! A variable referencing `T` events takes at most `2^T` values. Each
//! pattern has probability `∏ (1/k or (k−1)/k)`; with the common
//! denominator `D = ∏ k` every weight is the integer `∏ (1 or k−1)`.
//! Coefficients are likewise scaled to integers, so the whole enumeration
//! runs in integer arithmetic: `i128` when the sizes allow it, big integers
//! otherwise.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::expr::{rv_combine, RVLinearExpr};
use crate::error::{Error, Result};

/// Maximum number of referenced events for exact enumeration.
pub const MAX_ENUM_TERMS: usize = 25;

/// Maximum number of non-sure events for [`rho_exact`]. Beyond this the
/// reduced denominator of the result grows past what is worth computing
/// (tens of thousands of digits); use [`rho_bracket`] instead.
pub const RHO_EXACT_MAX_FREE_TERMS: usize = 12;

/// Fractional bits of the dyadic grid used by [`rho_bracket`].
pub const RHO_BRACKET_BITS: u32 = 64;

/// Integer arithmetic the enumerator can run on.
pub(crate) trait EnumInt: Integer + Signed + Clone + Send + Sync + Into<BigInt> {
    fn from_big(b: &BigInt) -> Self;
}

impl EnumInt for i128 {
    fn from_big(b: &BigInt) -> Self {
        i128::try_from(b).expect("size checked before narrowing")
    }
}

impl EnumInt for BigInt {
    fn from_big(b: &BigInt) -> Self {
        b.clone()
    }
}

/// `Σ a_k χ_{S_k}` rescaled: value = `Σ numerators[j]·χ / scale`.
#[derive(Debug, Clone)]
pub(crate) struct IntegerForm<I> {
    pub indices: Vec<u64>,
    pub numerators: Vec<I>,
    pub scale: I,
    /// `threshold·scale`, when a threshold was supplied.
    pub threshold: I,
}

/// Big-integer form of `r` (and of `t`, on the same scale).
pub(crate) fn big_form(r: &RVLinearExpr, t: &BigRational) -> IntegerForm<BigInt> {
    let scale = r
        .terms()
        .map(|(_, a)| a.denom().clone())
        .fold(t.denom().clone(), |l, d| l.lcm(&d));
    let numerators = r
        .terms()
        .map(|(_, a)| a.numer() * (&scale / a.denom()))
        .collect();
    let threshold = t.numer() * (&scale / t.denom());
    IntegerForm {
        indices: r.indices(),
        numerators,
        scale,
        threshold,
    }
}

pub(crate) fn narrow<I: EnumInt>(f: &IntegerForm<BigInt>) -> IntegerForm<I> {
    IntegerForm {
        indices: f.indices.clone(),
        numerators: f.numerators.iter().map(I::from_big).collect(),
        scale: I::from_big(&f.scale),
        threshold: I::from_big(&f.threshold),
    }
}

/// Whether sums of numerators, the scale, threshold and weights stay well
/// inside `i128`.
pub(crate) fn fits_i128(f: &IntegerForm<BigInt>, weight_total: &BigInt) -> bool {
    let magnitude: BigInt =
        f.numerators.iter().map(|n| n.abs()).sum::<BigInt>() + f.scale.abs() + f.threshold.abs();
    magnitude.bits() <= 120 && weight_total.bits() <= 120
}

/// `D = ∏ k` over the referenced events.
fn weight_total(indices: &[u64]) -> BigInt {
    indices.iter().fold(BigInt::one(), |acc, &k| acc * k)
}

fn check_cap(r: &RVLinearExpr) -> Result<()> {
    if r.num_terms() > MAX_ENUM_TERMS {
        Err(Error::EnumerationTooLarge {
            terms: r.num_terms(),
            cap: MAX_ENUM_TERMS,
        })
    } else {
        Ok(())
    }
}

/// Visits every positive-probability pattern as `(value numerator, weight)`.
fn visit<I: EnumInt>(form: &IntegerForm<I>, leaf: &mut impl FnMut(&I, &I)) {
    let complements: Vec<I> = form
        .indices
        .iter()
        .map(|&k| I::from_big(&BigInt::from(k - 1)))
        .collect();
    fn go<I: EnumInt>(
        j: usize,
        form: &IntegerForm<I>,
        complements: &[I],
        value: I,
        weight: I,
        leaf: &mut impl FnMut(&I, &I),
    ) {
        if j == form.indices.len() {
            leaf(&value, &weight);
            return;
        }
        // occurs: weight factor 1
        go(
            j + 1,
            form,
            complements,
            value.clone() + form.numerators[j].clone(),
            weight.clone(),
            leaf,
        );
        // does not occur: weight factor k − 1, zero for the sure event S_1
        if !complements[j].is_zero() {
            go(
                j + 1,
                form,
                complements,
                value,
                weight * complements[j].clone(),
                leaf,
            );
        }
    }
    go(0, form, &complements, I::zero(), I::one(), leaf);
}

fn tail_mass<I: EnumInt>(form: &IntegerForm<I>) -> BigInt {
    let mut acc = I::zero();
    visit(form, &mut |v, w| {
        if v.abs() > form.threshold {
            acc = acc.clone() + w.clone();
        }
    });
    acc.into()
}

/// `P(|r| > t)` by exhaustive enumeration of the events `r` references.
pub fn tail_probability_exact(r: &RVLinearExpr, t: &BigRational) -> Result<BigRational> {
    check_cap(r)?;
    if t.is_negative() {
        return Err(Error::InvalidArgument(
            "threshold must be nonnegative".into(),
        ));
    }
    let big = big_form(r, t);
    let total = weight_total(&big.indices);
    let mass = if fits_i128(&big, &total) {
        tail_mass(&narrow::<i128>(&big))
    } else {
        tail_mass(&big)
    };
    Ok(BigRational::new(mass, total))
}

/// Number of positive-probability patterns for `r`.
pub fn atom_count(r: &RVLinearExpr) -> u128 {
    let free = r.indices().iter().filter(|&&k| k > 1).count();
    1u128 << free.min(127)
}

fn free_terms(r: &RVLinearExpr) -> usize {
    r.indices().iter().filter(|&&k| k > 1).count()
}

fn difference(r1: &RVLinearExpr, r2: &RVLinearExpr) -> RVLinearExpr {
    rv_combine(&BigRational::one(), r1, &-BigRational::one(), r2)
}

/// Pairwise sum, which keeps intermediate denominators balanced.
fn tree_sum(mut parts: Vec<BigRational>) -> BigRational {
    if parts.is_empty() {
        return BigRational::zero();
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a + b,
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("nonempty")
}

/// `ρ(r1, r2) = E[|r1 − r2| / (1 + |r1 − r2|)]`, exactly.
pub fn rho_exact(r1: &RVLinearExpr, r2: &RVLinearExpr) -> Result<BigRational> {
    let d = difference(r1, r2);
    check_cap(&d)?;
    let free = free_terms(&d);
    if free > RHO_EXACT_MAX_FREE_TERMS {
        return Err(Error::EnumerationTooLarge {
            terms: free,
            cap: RHO_EXACT_MAX_FREE_TERMS,
        });
    }
    let big = big_form(&d, &BigRational::zero());
    let total = weight_total(&big.indices);
    let mut parts = Vec::new();
    visit(&big, &mut |v, w| {
        if !v.is_zero() {
            let a = v.abs();
            parts.push(BigRational::new(w * &a, &big.scale + a));
        }
    });
    Ok(tree_sum(parts) / BigRational::from_integer(total))
}

/// Exact rational enclosure `lower ≤ ρ ≤ upper` with `upper − lower ≤ 2^{-64}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoBracket {
    #[serde(serialize_with = "ser_rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub upper: BigRational,
}

impl RhoBracket {
    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lower <= x && x <= &self.upper
    }

    pub fn midpoint_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        ((&self.lower + &self.upper) / BigRational::from_integer(2.into()))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

pub(crate) fn ser_rational<S: serde::Serializer>(
    r: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&super::rational_string(r))
}

fn bracket_sums<I: EnumInt>(form: &IntegerForm<I>) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    let scale: BigInt = form.scale.clone().into();
    visit(form, &mut |v, w| {
        if v.is_zero() {
            return;
        }
        let a: BigInt = v.abs().into();
        let w: BigInt = w.clone().into();
        let (quot, rem) = (&a << RHO_BRACKET_BITS).div_rem(&(&scale + &a));
        let up = if rem.is_zero() {
            quot.clone()
        } else {
            &quot + 1
        };
        lo += &w * quot;
        hi += w * up;
    });
    (lo, hi)
}

/// Rigorous enclosure of `ρ(r1, r2)` for expressions too large for
/// [`rho_exact`]: each pattern's integrand is rounded down and up on a
/// `2^{-64}` grid, and the rounded values are summed exactly.
pub fn rho_bracket(r1: &RVLinearExpr, r2: &RVLinearExpr) -> Result<RhoBracket> {
    let d = difference(r1, r2);
    check_cap(&d)?;
    let big = big_form(&d, &BigRational::zero());
    let total = weight_total(&big.indices);
    let (lo, hi) = if fits_i128(&big, &total) {
        bracket_sums(&narrow::<i128>(&big))
    } else {
        bracket_sums(&big)
    };
    let denom = total << RHO_BRACKET_BITS;
    Ok(RhoBracket {
        lower: BigRational::new(lo, denom.clone()),
        upper: BigRational::new(hi, denom),
    })
}

/// The full law of `r` as `(value, probability)` pairs, merged by value.
pub fn distribution_exact(r: &RVLinearExpr) -> Result<Vec<(BigRational, BigRational)>> {
    check_cap(r)?;
    let big = big_form(r, &BigRational::zero());
    let total = weight_total(&big.indices);
    let mut law = std::collections::BTreeMap::<BigInt, BigInt>::new();
    visit(&big, &mut |v, w| {
        *law.entry(v.clone()).or_default() += w;
    });
    Ok(law
        .into_iter()
        .map(|(v, w)| {
            (
                BigRational::new(v, big.scale.clone()),
                BigRational::new(w, total.clone()),
            )
        })
        .collect())
}
