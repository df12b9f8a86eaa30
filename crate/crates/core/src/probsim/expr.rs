use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::pspace::Vector;
use crate::scalar::Scalar;

/// A random variable `Σ a_k·χ_{S_k}` with exact rational coefficients.
///
/// Only nonzero coefficients are stored, so the empty map is the zero
/// variable and structural equality is equality of variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RVLinearExpr {
    terms: BTreeMap<u64, BigRational>,
}

impl RVLinearExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `a·χ_{S_k}`.
    pub fn term(k: u64, a: BigRational) -> Result<Self> {
        Self::from_terms([(k, a)])
    }

    pub fn indicator(k: u64) -> Result<Self> {
        Self::term(k, BigRational::one())
    }

    /// Builds from `(k, a_k)` pairs; repeated indices are summed.
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, BigRational)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, a) in terms {
            if k < 1 {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    min: 1,
                    max: u64::MAX,
                });
            }
            *map.entry(k).or_insert_with(BigRational::zero) += a;
        }
        map.retain(|_, a: &mut BigRational| !a.is_zero());
        Ok(Self { terms: map })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, k: u64) -> BigRational {
        self.terms
            .get(&k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(k, a)| (*k, a))
    }

    pub fn indices(&self) -> Vec<u64> {
        self.terms.keys().copied().collect()
    }

    pub fn max_index(&self) -> Option<u64> {
        self.terms.keys().next_back().copied()
    }

    /// Value at an outcome, given which events occurred.
    pub fn value_at(&self, occurred: impl Fn(u64) -> bool) -> BigRational {
        self.terms
            .iter()
            .filter(|(k, _)| occurred(**k))
            .fold(BigRational::zero(), |acc, (_, a)| acc + a)
    }

    pub fn scale(&self, a: &BigRational) -> Self {
        if a.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, c * a)).collect(),
        }
    }

    /// Coefficients `(a_1, …, a_dim)` as a vector of `ℚ^dim`.
    pub fn to_coefficient_vector(&self, dim: usize) -> Result<Vector<BigRational>> {
        if let Some(k) = self.max_index().filter(|&k| k > dim as u64) {
            return Err(Error::IndexOutOfRange {
                index: k,
                min: 1,
                max: dim as u64,
            });
        }
        Vector::new((1..=dim as u64).map(|k| self.coefficient(k)).collect())
    }

    pub fn from_coefficient_vector(v: &Vector<BigRational>) -> Self {
        Self {
            terms: v
                .entries()
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(i, a)| (i as u64 + 1, a.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for RVLinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{a}·χ{k}")?;
        }
        Ok(())
    }
}

/// `a·r1 + b·r2`, dropping coefficients that cancel.
pub fn rv_combine(
    a: &BigRational,
    r1: &RVLinearExpr,
    b: &BigRational,
    r2: &RVLinearExpr,
) -> RVLinearExpr {
    let mut terms = BTreeMap::new();
    for (k, c) in &r1.terms {
        terms.insert(*k, times(a, c));
    }
    for (k, c) in &r2.terms {
        let add = times(b, c);
        match terms.get_mut(k) {
            Some(v) => *v += add,
            None => {
                terms.insert(*k, add);
            }
        }
    }
    terms.retain(|_, v| !v.is_zero());
    RVLinearExpr { terms }
}

fn times(a: &BigRational, c: &BigRational) -> BigRational {
    if a.is_one() {
        c.clone()
    } else if (-a).is_one() {
        -c
    } else {
        a * c
    }
}

/// `Y_n = 2^n·χ_{S_n}`.
pub fn make_y(n: u64) -> Result<RVLinearExpr> {
    check_index(n)?;
    Ok(RVLinearExpr {
        terms: BTreeMap::from([(n, BigRational::pow2(n as i64))]),
    })
}

/// `X_1 = 0` and `X_n = Σ_{k<n} 2^{−(n−k)} Y_k = Σ_{k<n} 2^{2k−n} χ_{S_k}`.
pub fn make_x(n: u64) -> Result<RVLinearExpr> {
    check_index(n)?;
    let n = n as i64;
    Ok(RVLinearExpr {
        terms: (1..n)
            .map(|k| (k as u64, BigRational::pow2(2 * k - n)))
            .collect(),
    })
}

/// Exact check of `2X_{n+1} − X_n = Y_n`.
pub fn verify_recurrence_identity(n: u64) -> Result<bool> {
    Ok(satisfies_recurrence(
        &make_x(n + 1)?,
        &make_x(n)?,
        &make_y(n)?,
    ))
}

/// `2·next = prev + drive`, compared per index by cross-multiplication so
/// no gcd reductions are needed.
pub fn satisfies_recurrence(
    next: &RVLinearExpr,
    prev: &RVLinearExpr,
    drive: &RVLinearExpr,
) -> bool {
    let keys: BTreeSet<u64> = next
        .terms
        .keys()
        .chain(prev.terms.keys())
        .chain(drive.terms.keys())
        .copied()
        .collect();
    let zero = BigRational::zero();
    keys.into_iter().all(|k| {
        let get = |r: &RVLinearExpr| r.terms.get(&k).unwrap_or(&zero).clone();
        let (a, b, c) = (get(next), get(prev), get(drive));
        let (an, ad) = (a.numer() << 1u32, a.denom());
        let lhs = an * b.denom() * c.denom();
        let rhs = (b.numer() * c.denom() + c.numer() * b.denom()) * ad;
        lhs == rhs
    })
}

/// `2·next − prev − drive`; zero iff the pair satisfies the recurrence.
pub fn recurrence_residual(
    next: &RVLinearExpr,
    prev: &RVLinearExpr,
    drive: &RVLinearExpr,
) -> RVLinearExpr {
    let two = BigRational::from_integer(BigInt::from(2));
    let lhs = rv_combine(&two, next, &-BigRational::one(), prev);
    rv_combine(&BigRational::one(), &lhs, &-BigRational::one(), drive)
}

fn check_index(n: u64) -> Result<()> {
    if n < 1 || n > i64::MAX as u64 / 4 {
        return Err(Error::IndexOutOfRange {
            index: n,
            min: 1,
            max: i64::MAX as u64 / 4,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqlab::{inverse_solve, SequencePrefix};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn expr(pairs: &[(u64, i64, i64)]) -> RVLinearExpr {
        RVLinearExpr::from_terms(pairs.iter().map(|&(k, n, d)| (k, q(n, d)))).unwrap()
    }

    #[test]
    fn y_and_x() {
        assert_eq!(make_y(1).unwrap(), expr(&[(1, 2, 1)]));
        assert_eq!(make_y(3).unwrap(), expr(&[(3, 8, 1)]));
        assert!(make_x(1).unwrap().is_zero());
        assert_eq!(make_x(2).unwrap(), expr(&[(1, 1, 1)]));
        assert_eq!(make_x(3).unwrap(), expr(&[(1, 1, 2), (2, 2, 1)]));
        assert!(make_y(0).is_err());
        assert!(make_x(0).is_err());
    }

    #[test]
    fn combination() {
        let x3 = make_x(3).unwrap();
        let one = BigRational::one();
        assert!(rv_combine(&one, &x3, &-one.clone(), &x3).is_zero());
        let two = q(2, 1);
        assert_eq!(
            rv_combine(
                &two,
                &make_x(2).unwrap(),
                &-one.clone(),
                &make_x(1).unwrap()
            ),
            make_y(1).unwrap()
        );
        assert_eq!(
            rv_combine(&two, &make_x(4).unwrap(), &-one, &make_x(3).unwrap()),
            make_y(3).unwrap()
        );
    }

    #[test]
    fn recurrence_identity() {
        for n in 1..=64 {
            assert!(verify_recurrence_identity(n).unwrap(), "n = {n}");
        }
        // a perturbed X breaks it
        let mut corrupted = make_x(5).unwrap();
        corrupted.terms.insert(2, q(3, 7));
        assert!(
            !recurrence_residual(&corrupted, &make_x(4).unwrap(), &make_y(4).unwrap()).is_zero()
        );
        assert!(!satisfies_recurrence(
            &corrupted,
            &make_x(4).unwrap(),
            &make_y(4).unwrap()
        ));
        assert!(!satisfies_recurrence(
            &make_x(5).unwrap(),
            &make_x(4).unwrap(),
            &make_y(3).unwrap()
        ));
    }

    #[test]
    fn cross_multiplied_check_agrees_with_residual() {
        let cases = [
            (
                expr(&[(1, 1, 3)]),
                expr(&[(1, 1, 6), (2, 5, 4)]),
                expr(&[(1, 1, 2), (2, -5, 4)]),
            ),
            (expr(&[(1, 1, 3)]), expr(&[(1, 1, 6)]), expr(&[(1, 1, 2)])),
            (
                expr(&[(2, -3, 8)]),
                RVLinearExpr::zero(),
                expr(&[(2, -3, 4)]),
            ),
            (
                RVLinearExpr::zero(),
                RVLinearExpr::zero(),
                RVLinearExpr::zero(),
            ),
            (
                RVLinearExpr::zero(),
                expr(&[(7, 1, 9)]),
                RVLinearExpr::zero(),
            ),
        ];
        for (next, prev, drive) in &cases {
            assert_eq!(
                satisfies_recurrence(next, prev, drive),
                recurrence_residual(next, prev, drive).is_zero()
            );
        }
    }

    #[test]
    fn x_is_the_solution_of_the_averaging_recurrence() {
        // solve 2x_{n+1} − x_n = Y_n from x_1 = 0 in coefficient space ℚ^dim
        let dim = 12;
        let drive = SequencePrefix::new(
            (1..dim as u64)
                .map(|n| make_y(n).unwrap().to_coefficient_vector(dim).unwrap())
                .collect(),
        )
        .unwrap();
        let solved = inverse_solve(&Vector::zeros(dim), &drive).unwrap();
        for (n, v) in solved.iter() {
            assert_eq!(
                RVLinearExpr::from_coefficient_vector(v),
                make_x(n as u64).unwrap()
            );
        }
    }

    #[test]
    fn construction_rules() {
        let r = expr(&[(3, 1, 2), (3, -1, 2), (4, 1, 1)]);
        assert_eq!(r.num_terms(), 1);
        assert!(RVLinearExpr::from_terms([(0, q(1, 1))]).is_err());
        assert_eq!(r.value_at(|k| k == 4), q(1, 1));
        assert_eq!(r.value_at(|_| false), q(0, 1));
        assert_eq!(format!("{}", make_x(3).unwrap()), "1/2·χ1 + 2·χ2");
        assert_eq!(format!("{}", RVLinearExpr::zero()), "0");
        assert!(make_y(9).unwrap().to_coefficient_vector(4).is_err());
    }
}
