//! The averaging transform `c_n = 2x_{n+1} − x_n`, its inverse
//! `x_{n+1} = (c_n + x_n)/2`, and finite-prefix convergence diagnostics.
//!
//! Terms are indexed from 1. All sequence arithmetic is generic over
//! [`Scalar`]; with [`BigRational`](num_rational::BigRational) every
//! identity below holds exactly, and with `f64` it is exact on dyadic data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pspace::{SeminormFamily, Vector};
use crate::scalar::{Real, Scalar};

/// A finite observed prefix `x_1, …, x_L` of a vector sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePrefix<T> {
    terms: Vec<Vector<T>>,
}

impl<T: Scalar> SequencePrefix<T> {
    pub fn new(terms: Vec<Vector<T>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or(Error::PrefixTooShort { len: 0, min: 1 })?;
        for t in &terms {
            first.check_dim(t)?;
        }
        Ok(Self { terms })
    }

    /// One-dimensional prefix from plain scalars.
    pub fn scalar(values: Vec<T>) -> Result<Self> {
        Self::new(
            values
                .into_iter()
                .map(|v| Vector::new(vec![v]))
                .collect::<Result<_>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    /// 1-based access.
    pub fn term(&self, n: usize) -> Option<&Vector<T>> {
        n.checked_sub(1).and_then(|i| self.terms.get(i))
    }

    pub fn terms(&self) -> &[Vector<T>] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Vector<T>)> {
        self.terms.iter().enumerate().map(|(i, v)| (i + 1, v))
    }

    /// Subtracts `v` from every term.
    pub fn shift(&self, v: &Vector<T>) -> Result<Self> {
        Ok(Self {
            terms: self.terms.iter().map(|t| t.sub(v)).collect::<Result<_>>()?,
        })
    }

    /// `a·self + b·other`, termwise.
    pub fn lin_comb(&self, a: &T, other: &Self, b: &T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Self {
            terms: self
                .terms
                .iter()
                .zip(&other.terms)
                .map(|(x, y)| x.lin_comb(a, y, b))
                .collect::<Result<_>>()?,
        })
    }
}

/// `(x_1, …, x_L) ↦ (2x_2 − x_1, …, 2x_L − x_{L−1})`.
pub fn forward_transform<T: Scalar>(x: &SequencePrefix<T>) -> Result<SequencePrefix<T>> {
    if x.len() < 2 {
        return Err(Error::PrefixTooShort {
            len: x.len(),
            min: 2,
        });
    }
    let two = T::one() + T::one();
    let minus_one = -T::one();
    let terms = x
        .terms
        .windows(2)
        .map(|w| w[1].lin_comb(&two, &w[0], &minus_one))
        .collect::<Result<_>>()?;
    Ok(SequencePrefix { terms })
}

/// Solves `2x_{n+1} − x_n = c_n` forward from `x_1`; returns `x_1, …, x_{L+1}`.
pub fn inverse_solve<T: Scalar>(
    x1: &Vector<T>,
    c: &SequencePrefix<T>,
) -> Result<SequencePrefix<T>> {
    x1.check_dim(&c.terms[0])?;
    let half = T::half();
    let mut terms = Vec::with_capacity(c.len() + 1);
    terms.push(x1.clone());
    for cn in &c.terms {
        let prev = terms.last().expect("seeded");
        let next = cn.lin_comb(&half, prev, &half)?;
        terms.push(next);
    }
    Ok(SequencePrefix { terms })
}

/// `x_n = 2^{−(n−1)} x_1 + Σ_{k<n} 2^{−(n−k)} c_k`, valid for `1 ≤ n ≤ L + 1`.
pub fn closed_form<T: Scalar>(
    x1: &Vector<T>,
    c: &SequencePrefix<T>,
    n: usize,
) -> Result<Vector<T>> {
    if n < 1 || n > c.len() + 1 {
        return Err(Error::IndexOutOfRange {
            index: n as u64,
            min: 1,
            max: c.len() as u64 + 1,
        });
    }
    x1.check_dim(&c.terms[0])?;
    let mut acc = x1.scale(&T::pow2(-(n as i64 - 1)));
    for k in 1..n {
        let ck = &c.terms[k - 1];
        acc = acc.lin_comb(&T::one(), ck, &T::pow2(-((n - k) as i64)))?;
    }
    Ok(acc)
}

/// One coordinate list or a single number broadcast across coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Components {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Components {
    fn explicit_dim(&self) -> Option<usize> {
        match self {
            Components::Uniform(_) => None,
            Components::PerCoordinate(v) => Some(v.len()),
        }
    }

    fn materialize<T: Scalar>(&self, dim: usize) -> Result<Vec<T>> {
        let lift = |v: f64| {
            T::from_f64_exact(v).ok_or(Error::NonFinite {
                what: "sequence spec",
            })
        };
        match self {
            Components::Uniform(v) => Ok(vec![lift(*v)?; dim]),
            Components::PerCoordinate(vs) => vs.iter().map(|v| lift(*v)).collect(),
        }
    }
}

/// Closed-form families; every one accepts an additive `offset`.
///
/// With `r` the ratio, `a` the scale and `o` the offset, for `n ≥ 1`:
/// constant `x_n = o`, geometric `x_n = o + a·r^n`, harmonic `x_n = o + a/n`.
/// All parameters are coordinatewise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NamedFamily {
    Constant {
        value: Components,
    },
    Geometric {
        ratio: Components,
        #[serde(default = "unit")]
        scale: Components,
        #[serde(default)]
        offset: Option<Components>,
    },
    Harmonic {
        #[serde(default = "unit")]
        scale: Components,
        #[serde(default)]
        offset: Option<Components>,
    },
}

fn unit() -> Components {
    Components::Uniform(1.0)
}

/// Generator for sequence prefixes of any requested length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceSpec {
    Explicit {
        terms: Vec<Vec<f64>>,
    },
    Named(NamedFamily),
    /// `x_{n+1} = (c_n + x_n)/2` with `c` generated by `drive`.
    Driven {
        x1: Vec<f64>,
        drive: Box<SequenceSpec>,
    },
}

impl SequenceSpec {
    pub fn constant(value: Vec<f64>) -> Self {
        SequenceSpec::Named(NamedFamily::Constant {
            value: Components::PerCoordinate(value),
        })
    }

    pub fn geometric(ratio: Vec<f64>, scale: Vec<f64>) -> Self {
        SequenceSpec::Named(NamedFamily::Geometric {
            ratio: Components::PerCoordinate(ratio),
            scale: Components::PerCoordinate(scale),
            offset: None,
        })
    }

    pub fn harmonic(scale: Vec<f64>) -> Self {
        SequenceSpec::Named(NamedFamily::Harmonic {
            scale: Components::PerCoordinate(scale),
            offset: None,
        })
    }

    pub fn driven(x1: Vec<f64>, drive: SequenceSpec) -> Self {
        SequenceSpec::Driven {
            x1,
            drive: Box::new(drive),
        }
    }

    /// Ambient dimension; scalar-only named specs are one-dimensional.
    pub fn dim(&self) -> Result<usize> {
        match self {
            SequenceSpec::Explicit { terms } => terms
                .first()
                .map(Vec::len)
                .ok_or(Error::PrefixTooShort { len: 0, min: 1 }),
            SequenceSpec::Named(f) => {
                let parts: Vec<&Components> = match f {
                    NamedFamily::Constant { value } => vec![value],
                    NamedFamily::Geometric {
                        ratio,
                        scale,
                        offset,
                    } => {
                        let mut v = vec![ratio, scale];
                        v.extend(offset.iter());
                        v
                    }
                    NamedFamily::Harmonic { scale, offset } => {
                        let mut v = vec![scale];
                        v.extend(offset.iter());
                        v
                    }
                };
                let mut dim = None;
                for d in parts.iter().filter_map(|c| c.explicit_dim()) {
                    match dim {
                        None => dim = Some(d),
                        Some(e) if e != d => {
                            return Err(Error::DimensionMismatch {
                                expected: e,
                                found: d,
                            })
                        }
                        _ => {}
                    }
                }
                Ok(dim.unwrap_or(1))
            }
            SequenceSpec::Driven { x1, drive } => {
                let d = drive.dim()?;
                if d != x1.len() {
                    return Err(Error::DimensionMismatch {
                        expected: x1.len(),
                        found: d,
                    });
                }
                Ok(d)
            }
        }
    }

    /// Materializes `x_1, …, x_len`.
    pub fn materialize<T: Scalar>(&self, len: usize) -> Result<SequencePrefix<T>> {
        if len == 0 {
            return Err(Error::PrefixTooShort { len, min: 1 });
        }
        let dim = self.dim()?;
        match self {
            SequenceSpec::Explicit { terms } => {
                if terms.len() < len {
                    return Err(Error::PrefixTooShort {
                        len: terms.len(),
                        min: len,
                    });
                }
                let terms = terms[..len]
                    .iter()
                    .map(|t| {
                        Components::PerCoordinate(t.clone())
                            .materialize(dim)
                            .and_then(Vector::new)
                    })
                    .collect::<Result<_>>()?;
                SequencePrefix::new(terms)
            }
            SequenceSpec::Named(f) => {
                let terms = match f {
                    NamedFamily::Constant { value } => {
                        let v = Vector::new(value.materialize::<T>(dim)?)?;
                        vec![v; len]
                    }
                    NamedFamily::Geometric {
                        ratio,
                        scale,
                        offset,
                    } => {
                        let r = Vector::new(ratio.materialize::<T>(dim)?)?;
                        let a = Vector::new(scale.materialize::<T>(dim)?)?;
                        let o = offset_vector::<T>(offset, dim)?;
                        let mut power = r.clone();
                        let mut out = Vec::with_capacity(len);
                        for _ in 0..len {
                            out.push(o.add(&hadamard(&a, &power))?);
                            power = hadamard(&power, &r);
                        }
                        out
                    }
                    NamedFamily::Harmonic { scale, offset } => {
                        let a = Vector::new(scale.materialize::<T>(dim)?)?;
                        let o = offset_vector::<T>(offset, dim)?;
                        (1..=len)
                            .map(|n| {
                                let inv = T::one() / T::from_usize(n).expect("index fits");
                                o.add(&a.scale(&inv))
                            })
                            .collect::<Result<_>>()?
                    }
                };
                SequencePrefix::new(terms)
            }
            SequenceSpec::Driven { x1, drive } => {
                let x1 = Vector::new(Components::PerCoordinate(x1.clone()).materialize(dim)?)?;
                if len == 1 {
                    return SequencePrefix::new(vec![x1]);
                }
                let c = drive.materialize::<T>(len - 1)?;
                inverse_solve(&x1, &c)
            }
        }
    }
}

fn offset_vector<T: Scalar>(offset: &Option<Components>, dim: usize) -> Result<Vector<T>> {
    match offset {
        Some(c) => Vector::new(c.materialize(dim)?),
        None => Ok(Vector::zeros(dim)),
    }
}

fn hadamard<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> Vector<T> {
    Vector::new(
        a.entries()
            .iter()
            .zip(b.entries())
            .map(|(x, y)| x.clone() * y.clone())
            .collect(),
    )
    .expect("finite inputs")
}

/// Per-seminorm outcome of [`converges_to`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormTrace<F> {
    /// `(n, σ(x_n − limit))` for every term of the prefix.
    pub table: Vec<(usize, F)>,
    /// For each threshold, the first index after which the distance stays
    /// strictly below it, if any.
    pub crossings: Vec<Option<usize>>,
    pub decaying: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceDiagnostic<F> {
    pub thresholds: Vec<F>,
    pub per_seminorm: Vec<SeminormTrace<F>>,
    pub converging: bool,
}

/// Smallest `n` with `values[m] < bound` for every `m ≥ n` (1-based).
pub(crate) fn tail_entry_index<F: Real>(values: &[F], bound: F) -> Option<usize> {
    let last_bad = values.iter().rposition(|v| v.is_nan() || *v >= bound);
    match last_bad {
        None => Some(1),
        Some(i) if i + 1 < values.len() => Some(i + 2),
        Some(_) => None,
    }
}

/// Finite-prefix check of `σ(x_n − limit) → 0` for every `σ` in the family.
///
/// A seminorm is reported as decaying when, for each threshold in the
/// strictly decreasing schedule, the distances eventually fall and stay
/// below it within the prefix.
pub fn converges_to<T: Scalar, F: Real>(
    family: &SeminormFamily<F>,
    x: &SequenceSpec,
    limit: &Vector<T>,
    prefix_len: usize,
    schedule: &[F],
) -> Result<ConvergenceDiagnostic<F>> {
    if prefix_len < 2 {
        return Err(Error::PrefixTooShort {
            len: prefix_len,
            min: 2,
        });
    }
    validate_schedule(schedule)?;
    if limit.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            found: limit.dim(),
        });
    }
    let prefix = x.materialize::<T>(prefix_len)?.shift(limit)?;
    converges_on_prefix(family, &prefix, schedule)
}

pub(crate) fn validate_schedule<F: Real>(schedule: &[F]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("threshold schedule is empty".into()));
    }
    if schedule.iter().any(|t| !t.is_finite() || *t <= F::zero()) {
        return Err(Error::InvalidArgument(
            "thresholds must be positive and finite".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "threshold schedule must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// [`converges_to`] on an already shifted prefix (`x_n − limit`).
pub fn converges_on_prefix<T: Scalar, F: Real>(
    family: &SeminormFamily<F>,
    shifted: &SequencePrefix<T>,
    schedule: &[F],
) -> Result<ConvergenceDiagnostic<F>> {
    let mut per_seminorm = Vec::with_capacity(family.len());
    for s in family.members() {
        let values = shifted
            .terms()
            .iter()
            .map(|t| s.eval(t))
            .collect::<Result<Vec<F>>>()?;
        let crossings: Vec<Option<usize>> = schedule
            .iter()
            .map(|t| tail_entry_index(&values, *t))
            .collect();
        let decaying = crossings.iter().all(Option::is_some);
        per_seminorm.push(SeminormTrace {
            table: values
                .into_iter()
                .enumerate()
                .map(|(i, v)| (i + 1, v))
                .collect(),
            crossings,
            decaying,
        });
    }
    let converging = per_seminorm.iter().all(|t| t.decaying);
    Ok(ConvergenceDiagnostic {
        thresholds: schedule.to_vec(),
        per_seminorm,
        converging,
    })
}
