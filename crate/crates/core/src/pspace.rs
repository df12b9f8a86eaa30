//! Weighted p-power seminorms on finite-dimensional real vectors, and the
//! point predicates (balls, indistinguishability) of the topology they
//! generate.
//!
//! A [`PSeminorm`] evaluates `σ(x) = Σ w_i |x_i|^p` with `0 < p ≤ 1`. Zero
//! weights are allowed, so a family may fail to separate points; that is the
//! non-Hausdorff situation in which a sequence can have several limits.

use std::fmt;
use std::ops::Index;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Absolute tolerance for "σ(x − y) = 0".
pub const INDISTINGUISHABLE_ATOL: f64 = 1e-12;

/// Checks `0 < p ≤ 1`.
///
/// For a non-trivial seminorm, `2^p σ(x) = σ(2x) ≤ 2σ(x)` forces `p ≤ 1`, so
/// larger exponents are rejected.
pub fn validate_p<F: Real>(p: F) -> Result<F> {
    if p.is_finite() && p > F::zero() && p <= F::one() {
        Ok(p)
    } else {
        Err(Error::ExponentOutOfRange {
            p: p.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// A point of the ambient space `T^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.iter().all(Scalar::is_finite_value) {
            Ok(Self(entries))
        } else {
            Err(Error::NonFinite { what: "vector" })
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn splat(dim: usize, v: T) -> Self {
        Self(vec![v; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[T] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<T> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: &T, other: &Self, b: &T) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| a.clone() * x.clone() + b.clone() * y.clone())
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| x.clone() + y.clone())
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(x, y)| x.clone() - y.clone())
                .collect(),
        ))
    }

    pub fn scale(&self, k: &T) -> Self {
        Self(self.0.iter().map(|x| k.clone() * x.clone()).collect())
    }

    /// Converts each coordinate into another scalar type.
    pub fn convert<U: Scalar>(&self) -> Result<Vector<U>> {
        self.0
            .iter()
            .map(|x| {
                x.to_f64()
                    .and_then(U::from_f64_exact)
                    .ok_or(Error::NonFinite { what: "vector" })
            })
            .collect::<Result<Vec<_>>>()
            .map(Vector)
    }
}

impl Vector<f64> {
    /// Lifts a float vector into exact rationals without rounding.
    pub fn to_exact(&self) -> Result<Vector<num_rational::BigRational>> {
        self.convert()
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: fmt::Display> fmt::Display for Vector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// `σ(x) = Σ w_i |x_i|^p` with `0 < p ≤ 1` and `w_i ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeminorm<F>", into = "RawSeminorm<F>")]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + Deserialize<'de>"
))]
pub struct PSeminorm<F> {
    p: F,
    weights: Vec<F>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeminorm<F> {
    p: F,
    weights: Vec<F>,
}

impl<F: Real> TryFrom<RawSeminorm<F>> for PSeminorm<F> {
    type Error = Error;

    fn try_from(raw: RawSeminorm<F>) -> Result<Self> {
        PSeminorm::new(raw.p, raw.weights)
    }
}

impl<F: Real> From<PSeminorm<F>> for RawSeminorm<F> {
    fn from(s: PSeminorm<F>) -> Self {
        RawSeminorm {
            p: s.p,
            weights: s.weights,
        }
    }
}

impl<F: Real> PSeminorm<F> {
    pub fn new(p: F, weights: Vec<F>) -> Result<Self> {
        let p = validate_p(p)?;
        for (index, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < F::zero() {
                return Err(Error::InvalidWeight {
                    index,
                    value: w.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { p, weights })
    }

    /// The ordinary ℓ^p-type functional with unit weights.
    pub fn uniform(p: F, dim: usize) -> Result<Self> {
        Self::new(p, vec![F::one(); dim])
    }

    pub fn p(&self) -> F {
        self.p
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    fn check_dim<S>(&self, x: &Vector<S>) -> Result<()> {
        if x.0.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.0.len(),
            })
        }
    }

    pub fn eval<S: Scalar>(&self, x: &Vector<S>) -> Result<F> {
        self.check_dim(x)?;
        Ok(self
            .weights
            .iter()
            .zip(x.entries())
            .filter(|(w, _)| !w.is_zero())
            .map(|(w, xi)| {
                let a = F::from_scalar(&xi.abs());
                if a.is_zero() {
                    F::zero()
                } else {
                    *w * a.powf(self.p)
                }
            })
            .fold(F::zero(), |acc, t| acc + t))
    }

    /// Membership of `y` in the open ball `{y : σ(y − center) < eps}`.
    pub fn ball_contains<S: Scalar>(
        &self,
        center: &Vector<S>,
        eps: F,
        y: &Vector<S>,
    ) -> Result<bool> {
        if eps.is_nan() || eps <= F::zero() {
            return Err(Error::InvalidArgument(
                "ball radius must be positive".into(),
            ));
        }
        self.check_dim(center)?;
        Ok(self.eval(&y.sub(center)?)? < eps)
    }
}

/// Free-function form of [`PSeminorm::eval`].
pub fn eval_seminorm<F: Real, S: Scalar>(s: &PSeminorm<F>, x: &Vector<S>) -> Result<F> {
    s.eval(x)
}

/// Free-function form of [`PSeminorm::ball_contains`].
pub fn ball_contains<F: Real, S: Scalar>(
    center: &Vector<S>,
    s: &PSeminorm<F>,
    eps: F,
    y: &Vector<S>,
) -> Result<bool> {
    s.ball_contains(center, eps, y)
}

/// A nonempty family of seminorms on a common space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PSeminorm<F>>", into = "Vec<PSeminorm<F>>")]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + Deserialize<'de>"
))]
pub struct SeminormFamily<F> {
    members: Vec<PSeminorm<F>>,
}

impl<F: Real> TryFrom<Vec<PSeminorm<F>>> for SeminormFamily<F> {
    type Error = Error;

    fn try_from(members: Vec<PSeminorm<F>>) -> Result<Self> {
        Self::new(members)
    }
}

impl<F: Real> From<SeminormFamily<F>> for Vec<PSeminorm<F>> {
    fn from(f: SeminormFamily<F>) -> Self {
        f.members
    }
}

impl<F: Real> SeminormFamily<F> {
    pub fn new(members: Vec<PSeminorm<F>>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let dim = first.dim();
        if let Some(bad) = members.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { members })
    }

    pub fn single(s: PSeminorm<F>) -> Self {
        Self { members: vec![s] }
    }

    pub fn members(&self) -> &[PSeminorm<F>] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// True iff no member separates `x` from `y`, i.e. every neighbourhood of
    /// one contains the other.
    pub fn points_indistinguishable<S: Scalar>(
        &self,
        x: &Vector<S>,
        y: &Vector<S>,
    ) -> Result<bool> {
        let d = x.sub(y)?;
        let atol = F::lit(INDISTINGUISHABLE_ATOL);
        for s in &self.members {
            if s.eval(&d)? > atol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn points_indistinguishable<F: Real, S: Scalar>(
    family: &SeminormFamily<F>,
    x: &Vector<S>,
    y: &Vector<S>,
) -> Result<bool> {
    family.points_indistinguishable(x, y)
}

/// Worst violations found by [`check_seminorm_axioms`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub tol: f64,
    pub triangle_violations: usize,
    /// Minimum of `σ(x) + σ(y) − σ(x + y)` over the samples.
    pub worst_triangle_slack: f64,
    pub homogeneity_violations: usize,
    /// Maximum of `|σ(kx) − |k|^p σ(x)| / (1 + σ(kx))`.
    pub worst_homogeneity_residual: f64,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.triangle_violations == 0 && self.homogeneity_violations == 0
    }
}

fn sample_coordinate<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10u8) {
        0 => 0.0,
        1 => rng.random_range(-1e-3..1e-3),
        _ => rng.random_range(-10.0..10.0),
    }
}

fn sample_multiplier<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10u8) {
        0 => 0.0,
        1 => -1.0,
        2 => 2.0,
        3 => rng.random_range(-1e-2..1e-2),
        _ => rng.random_range(-10.0..10.0),
    }
}

/// Samples `(x, y, k)` triples and measures both seminorm axioms.
///
/// Triangle violations are counted when `σ(x) + σ(y) − σ(x + y) < −tol`;
/// homogeneity violations when `|σ(kx) − |k|^p σ(x)| > tol·(1 + σ(kx))`.
pub fn check_seminorm_axioms(
    s: &PSeminorm<f64>,
    sample_count: usize,
    seed: u64,
    tol: f64,
) -> Result<AxiomReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument(
            "sample_count must be at least 1".into(),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = s.dim();
    let mut report = AxiomReport {
        samples: sample_count,
        tol,
        triangle_violations: 0,
        worst_triangle_slack: f64::INFINITY,
        homogeneity_violations: 0,
        worst_homogeneity_residual: 0.0,
    };
    for _ in 0..sample_count {
        let x = Vector(
            (0..d)
                .map(|_| sample_coordinate(&mut rng))
                .collect::<Vec<f64>>(),
        );
        let y = Vector(
            (0..d)
                .map(|_| sample_coordinate(&mut rng))
                .collect::<Vec<f64>>(),
        );
        let k = sample_multiplier(&mut rng);

        let slack = s.eval(&x)? + s.eval(&y)? - s.eval(&x.add(&y)?)?;
        report.worst_triangle_slack = report.worst_triangle_slack.min(slack);
        if slack < -tol {
            report.triangle_violations += 1;
        }

        let skx = s.eval(&x.scale(&k))?;
        let residual = (skx - k.abs().powf(s.p()) * s.eval(&x)?).abs();
        let rel = residual / (1.0 + skx);
        report.worst_homogeneity_residual = report.worst_homogeneity_residual.max(rel);
        if residual > tol * (1.0 + skx) {
            report.homogeneity_violations += 1;
        }
    }
    Ok(report)
}
