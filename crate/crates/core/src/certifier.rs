//! Quantitative convergence certificates.
//!
//! Given `σ(2x_{n+1} − x_n) < (2^p − 1)ε` for all `n ≥ N`, the chain
//!
//! ```text
//! σ(2^m x_{N+m} − x_N)        < (2^{mp} − 1) ε
//! σ(x_{N+m} − 2^{−m} x_N)     < (1 − 2^{−mp}) ε
//! σ(x_{N+m})                  < 2^{−mp} σ(x_N) + (1 − 2^{−mp}) ε
//! ```
//!
//! follows from p-homogeneity and the triangle inequality, so the tail of
//! `σ(x_n)` ends up below any `ε`. This module runs every link of that chain
//! on an observed prefix (after shifting by the claimed limit) and reports
//! the result as a [`TailCertificate`].
//!
//! Floats cannot witness strict inequalities, so every `<` is checked as
//! `≤` with relative slack [`BOUND_RTOL`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pspace::{PSeminorm, SeminormFamily, Vector};
use crate::scalar::{Real, Scalar};
use crate::seqlab::{self, forward_transform, validate_schedule, SequencePrefix, SequenceSpec};

/// Relative slack applied to every observed-vs-bound comparison.
pub const BOUND_RTOL: f64 = 1e-9;
/// Absolute slack for `empirical_limsup ≤ ε`.
pub const LIMSUP_SLACK: f64 = 1e-6;
/// Default ε grid for [`certify`] callers that do not supply one.
pub const DEFAULT_EPS_GRID: [f64; 5] = [1.0, 0.3, 0.1, 0.03, 0.01];
/// Description of the window used for the empirical limsup.
pub const LIMSUP_WINDOW: &str = "max over the final quartile of the prefix";

fn within<F: Real>(observed: F, bound: F) -> bool {
    observed <= bound + F::lit(BOUND_RTOL) * (F::one() + bound.abs())
}

/// `(2^p − 1)·ε`, the per-step budget for the transformed sequence.
pub fn step_budget<F: Real>(p: F, eps: F) -> F {
    (F::lit(2.0).powf(p) - F::one()) * eps
}

/// Smallest `N` such that `σ(c_n) < (2^p − 1)ε` for every observed `n ≥ N`.
///
/// `c` is the transformed sequence of the already shifted prefix. `None`
/// only says the budget is violated at the end of the observed prefix.
pub fn find_threshold_index<F: Real, T: Scalar>(
    s: &PSeminorm<F>,
    c: &SequencePrefix<T>,
    eps: F,
) -> Result<Option<usize>> {
    check_eps(eps)?;
    let budget = step_budget(s.p(), eps);
    let values = c
        .terms()
        .iter()
        .map(|t| s.eval(t))
        .collect::<Result<Vec<F>>>()?;
    Ok(seqlab::tail_entry_index(&values, budget))
}

/// `2^{−mp}·σ(x_N) + (1 − 2^{−mp})·ε`.
pub fn tail_bound<F: Real>(sigma_xn: F, eps: F, p: F, m: u64) -> F {
    let decay = F::lit(2.0).powf(-(F::from_u64(m).expect("m fits") * p));
    decay * sigma_xn + (F::one() - decay) * eps
}

/// One link of the telescoped estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopeRow<F> {
    pub m: usize,
    /// `σ(2^m y_{N+m} − y_N)` with `y = x − limit`.
    pub lhs: F,
    /// `(2^{mp} − 1)·ε`.
    pub rhs: F,
    /// `σ(y_{N+m} − 2^{−m} y_N)`.
    pub gap: F,
    /// `(1 − 2^{−mp})·ε`.
    pub gap_bound: F,
    pub pass: bool,
}

fn telescope_rows<F: Real, T: Scalar>(
    s: &PSeminorm<F>,
    shifted: &SequencePrefix<T>,
    n: usize,
    eps: F,
) -> Result<Vec<TelescopeRow<F>>> {
    if n < 1 || n > shifted.len() {
        return Err(Error::IndexOutOfRange {
            index: n as u64,
            min: 1,
            max: shifted.len() as u64,
        });
    }
    let base = shifted.term(n).expect("checked");
    let p = s.p();
    let mut rows = Vec::with_capacity(shifted.len() - n);
    for m in 1..=(shifted.len() - n) {
        let y = shifted.term(n + m).expect("in range");
        let scaled = y.lin_comb(&T::pow2(m as i64), base, &-T::one())?;
        let gap_vec = y.lin_comb(&T::one(), base, &-T::pow2(-(m as i64)))?;
        let growth = F::lit(2.0).powf(F::from_usize(m).expect("m fits") * p);
        let lhs = s.eval(&scaled)?;
        let rhs = (growth - F::one()) * eps;
        let gap = s.eval(&gap_vec)?;
        let gap_bound = (F::one() - growth.recip()) * eps;
        let pass = within(lhs, rhs) && within(gap, gap_bound);
        rows.push(TelescopeRow {
            m,
            lhs,
            rhs,
            gap,
            gap_bound,
            pass,
        });
    }
    Ok(rows)
}

/// Checks `σ(2^m (x_{N+m} − limit) − (x_N − limit)) < (2^{mp} − 1)ε` for every
/// `m ≥ 1` available in the prefix, along with the rescaled form.
pub fn telescoped_bound_check<F: Real, T: Scalar>(
    s: &PSeminorm<F>,
    x: &SequencePrefix<T>,
    limit: &Vector<T>,
    n: usize,
    eps: F,
) -> Result<Vec<TelescopeRow<F>>> {
    check_eps(eps)?;
    telescope_rows(s, &x.shift(limit)?, n, eps)
}

fn check_eps<F: Real>(eps: F) -> Result<()> {
    if eps > F::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "epsilon must be positive and finite".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow<F> {
    pub m: usize,
    pub observed: F,
    pub bound: F,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    /// No `N` within the prefix meets the step budget.
    Refused,
    /// A link of the bound chain failed; indicates a defect, not a refusal.
    BoundViolated,
    /// Every bound held but the prefix was too short for the tail to settle
    /// under `ε`.
    LimsupAboveEpsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCertificate<F> {
    pub seminorm_index: usize,
    pub p: F,
    pub epsilon: F,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "sigma_xN")]
    pub sigma_xn: Option<F>,
    pub rows: Vec<BoundRow<F>>,
    pub chain: Vec<TelescopeRow<F>>,
    pub empirical_limsup: F,
    pub verdict: Verdict,
}

impl<F: Real> TailCertificate<F> {
    /// The bound curve `m ↦ 2^{−mp} σ(x_N) + (1 − 2^{−mp}) ε`.
    pub fn bound(&self, m: u64) -> Option<F> {
        self.sigma_xn
            .map(|s| tail_bound(s, self.epsilon, self.p, m))
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport<F> {
    pub prefix_len: usize,
    pub eps_grid: Vec<F>,
    pub limsup_window: &'static str,
    pub certificates: Vec<TailCertificate<F>>,
    pub all_certified: bool,
}

/// Max of `values` over the final quartile (at least one element).
pub fn final_quartile_max<F: Real>(values: &[F]) -> F {
    let window = values.len().div_ceil(4).max(1);
    values[values.len() - window..]
        .iter()
        .fold(F::neg_infinity(), |a, &b| a.max(b))
}

fn certify_one<F: Real, T: Scalar>(
    index: usize,
    s: &PSeminorm<F>,
    shifted: &SequencePrefix<T>,
    c: &SequencePrefix<T>,
    eps: F,
) -> Result<TailCertificate<F>> {
    let distances = shifted
        .terms()
        .iter()
        .map(|t| s.eval(t))
        .collect::<Result<Vec<F>>>()?;
    let empirical_limsup = final_quartile_max(&distances);
    let mut cert = TailCertificate {
        seminorm_index: index,
        p: s.p(),
        epsilon: eps,
        n: None,
        sigma_xn: None,
        rows: Vec::new(),
        chain: Vec::new(),
        empirical_limsup,
        verdict: Verdict::Refused,
    };
    let Some(n) = find_threshold_index(s, c, eps)? else {
        return Ok(cert);
    };
    let sigma_xn = distances[n - 1];
    cert.n = Some(n);
    cert.sigma_xn = Some(sigma_xn);
    cert.rows = (0..=(shifted.len() - n))
        .map(|m| {
            let observed = distances[n - 1 + m];
            let bound = tail_bound(sigma_xn, eps, s.p(), m as u64);
            BoundRow {
                m,
                observed,
                bound,
                pass: within(observed, bound),
            }
        })
        .collect();
    cert.chain = telescope_rows(s, shifted, n, eps)?;
    let chain_ok = cert.rows.iter().all(|r| r.pass) && cert.chain.iter().all(|r| r.pass);
    cert.verdict = if !chain_ok {
        Verdict::BoundViolated
    } else if empirical_limsup > eps + F::lit(LIMSUP_SLACK) {
        Verdict::LimsupAboveEpsilon
    } else {
        Verdict::Certified
    };
    Ok(cert)
}

/// Certifies `x_n → limit` for every `(σ, ε)` pair, in `(σ index, ε)` order.
///
/// The prefix is materialized in `T`, shifted so the claimed limit becomes
/// zero, and transformed; each pair then gets a threshold index and a
/// checked bound curve, or a refusal.
pub fn certify<T: Scalar, F: Real>(
    family: &SeminormFamily<F>,
    x: &SequenceSpec,
    limit: &Vector<T>,
    eps_grid: &[F],
    prefix_len: usize,
) -> Result<CertifyReport<F>> {
    if prefix_len < 3 {
        return Err(Error::PrefixTooShort {
            len: prefix_len,
            min: 3,
        });
    }
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument("epsilon grid is empty".into()));
    }
    for &e in eps_grid {
        check_eps(e)?;
    }
    if limit.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            found: limit.dim(),
        });
    }
    let shifted = x.materialize::<T>(prefix_len)?.shift(limit)?;
    let c = forward_transform(&shifted)?;
    let pairs: Vec<(usize, F)> = (0..family.len())
        .flat_map(|i| eps_grid.iter().map(move |&e| (i, e)))
        .collect();
    let certificates = pairs
        .par_iter()
        .map(|&(i, e)| certify_one(i, &family.members()[i], &shifted, &c, e))
        .collect::<Result<Vec<_>>>()?;
    let all_certified = certificates.iter().all(TailCertificate::is_certified);
    Ok(CertifyReport {
        prefix_len,
        eps_grid: eps_grid.to_vec(),
        limsup_window: LIMSUP_WINDOW,
        certificates,
        all_certified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndistinguishabilityReport {
    pub converges_to_a: bool,
    pub converges_to_b: bool,
    pub limits_indistinguishable: bool,
    /// False only if both limits were accepted yet a seminorm separates them.
    pub pass: bool,
}

/// If the prefix converges to both `lim_a` and `lim_b`, no seminorm in the
/// family may separate the two limits.
pub fn indistinguishable_limits_check<T: Scalar, F: Real>(
    family: &SeminormFamily<F>,
    x: &SequenceSpec,
    lim_a: &Vector<T>,
    lim_b: &Vector<T>,
    prefix_len: usize,
    schedule: &[F],
) -> Result<IndistinguishabilityReport> {
    lim_a.check_dim(lim_b)?;
    validate_schedule(schedule)?;
    let a = seqlab::converges_to(family, x, lim_a, prefix_len, schedule)?.converging;
    let b = seqlab::converges_to(family, x, lim_b, prefix_len, schedule)?.converging;
    let same = family.points_indistinguishable(lim_a, lim_b)?;
    Ok(IndistinguishabilityReport {
        converges_to_a: a,
        converges_to_b: b,
        limits_indistinguishable: same,
        pass: !(a && b) || same,
    })
}
