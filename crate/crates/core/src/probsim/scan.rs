use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::exact::{ser_rational, tail_probability_exact, MAX_ENUM_TERMS};
use super::expr::RVLinearExpr;
use super::mc::{tail_probability_mc, McConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: u64,
    pub value: f64,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_opt_rational"
    )]
    pub exact: Option<BigRational>,
    pub stderr: f64,
    pub mode: ScanMode,
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => ser_rational(r, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    Decaying,
    BoundedAway,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub verdict: ScanVerdict,
}

/// Decaying iff the largest value in the final quartile is at most half the
/// mean of the first quartile. Quartiles have at least one row each.
pub fn quartile_verdict(values: &[f64]) -> ScanVerdict {
    let w = values.len().div_ceil(4).max(1);
    let head = values[..w].iter().sum::<f64>() / w as f64;
    let tail = values[values.len() - w..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if tail <= head / 2.0 {
        ScanVerdict::Decaying
    } else {
        ScanVerdict::BoundedAway
    }
}

/// Tabulates `P(|r_n| > eps)` over `indices`: exact when the variable
/// references at most [`MAX_ENUM_TERMS`] events, Monte Carlo otherwise.
pub fn convergence_in_probability_scan(
    family: impl Fn(u64) -> Result<RVLinearExpr>,
    eps: &BigRational,
    indices: &[u64],
    mc: Option<&McConfig>,
) -> Result<ScanTable> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("index list is empty".into()));
    }
    let mut rows = Vec::with_capacity(indices.len());
    for &n in indices {
        let r = family(n)?;
        let row = if r.num_terms() <= MAX_ENUM_TERMS {
            let p = tail_probability_exact(&r, eps)?;
            ScanRow {
                n,
                value: p.to_f64().unwrap_or(f64::NAN),
                exact: Some(p),
                stderr: 0.0,
                mode: ScanMode::Exact,
            }
        } else {
            let cfg = mc.ok_or(Error::EnumerationTooLarge {
                terms: r.num_terms(),
                cap: MAX_ENUM_TERMS,
            })?;
            let e = tail_probability_mc(&r, eps, cfg)?;
            ScanRow {
                n,
                value: e.mean,
                exact: None,
                stderr: e.stderr,
                mode: ScanMode::Mc,
            }
        };
        rows.push(row);
    }
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    Ok(ScanTable {
        verdict: quartile_verdict(&values),
        rows,
    })
}
