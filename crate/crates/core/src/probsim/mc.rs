//! Seeded Monte Carlo estimates over the independent-event model.
//!
//! Samples are grouped into blocks of [`BLOCK_SAMPLES`]; block `b` draws
//! from `ChaCha8Rng::seed_from_u64(seed)` on stream `b`. Blocks run in
//! parallel and their partial sums are merged in block order, so results
//! are bit-identical to a sequential run for the same `(seed, samples,
//! mode)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::{big_form, fits_i128, narrow, EnumInt, IntegerForm};
use super::expr::{rv_combine, RVLinearExpr};
use super::model::IndepEventModel;
use crate::error::{Error, Result};

pub const BLOCK_SAMPLES: u64 = 4096;
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Recorded in reports so a reader can reproduce the stream.
pub const GENERATOR: &str =
    "rand_chacha::ChaCha8Rng (seed_from_u64), stream = block index, 4096 samples per block";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplingMode {
    /// Draw each referenced `S_k` directly as a Bernoulli(1/k) event.
    Membership,
    /// Draw every product-space coordinate `v_k ~ Uniform([k])` for
    /// `k = 1..=depth` and set `S_k = {v_k = 1}`.
    FullCoordinate { depth: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    #[serde(flatten)]
    pub mode: SamplingMode,
}

impl McConfig {
    pub fn membership(seed: u64, samples: u64) -> Self {
        Self {
            seed,
            samples,
            mode: SamplingMode::Membership,
        }
    }

    pub fn full_coordinate(seed: u64, samples: u64, depth: u64) -> Self {
        Self {
            seed,
            samples,
            mode: SamplingMode::FullCoordinate { depth },
        }
    }

    /// Checks the sample count and, in full-coordinate mode, that the
    /// simulated depth covers `max_index`.
    pub fn validate(&self, max_index: Option<u64>) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        let limit = match self.mode {
            SamplingMode::Membership => u32::MAX as u64,
            SamplingMode::FullCoordinate { depth } => depth.min(u32::MAX as u64),
        };
        if let Some(k) = max_index.filter(|&k| k > limit) {
            return Err(Error::IndexOutOfRange {
                index: k,
                min: 1,
                max: limit,
            });
        }
        Ok(())
    }

    fn blocks(&self) -> u64 {
        self.samples.div_ceil(BLOCK_SAMPLES)
    }

    fn block_len(&self, block: u64) -> u64 {
        (self.samples - block * BLOCK_SAMPLES).min(BLOCK_SAMPLES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − target| ≤ k·stderr`, plus [`ROUNDING_SLACK`] for the float
    /// accumulation of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + ROUNDING_SLACK
    }

    /// `mean ≥ bound − k·stderr`, with the same slack as [`Self::within`].
    pub fn at_least(&self, bound: f64, k: f64) -> bool {
        self.mean >= bound - k * self.stderr - ROUNDING_SLACK
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Fills `occ[j]` with the occurrence of `S_{indices[j]}` for one outcome.
/// `indices` must be sorted ascending.
fn draw_pattern<R: Rng>(rng: &mut R, mode: SamplingMode, indices: &[u64], occ: &mut [bool]) {
    match mode {
        SamplingMode::Membership => {
            for (o, &k) in occ.iter_mut().zip(indices) {
                *o = rng.random_ratio(1, k as u32);
            }
        }
        SamplingMode::FullCoordinate { depth } => {
            let mut j = 0;
            for k in 1..=depth {
                let v = rng.random_range(1..=k);
                if j < indices.len() && indices[j] == k {
                    occ[j] = v == 1;
                    j += 1;
                }
            }
        }
    }
}

/// Iterator over occurrence patterns `(χ_{S_1}, …, χ_{S_K})`.
pub struct OccurrenceStream {
    cfg: McConfig,
    indices: Vec<u64>,
    block: u64,
    in_block: u64,
    rng: ChaCha8Rng,
    emitted: u64,
}

impl Iterator for OccurrenceStream {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        if self.emitted == self.cfg.samples {
            return None;
        }
        if self.in_block == BLOCK_SAMPLES {
            self.block += 1;
            self.in_block = 0;
            self.rng = block_rng(self.cfg.seed, self.block);
        }
        let mut occ = vec![false; self.indices.len()];
        draw_pattern(&mut self.rng, self.cfg.mode, &self.indices, &mut occ);
        self.in_block += 1;
        self.emitted += 1;
        Some(occ)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.cfg.samples - self.emitted) as usize;
        (left, Some(left))
    }
}

/// Seeded stream of joint outcomes of `S_1, …, S_K` for the model's `K`.
pub fn sample_occurrences(model: &IndepEventModel, cfg: &McConfig) -> Result<OccurrenceStream> {
    cfg.validate(Some(model.max_index()))?;
    Ok(OccurrenceStream {
        cfg: *cfg,
        indices: (1..=model.max_index()).collect(),
        block: 0,
        in_block: 0,
        rng: block_rng(cfg.seed, 0),
        emitted: 0,
    })
}

fn scaled<I: EnumInt>(r: &RVLinearExpr, t: &BigRational) -> IntegerForm<I> {
    narrow(&big_form(r, t))
}

fn fits(r: &RVLinearExpr, t: &BigRational) -> bool {
    fits_i128(&big_form(r, t), &BigInt::from(1))
}

/// Runs `per_sample` over all samples block by block and merges the
/// per-block accumulators in block order.
fn run_blocks<A, F>(cfg: &McConfig, indices: &[u64], per_sample: F) -> Vec<A>
where
    A: Default + Send,
    F: Fn(&mut A, &[bool]) + Sync,
{
    (0..cfg.blocks())
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(cfg.seed, b);
            let mut occ = vec![false; indices.len()];
            let mut acc = A::default();
            for _ in 0..cfg.block_len(b) {
                draw_pattern(&mut rng, cfg.mode, indices, &mut occ);
                per_sample(&mut acc, &occ);
            }
            acc
        })
        .collect()
}

fn value<I: EnumInt>(form: &IntegerForm<I>, occ: &[bool]) -> I {
    form.numerators
        .iter()
        .zip(occ)
        .filter(|(_, o)| **o)
        .fold(I::zero(), |acc, (n, _)| acc + n.clone())
}

fn tail_hits<I: EnumInt>(form: &IntegerForm<I>, cfg: &McConfig) -> u64 {
    run_blocks::<u64, _>(cfg, &form.indices, |hits, occ| {
        if value(form, occ).abs() > form.threshold {
            *hits += 1;
        }
    })
    .into_iter()
    .sum()
}

/// Frequency estimate of `P(|r| > t)` with binomial standard error.
pub fn tail_probability_mc(
    r: &RVLinearExpr,
    t: &BigRational,
    cfg: &McConfig,
) -> Result<McEstimate> {
    cfg.validate(r.max_index())?;
    if t.is_negative() {
        return Err(Error::InvalidArgument(
            "threshold must be nonnegative".into(),
        ));
    }
    let hits = if fits(r, t) {
        tail_hits(&scaled::<i128>(r, t), cfg)
    } else {
        tail_hits(&scaled::<BigInt>(r, t), cfg)
    };
    let n = cfg.samples as f64;
    let mean = hits as f64 / n;
    Ok(McEstimate {
        mean,
        stderr: (mean * (1.0 - mean) / n).sqrt(),
        samples: cfg.samples,
        seed: cfg.seed,
    })
}

#[derive(Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
}

/// `|v| / (scale + |v|)` in floating point.
fn bounded<I: EnumInt>(v: &I, scale: &I) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let a = v.abs();
    let den = scale.clone() + a.clone();
    BigRational::new_raw(a.into(), den.into())
        .to_f64()
        .unwrap_or(f64::NAN)
}

fn rho_moments<I: EnumInt>(form: &IntegerForm<I>, cfg: &McConfig) -> Moments {
    run_blocks::<Moments, _>(cfg, &form.indices, |m, occ| {
        let f = bounded(&value(form, occ), &form.scale);
        m.sum += f;
        m.sum_sq += f * f;
    })
    .into_iter()
    .fold(Moments::default(), |a, b| Moments {
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
    })
}

/// Sample mean of `|r1 − r2| / (1 + |r1 − r2|)`.
pub fn rho_mc(r1: &RVLinearExpr, r2: &RVLinearExpr, cfg: &McConfig) -> Result<McEstimate> {
    let d = rv_combine(
        &BigRational::from_integer(1.into()),
        r1,
        &BigRational::from_integer((-1).into()),
        r2,
    );
    cfg.validate(d.max_index())?;
    let zero = BigRational::zero();
    let m = if fits(&d, &zero) {
        rho_moments(&scaled::<i128>(&d, &zero), cfg)
    } else {
        rho_moments(&scaled::<BigInt>(&d, &zero), cfg)
    };
    let n = cfg.samples as f64;
    let mean = m.sum / n;
    let var = if cfg.samples > 1 {
        ((m.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples: cfg.samples,
        seed: cfg.seed,
    })
}
