//! Convergence of `x_n` from convergence of `2x_{n+1} − x_n`.
//!
//! In a space whose topology comes from p-homogeneous seminorms
//! (`0 < p ≤ 1`), `2x_{n+1} − x_n → x` forces `x_n → x`, with an explicit
//! tail bound. Under convergence in probability the implication fails.
//!
//! * [`pspace`]: weighted p-power seminorms, balls, indistinguishable points.
//! * [`seqlab`]: the averaging transform, its inverse and closed form.
//! * [`certifier`]: per-(σ, ε) tail certificates built from the bound chain.
//! * [`probsim`]: the independent-event model, exact enumeration and
//!   Monte Carlo.
//! * [`cli`]: the `recurlab` command-line driver.
//!
//! Sequence arithmetic is generic over [`Scalar`] (`f32`, `f64`,
//! [`BigRational`]); seminorm values are generic over [`Real`].
//!
//! ```
//! use recurlab::certifier::{certify, DEFAULT_EPS_GRID};
//! use recurlab::pspace::{PSeminorm, SeminormFamily, Vector};
//! use recurlab::seqlab::SequenceSpec;
//! use recurlab::Rational;
//!
//! # fn main() -> recurlab::Result<()> {
//! let family = SeminormFamily::single(PSeminorm::uniform(0.5, 1)?);
//! // x_1 = 1, c_n = 0.5^n
//! let spec = SequenceSpec::driven(vec![1.0], SequenceSpec::geometric(vec![0.5], vec![1.0]));
//! let limit = Vector::new(vec![0.0])?.to_exact()?;
//! let report = certify::<Rational, f64>(&family, &spec, &limit, &DEFAULT_EPS_GRID, 200)?;
//! assert!(report.all_certified);
//! # Ok(())
//! # }
//! ```

pub mod certifier;
pub mod cli;
pub mod error;
pub mod probsim;
pub mod pspace;
pub mod scalar;
pub mod seqlab;

pub use num_rational::BigRational;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = BigRational;
/// Point with `f64` coordinates.
pub type Vec64 = pspace::Vector<f64>;
/// Point with exact rational coordinates.
pub type ExactVector = pspace::Vector<BigRational>;
/// Exact sequence prefix.
pub type ExactPrefix = seqlab::SequencePrefix<BigRational>;
/// Seminorm with `f64` parameters.
pub type Seminorm = pspace::PSeminorm<f64>;
/// Family of `f64` seminorms.
pub type Family = pspace::SeminormFamily<f64>;
