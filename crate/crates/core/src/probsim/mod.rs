//! A sequence that fails to converge in probability although its averaging
//! transform does.
//!
//! Events `S_k` are independent with `P(S_k) = 1/k`. With `Y_n = 2^n χ_{S_n}`
//! and `X_n = Σ_{k<n} 2^{−(n−k)} Y_k` we have `2X_{n+1} − X_n = Y_n` and
//! `P(|Y_n| > ε) = 1/n → 0`, while `P(|X_{2n+1}| > 1/2) ≥ 1/2` for every `n`.
//! Variables are finite combinations of indicators ([`RVLinearExpr`]); all
//! probabilities are computed exactly by enumeration where feasible and
//! estimated by seeded Monte Carlo otherwise.

mod exact;
mod expr;
mod mc;
mod model;
mod scan;

pub use exact::{
    atom_count, distribution_exact, rho_bracket, rho_exact, tail_probability_exact, RhoBracket,
    MAX_ENUM_TERMS, RHO_BRACKET_BITS, RHO_EXACT_MAX_FREE_TERMS,
};
pub use expr::{
    make_x, make_y, recurrence_residual, rv_combine, satisfies_recurrence,
    verify_recurrence_identity, RVLinearExpr,
};
pub use mc::{
    rho_mc, sample_occurrences, tail_probability_mc, McConfig, McEstimate, OccurrenceStream,
    SamplingMode, BLOCK_SAMPLES, GENERATOR, ROUNDING_SLACK,
};
pub use model::{
    event_probability, parse_rational, rational_string, union_probability_exact, IndepEventModel,
};
pub use scan::{
    convergence_in_probability_scan, quartile_verdict, ScanMode, ScanRow, ScanTable, ScanVerdict,
};
