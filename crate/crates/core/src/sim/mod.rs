//! Monte Carlo simulation of the two-stage scheme.
//!
//! Each block is a data stage that produces a tentative decision `(W1^, W2^)`
//! followed by a short confirmation stage: every user learns through feedback
//! whether its own message was decoded correctly and sends one of two
//! equal-type codewords. The receiver accepts or asks for a retransmission.
//!
//! Randomness follows one splitting rule: trial `t` of a configuration with
//! seed `s` draws from `ChaCha8Rng::seed_from_u64(s)` on stream `t`; the
//! confirmation code, codebooks and importance samplers use reserved streams
//! counted down from `u64::MAX`.

mod analytic;
mod confirmation;
mod entropy;
mod estimate;
mod exact;
mod importance;
mod protocol;
mod rare;
pub mod stats;

use thiserror::Error;

pub use analytic::{analytic_predictor, chernoff_information, AnalyticPrediction};
pub use confirmation::{
    build_confirmation_code, confirmation_test, dbar, quantize_type, ConfirmationCode, ConfirmationTester,
    Decision, Pattern, TestRule, LLR_TIE_TOL,
};
pub use entropy::{entropy_drift_summary, entropy_drift_trace, DriftSummary, EntropyTrace, TRACE_BUDGET};
pub use estimate::{estimate, simulate_sums, TrialStats, TrialSums};
pub use exact::{
    enumeration_sizes, exact_confirmation_stats, exact_confirmation_stats_with, monte_carlo_confirmation_stats,
    ConfirmationStats, ExactMethod, EXACT_BUDGET,
};
pub use importance::{importance_sampled_miss, IsEstimate};
pub use protocol::{
    run_protocol, trial_rng, wrong_pair_weights, DataStageMode, Outcome, Scheme, SchemeConfig, TrialRecord,
    CODEBOOK_BUDGET, DEFAULT_MAX_BLOCKS,
};
pub use rare::{composite_exponent, miss_probabilities, CompositeExponent};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("received block has length {got}, code has length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("enumeration of {size} outcomes exceeds the budget of {budget}")]
    TooLarge { size: f64, budget: f64 },
    #[error("tilted sampling law has empty support")]
    DegenerateTilt,
}
