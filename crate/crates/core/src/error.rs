use thiserror::Error;

/// Errors surfaced by state constructors, operator builders and simulators.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("non-finite amplitude")]
    NonFiniteAmplitude,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationLeakage { leakage: f64, tolerance: f64 },

    #[error("degenerate signal: alpha = 0 leaves the two hypotheses identical (kappa = 1)")]
    DegenerateSignal,

    #[error("invalid measurement record: {0}")]
    InvalidRecord(String),

    #[error(
        "step outcome probabilities sum to {sum:.12} over the detector range; \
         leak {leak:.3e} exceeds 1e-9 (Fock truncation breached)"
    )]
    ProbabilityLeak { sum: f64, leak: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
