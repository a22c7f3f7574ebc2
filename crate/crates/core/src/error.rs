use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("transfer function is not causal (numerator reaches z^{max_exponent} against a causal denominator)")]
    NonCausal { max_exponent: i64 },

    #[error("root finding did not converge (relative residual {residual:e})")]
    RootFinding { residual: f64 },

    #[error(
        "reconstruction impossible: S_vv is singular (rank defect {rank_defect}; \
         {vanishing_terms} of {total_terms} modulation-determinant terms vanish)"
    )]
    SingularBank {
        rank_defect: usize,
        vanishing_terms: usize,
        total_terms: usize,
    },

    #[error("evaluation is singular at z = {re} + {im}j")]
    SingularEvaluation { re: f64, im: f64 },

    #[error("impulse response requested for an unstable filter (max pole magnitude {max_pole_magnitude})")]
    Unstable { max_pole_magnitude: f64 },

    #[error("signal exhausted after {available} blocks ({requested} requested)")]
    SequenceExhausted { available: usize, requested: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
