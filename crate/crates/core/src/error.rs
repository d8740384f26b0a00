use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("readout {readout} does not belong to the {channel} channel")]
    ReadoutMismatch { channel: &'static str, readout: String },

    #[error("operator is rank deficient (|det| = {det:e}); use the channel-specific reversal")]
    RankDeficient { det: f64 },

    #[error("readout has zero probability at step {step} (trace {trace:e})")]
    ImpossibleReadout { step: usize, trace: f64 },

    #[error("arrow of time undefined: forward and backward probabilities both vanish")]
    UndefinedArrow,

    #[error("post-selected state is orthogonal to the pre-selected state (|⟨f|s⟩| = {overlap:e})")]
    OrthogonalPostselection { overlap: f64 },

    #[error("observable is not odd under time reversal (ΘSΘ⁻¹ ≠ −S, deviation {deviation:e})")]
    NotTimeOdd { deviation: f64 },

    #[error("time-reversed weak value {direct} disagrees with −conj(S_w) = {expected}")]
    ReversalMismatch { direct: String, expected: String },

    #[error("branch weights sum to {sum}, expected 1")]
    WeightMismatch { sum: f64 },

    #[error("{0} requires a fluorescence channel")]
    RequiresFluorescence(&'static str),

    #[error("ensemble is empty or has mismatched time grids")]
    BadEnsemble,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
