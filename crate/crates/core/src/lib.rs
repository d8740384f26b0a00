//! Time reversal of generalized qubit measurements.
//!
//! A measurement with Kraus operator `M_F(r)` has a time-reversed partner
//! `M̃_R(r) = Θ M_F(r) Θ⁻¹` with `Θ = iσ_y K`. This crate builds those
//! operators for three measurement models (Gaussian pointer, dichotomous
//! outcome, heterodyne-detected fluorescence), evolves quantum trajectories
//! forward and backward, computes the statistical arrow of time of a record,
//! and relates forward and time-reversed weak values.
//!
//! ```
//! use qrev::arrow::{prepost_log_arrow, BoundaryPair};
//! use qrev::channels::{ChannelSpec, Readout};
//! use qrev::qubit::PureState;
//! use qrev::trajectory::{ReadoutRecord, SimConfig};
//!
//! let cfg = SimConfig::new(ChannelSpec::dichotomous(0.25)?, 0.0, 1.0, 1.0, 0)?;
//! let record = ReadoutRecord::new(1.0, vec![Readout::Binary(0)]);
//! let ends = BoundaryPair {
//!     pre: PureState::from_angles(std::f64::consts::FRAC_PI_2, 0.0),
//!     post: PureState::ground(),
//! };
//! let arrow = prepost_log_arrow(&record, &ends, &cfg)?;
//! assert!((arrow.log_r - (0.25f64 / 0.75).ln()).abs() < 1e-12);
//! # Ok::<(), qrev::Error>(())
//! ```
//!
//! The guide in `book/` walks through each concept; its code blocks are
//! compiled and run as doc-tests of this crate.

pub mod arrow;
pub mod channels;
mod error;
mod precise;
pub mod qubit;
pub mod trajectory;
pub mod weak;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/time-reversal.md")]
    mod time_reversal {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/arrow-of-time.md")]
    mod arrow_of_time {}
    #[doc = include_str!("../../../book/src/imperfect-detection.md")]
    mod imperfect_detection {}
    #[doc = include_str!("../../../book/src/weak-values.md")]
    mod weak_values {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
