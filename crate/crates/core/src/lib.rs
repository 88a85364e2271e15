//! Distributed rate-splitting precoding for a LEO satellite and a terrestrial
//! base station that share a frequency band but never exchange CSIT.
//!
//! The crate is organised along the processing chain of one Monte-Carlo trial:
//!
//! - [`scenario`]: configuration, user placement and link budgets.
//! - [`channel`]: UPA array responses, Rician/NLoS channel synthesis and
//!   linear-MMSE CSIT estimation with closed-form error covariances.
//! - [`rates`]: stacked precoders, the quadratic-form matrices behind every
//!   rate expression, Jensen lower bounds and true instantaneous rates.
//! - [`decouple`]: interference report values and the decoupled satellite/BS
//!   objectives.
//! - [`gpi`]: the two-stage generalized power iteration (STIN-GPI).
//! - [`baselines`]: SLNR, single-cell ZF and local ZF precoders.
//! - [`harness`]: trial pipeline, sweeps and CSV output.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod baselines;
pub mod channel;
pub mod decouple;
pub mod error;
pub mod gpi;
pub mod harness;
pub mod linalg;
pub mod rates;
pub mod scenario;
pub mod seeding;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
