//! Exact error exponents for the generalized stochastic likelihood decoder
//! (GLD) over discrete memoryless channels.
//!
//! The decoder picks message `m` with probability proportional to
//! `exp{n g(P̂_{x_m y})}`, where `g` is a functional of the joint type of the
//! codeword and the channel output. This crate evaluates, on finite simplex
//! grids, the single-letter exponent formulas of that decoder:
//!
//! - [`rce`]: random coding exponent over constant-composition ensembles,
//!   the ML baseline, and the highest achievable rate with its bounds.
//! - [`expurgated`]: the α/Γ expurgated exponent, the
//!   Csiszár–Körner–Marton baseline, and z-channel closed forms.
//! - [`jsc`]: random binning–coding exponent for source–channel coding with
//!   decoder side information.
//! - [`simulator`]: Monte Carlo validation with constant-composition
//!   codebooks and an exact small-instance ensemble oracle.
//!
//! Everything is measured in nats. The crate is `no_std` + `alloc` when the
//! default `std` feature is disabled; the `parallel` feature spreads outer
//! minimizations over a rayon pool without changing any result.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub mod ext;
pub(crate) mod math;
pub(crate) mod memo;
pub(crate) mod par;
pub(crate) mod refine;
pub(crate) mod threshold;

pub mod expurgated;
pub mod jsc;
pub mod metrics;
pub mod probkit;
pub mod rce;
pub mod simulator;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use metrics::{DecoderMetric, SourceMetric};
pub use probkit::{Channel, Distribution, JointDistribution, SimplexGrid};
