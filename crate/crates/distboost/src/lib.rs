//! Communication-efficient distributed boosting with resilience to
//! non-realizable data.
//!
//! `k` players each hold part of a labeled sample over the domain
//! `{0, .., n-1}`; a center coordinates boosting rounds over a bit-metered
//! star network. When the data is realizable by a known finite hypothesis
//! class, boosting alone produces a consistent majority vote. When it is
//! not, stuck rounds certify a non-realizable subsample, which is removed
//! and later patched by majority label; the final classifier makes at most
//! as many errors as the best hypothesis in the class.
//!
//! The crate provides the protocol simulator ([`protocol`]), an exact
//! big-integer implementation of the underlying boosting arithmetic
//! ([`boosting`]), ε-approximation construction and verification
//! ([`approx`]), the bit-level wire formats and ledger ([`network`]),
//! instance generators ([`gen`]), and the set-disjointness reduction that
//! exhibits the communication cost of non-realizability ([`hardness`]).

pub mod approx;
pub mod boosting;
pub mod cli;
pub mod config;
pub mod error;
pub mod gen;
pub mod hardness;
pub mod hypothesis;
pub mod model;
pub mod network;
pub mod protocol;

// The guide's code blocks run as doctests so book and library cannot
// drift apart.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/hypotheses.md")]
    mod hypotheses {}
    #[doc = include_str!("../../../book/src/boosting.md")]
    mod boosting {}
    #[doc = include_str!("../../../book/src/approximation.md")]
    mod approximation {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/hardness.md")]
    mod hardness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub use error::{Error, Result};
pub use hypothesis::{Classifier, ClassKind, HypothesisClass};
pub use model::{DistributedSample, Example, Label, Rat, Sample};
pub use protocol::{accurately_classify, boost_attempt, ApproxMode, BoostOutcome, ProtocolConfig};
