//! Plausible algorithmic recourse as constrained MAP inference over
//! class-conditional probabilistic circuits.
//!
//! The pipeline has three phases:
//!
//! 1. **Pretraining** ([`data`], [`circuit`], [`neural`]): discretize the raw
//!    table, train the classifier `f`, and learn one sum-product network per
//!    class (`p⁺`, `p⁻`).
//! 2. **Amortized generation** ([`recourse`], [`constraints`]): train a
//!    neighborhood encoder and a generator that maps a denied factual to
//!    per-feature categorical distributions, with hard constraints enforced
//!    by logit masking.
//! 3. **Local search** ([`refine`]): repair validity within the decoded
//!    candidate's Hamming budget and revert superfluous changes.
//!
//! [`bench`] wires the phases into fold-based experiments and computes the
//! evaluation metrics.

pub mod bench;
pub mod circuit;
pub mod constraints;
pub mod data;
pub mod error;
pub mod neural;
pub mod recourse;
pub mod refine;

pub use error::{Error, Result};
