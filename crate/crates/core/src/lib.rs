//! Language-confusion measurement and preference-data tooling.
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`textscan`]: whitespace tokenization, Unicode script classification
//!   and sentence segmentation.
//! * [`metrics`]: word-level (WPR) and sentence-level (LPR) target-language
//!   precision, threshold ratios and repeat-averaged aggregates, all carried
//!   as exact rationals.
//! * [`forge`]: deterministic code-mix injection and the filtering pipeline
//!   that turns monolingual corpora into preference triplets/quadruplets.
//! * [`diagnostics`]: loss trajectories, delta loss and ORPO/DPO loss
//!   calculators over exported log-probabilities.
//! * [`harness`]: grouping and scoring of generation records into
//!   evaluation reports.
//!
//! File formats, HTTP collection and the command-line interface live in the
//! `langmix` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod forge;
pub mod harness;
pub mod metrics;
pub mod ratio;
pub mod rng;
pub mod textscan;

pub use metrics::{CorpusScore, Ratio, ScoredResponse, Scoring};
pub use textscan::{CharClass, Scanner, ScriptClass, ScriptConfig, SentenceSpan, TokenRecord};

/// Version string recorded in report metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
