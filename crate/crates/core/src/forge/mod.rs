//! Preference-data synthesis from monolingual corpora.
//!
//! Row filters (normalization, monolingual gate, length ratio, instruction
//! dedup, generation-failure detection), deterministic code-mix injection
//! and the pipeline that composes them into triplets or quadruplets.

mod filters;
mod inject;
mod lexicon;
mod pipeline;

pub use filters::{
    dedup_instructions, dedup_key, failure_filter, length_ratio_filter, monolingual_gate,
    normalize, FailureConfig,
};
pub use inject::{inject_code_mix, InjectConfig, InjectError, Injection, LangSet};
pub use lexicon::{Lang, LexiconError, SubstitutionLexicon};
pub use pipeline::{
    build_triplets, build_triplets_with, ForgeConfig, ForgeError, ForgeMode, ForgeOutcome,
    ForgedRow, PreferenceQuadruplet, PreferenceTriplet, RejectionKind, RowExecutor, Sequential,
    Skip, SourceRow, Stage, StageCounts,
};
