use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::metrics::Ratio;
use crate::textscan::Scanner;

use super::filters::{dedup_key, failure_filter, length_ratio_filter, monolingual_gate, normalize, FailureConfig};
use super::inject::{inject_code_mix, InjectConfig};
use super::lexicon::SubstitutionLexicon;

/// Which rejected response a row gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForgeMode {
    /// Rejected = chosen with injected foreign words.
    CodeMixed,
    /// Rejected = the row's foreign-language response.
    FullForeign,
    /// FullForeign plus an injected `confusion` response.
    Quadruplet,
}

impl ForgeMode {
    fn uses_foreign(self) -> bool {
        matches!(self, ForgeMode::FullForeign | ForgeMode::Quadruplet)
    }

    fn injects(self) -> bool {
        matches!(self, ForgeMode::CodeMixed | ForgeMode::Quadruplet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectionKind {
    FullForeign,
    CodeMixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRow {
    pub id: String,
    pub instruction: String,
    pub chosen: String,
    pub foreign_response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceTriplet {
    pub id: String,
    pub instruction: String,
    pub chosen: String,
    pub rejected: String,
    pub rejection_kind: RejectionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceQuadruplet {
    pub triplet: PreferenceTriplet,
    pub confusion: String,
    /// Chosen had fewer than `k` words, so every word was replaced.
    pub insufficient_words: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForgedRow {
    Triplet(PreferenceTriplet),
    Quadruplet(PreferenceQuadruplet),
}

impl ForgedRow {
    pub fn triplet(&self) -> &PreferenceTriplet {
        match self {
            ForgedRow::Triplet(t) => t,
            ForgedRow::Quadruplet(q) => &q.triplet,
        }
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Normalize,
    MonolingualGate,
    LengthRatio,
    Dedup,
    FailureFilter,
    Injection,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Normalize,
        Stage::MonolingualGate,
        Stage::LengthRatio,
        Stage::Dedup,
        Stage::FailureFilter,
        Stage::Injection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Normalize => "normalize",
            Stage::MonolingualGate => "monolingual_gate",
            Stage::LengthRatio => "length_ratio",
            Stage::Dedup => "dedup",
            Stage::FailureFilter => "failure_filter",
            Stage::Injection => "injection",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A row dropped by some stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    pub id: String,
    pub stage: Stage,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub input: u64,
    pub output: u64,
    pub dropped: BTreeMap<Stage, u64>,
    /// Emitted rows whose chosen had fewer than `k` words.
    pub insufficient_words: u64,
}

impl StageCounts {
    pub fn dropped_at(&self, stage: Stage) -> u64 {
        self.dropped.get(&stage).copied().unwrap_or(0)
    }

    pub fn total_dropped(&self) -> u64 {
        self.dropped.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeConfig {
    pub mode: ForgeMode,
    pub inject: InjectConfig,
    pub length_lo: Ratio,
    pub length_hi: Ratio,
    pub failure: FailureConfig,
}

impl ForgeConfig {
    pub fn new(mode: ForgeMode) -> Self {
        Self {
            mode,
            inject: InjectConfig::default(),
            length_lo: Ratio::new(2, 5),
            length_hi: Ratio::new(2, 1),
            failure: FailureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("mode requires a non-empty substitution lexicon")]
    LexiconRequired,
    #[error("no injection language enabled")]
    NoLanguages,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeOutcome {
    pub rows: Vec<ForgedRow>,
    pub counts: StageCounts,
    pub skips: Vec<Skip>,
}

/// Maps a function over a slice, preserving order. Lets callers run the
/// row-local stages in parallel while dedup stays sequential.
pub trait RowExecutor {
    fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl RowExecutor for Sequential {
    fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        items.iter().map(f).collect()
    }
}

struct Prepared {
    id: String,
    instruction: String,
    chosen: String,
    foreign: Option<String>,
}

fn skip(id: &str, stage: Stage, reason: impl Into<String>) -> Skip {
    Skip {
        id: id.into(),
        stage,
        reason: reason.into(),
    }
}

fn prepare(row: &SourceRow, config: &ForgeConfig, scanner: &Scanner) -> Result<Prepared, Skip> {
    let instruction = normalize(&row.instruction);
    let chosen = normalize(&row.chosen);
    if instruction.is_empty() {
        return Err(skip(&row.id, Stage::Normalize, "empty instruction"));
    }
    if chosen.is_empty() {
        return Err(skip(&row.id, Stage::Normalize, "empty chosen response"));
    }
    let foreign = if config.mode.uses_foreign() {
        match row.foreign_response.as_deref().map(normalize) {
            Some(f) if !f.is_empty() => Some(f),
            _ => return Err(skip(&row.id, Stage::Normalize, "missing foreign response")),
        }
    } else {
        None
    };

    if !monolingual_gate(&chosen, scanner) {
        return Err(skip(&row.id, Stage::MonolingualGate, "chosen is not monolingual"));
    }
    if let Some(f) = &foreign {
        if monolingual_gate(f, scanner) {
            return Err(skip(&row.id, Stage::MonolingualGate, "foreign response is target-script"));
        }
        if !length_ratio_filter(&chosen, f, config.length_lo, config.length_hi) {
            let reason = format!(
                "length ratio {}/{} outside bounds",
                chosen.chars().count(),
                f.chars().count()
            );
            return Err(skip(&row.id, Stage::LengthRatio, reason));
        }
    }
    Ok(Prepared {
        id: row.id.clone(),
        instruction,
        chosen,
        foreign,
    })
}

fn finish(
    row: &Prepared,
    config: &ForgeConfig,
    lexicon: Option<&SubstitutionLexicon>,
    scanner: &Scanner,
) -> Result<ForgedRow, Skip> {
    if !failure_filter(&row.chosen, &config.failure) {
        return Err(skip(&row.id, Stage::FailureFilter, "chosen looks like a failed generation"));
    }
    if let Some(f) = &row.foreign {
        if !failure_filter(f, &config.failure) {
            return Err(skip(&row.id, Stage::FailureFilter, "foreign response looks like a failed generation"));
        }
    }
    let injected = match lexicon.filter(|_| config.mode.injects()) {
        None => None,
        Some(lex) => {
            let inj = inject_code_mix(&row.chosen, &row.id, lex, &config.inject, scanner)
                .map_err(|e| skip(&row.id, Stage::Injection, format!("{e}")))?;
            if monolingual_gate(&inj.text, scanner) {
                return Err(skip(&row.id, Stage::Injection, "injection left the text monolingual"));
            }
            Some(inj)
        }
    };
    let base = |rejected: String, rejection_kind| PreferenceTriplet {
        id: row.id.clone(),
        instruction: row.instruction.clone(),
        chosen: row.chosen.clone(),
        rejected,
        rejection_kind,
    };
    Ok(match (config.mode, injected, &row.foreign) {
        (ForgeMode::CodeMixed, Some(inj), _) => {
            ForgedRow::Triplet(base(inj.text, RejectionKind::CodeMixed))
        }
        (ForgeMode::FullForeign, _, Some(f)) => {
            ForgedRow::Triplet(base(f.clone(), RejectionKind::FullForeign))
        }
        (ForgeMode::Quadruplet, Some(inj), Some(f)) => ForgedRow::Quadruplet(PreferenceQuadruplet {
            triplet: base(f.clone(), RejectionKind::FullForeign),
            confusion: inj.text,
            insufficient_words: inj.insufficient_words,
        }),
        _ => unreachable!("prepare and validation guarantee the mode's inputs"),
    })
}

/// Runs normalize → monolingual gate → length ratio (modes with a foreign
/// response) → dedup → failure filter → injection (modes that inject).
pub fn build_triplets(
    source: &[SourceRow],
    lexicon: Option<&SubstitutionLexicon>,
    config: &ForgeConfig,
    scanner: &Scanner,
) -> Result<ForgeOutcome, ForgeError> {
    build_triplets_with(&Sequential, source, lexicon, config, scanner)
}

pub fn build_triplets_with<E: RowExecutor>(
    executor: &E,
    source: &[SourceRow],
    lexicon: Option<&SubstitutionLexicon>,
    config: &ForgeConfig,
    scanner: &Scanner,
) -> Result<ForgeOutcome, ForgeError> {
    if config.mode.injects() {
        match lexicon {
            Some(l) if !l.is_empty() => {}
            _ => return Err(ForgeError::LexiconRequired),
        }
        if config.inject.langs.langs().is_empty() {
            return Err(ForgeError::NoLanguages);
        }
    }

    let mut counts = StageCounts {
        input: source.len() as u64,
        ..StageCounts::default()
    };
    let mut skips = Vec::new();
    let mut note = |s: Skip, counts: &mut StageCounts| {
        *counts.dropped.entry(s.stage).or_insert(0) += 1;
        skips.push(s);
    };

    let prepared = executor.map(source, |row| prepare(row, config, scanner));
    let mut survivors = Vec::new();
    let mut first_seen: BTreeMap<String, String> = BTreeMap::new();
    for result in prepared {
        let row = match result {
            Ok(row) => row,
            Err(s) => {
                note(s, &mut counts);
                continue;
            }
        };
        let key = dedup_key(&row.instruction, scanner);
        if let Some(first) = first_seen.get(&key) {
            let s = skip(&row.id, Stage::Dedup, format!("duplicate instruction of {first}"));
            note(s, &mut counts);
            continue;
        }
        first_seen.insert(key, row.id.clone());
        survivors.push(row);
    }

    let finished = executor.map(&survivors, |row| finish(row, config, lexicon, scanner));
    let mut rows = Vec::new();
    for result in finished {
        match result {
            Ok(row) => {
                if let ForgedRow::Quadruplet(q) = &row {
                    counts.insufficient_words += u64::from(q.insufficient_words);
                }
                rows.push(row);
            }
            Err(s) => note(s, &mut counts),
        }
    }
    counts.output = rows.len() as u64;
    Ok(ForgeOutcome { rows, counts, skips })
}
