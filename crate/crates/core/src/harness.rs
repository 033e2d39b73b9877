//! Scoring of generation records into per-(model, method, temperature)
//! reports.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::metrics::{aggregate, default_threshold, score_response, CorpusScore, MetricsError, Ratio, Scoring};
use crate::textscan::Scanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Base,
    Sft,
    Dpo,
    Orpo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Sft => "sft",
            Method::Dpo => "dpo",
            Method::Orpo => "orpo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Method::Base),
            "sft" => Ok(Method::Sft),
            "dpo" => Ok(Method::Dpo),
            "orpo" => Ok(Method::Orpo),
            _ => Err(HarnessError::UnknownMethod(s.into())),
        }
    }
}

/// Sampling temperature, totally ordered.
#[derive(Debug, Clone, Copy)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(value: f64) -> Result<Self, HarnessError> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(HarnessError::InvalidTemperature(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Temperature {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Temperature {}

impl PartialOrd for Temperature {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Temperature {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Temperature {
    /// Integral values keep one decimal (`1.0`); others print shortest form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if libm::trunc(self.0) == self.0 {
            write!(f, "{:.1}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub prompt_id: String,
    pub model: String,
    pub method: Method,
    pub temperature: Temperature,
    pub repeat: u32,
    pub text: String,
}

impl GenerationRecord {
    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            model: self.model.clone(),
            method: self.method,
            temperature: self.temperature,
        }
    }

    pub fn response_id(&self) -> String {
        format!("{}/{}/{}/{}#{}", self.model, self.method, self.temperature, self.prompt_id, self.repeat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub model: String,
    pub method: Method,
    pub temperature: Temperature,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {} / {}", self.model, self.method, self.temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("no generation records")]
    EmptyInput,
    #[error("duplicate record key {0}")]
    DuplicateKey(String),
    #[error("unknown method {0:?} (expected base, sft, dpo or orpo)")]
    UnknownMethod(String),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("repeat numbers start at 1")]
    InvalidRepeat,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Outer "> threshold" reporting cutoff.
    pub threshold: Ratio,
    /// Inner per-sentence cutoff of the LPR indicator.
    pub lpr_tau: Ratio,
    pub repeats: u32,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            threshold: default_threshold(),
            lpr_tau: default_threshold(),
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub key: GroupKey,
    pub score: CorpusScore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedGroup {
    pub key: GroupKey,
    pub records: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportMeta {
    pub threshold: Ratio,
    pub lpr_tau: Ratio,
    pub repeats: u32,
    pub total_records: u64,
    pub scored: u64,
    pub excluded: u64,
    pub skipped: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    /// Sorted by key.
    pub rows: Vec<ReportRow>,
    pub skipped_groups: Vec<SkippedGroup>,
    pub meta: ReportMeta,
}

/// Rejects empty inputs, non-positive repeats and duplicate keys.
pub fn validate_records(records: &[GenerationRecord]) -> Result<(), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut seen = BTreeSet::new();
    for r in records {
        if r.repeat == 0 {
            return Err(HarnessError::InvalidRepeat);
        }
        if !seen.insert((r.group_key(), r.prompt_id.as_str(), r.repeat)) {
            return Err(HarnessError::DuplicateKey(r.response_id()));
        }
    }
    Ok(())
}

pub fn score_record(record: &GenerationRecord, scanner: &Scanner, options: &ScoreOptions) -> Result<Scoring, MetricsError> {
    let (tokens, spans) = scanner.scan(&record.text);
    score_response(record.response_id(), record.prompt_id.clone(), record.repeat, &tokens, &spans, options.lpr_tau)
}

/// Builds the report from records and their per-record scorings (same
/// order). Groups whose shape is wrong are skipped with a reason.
pub fn build_report(
    records: &[GenerationRecord],
    scorings: Vec<Scoring>,
    options: &ScoreOptions,
) -> Result<EvalReport, HarnessError> {
    validate_records(records)?;
    assert_eq!(records.len(), scorings.len(), "one scoring per record");
    let mut groups: BTreeMap<GroupKey, Vec<Scoring>> = BTreeMap::new();
    for (record, scoring) in records.iter().zip(scorings) {
        groups.entry(record.group_key()).or_default().push(scoring);
    }
    let mut rows = Vec::new();
    let mut skipped_groups = Vec::new();
    let (mut scored, mut excluded, mut skipped) = (0u64, 0u64, 0u64);
    for (key, entries) in groups {
        match aggregate(&entries, options.repeats, options.threshold) {
            Ok(score) => {
                scored += score.n_responses;
                excluded += score.excluded;
                rows.push(ReportRow { key, score });
            }
            Err(e @ (MetricsError::ShapeMismatch { .. } | MetricsError::NoValidTokens)) => {
                skipped += entries.len() as u64;
                skipped_groups.push(SkippedGroup {
                    key,
                    records: entries.len() as u64,
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(EvalReport {
        rows,
        skipped_groups,
        meta: ReportMeta {
            threshold: options.threshold,
            lpr_tau: options.lpr_tau,
            repeats: options.repeats,
            total_records: records.len() as u64,
            scored,
            excluded,
            skipped,
            tool_version: crate::VERSION.into(),
        },
    })
}

/// Sequential scoring of a whole generations set.
pub fn score_generations(
    records: &[GenerationRecord],
    scanner: &Scanner,
    options: &ScoreOptions,
) -> Result<EvalReport, HarnessError> {
    validate_records(records)?;
    let scorings = records
        .iter()
        .map(|r| score_record(r, scanner, options))
        .collect::<Result<Vec<_>, _>>()?;
    build_report(records, scorings, options)
}
