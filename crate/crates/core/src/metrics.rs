//! Word-level (WPR) and sentence-level (LPR) target-language precision.
//!
//! WPR is the share of valid tokens that are target-script. Pooled over a
//! corpus it is computed on the union of all valid tokens, not as a mean of
//! per-response values. LPR is the share of a response's sentences whose
//! valid tokens are at least `tau` target-script (inclusive); sentences
//! without valid tokens do not count.
//!
//! Threshold ratios ("WPR > 0.9 ratio") use a strict comparison. All values
//! are exact rationals; rendering to decimals happens at the edges.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::ratio::to_big;
use crate::textscan::{ScriptClass, SentenceSpan, TokenRecord};

/// Exact per-response ratio.
pub type Ratio = num_rational::Ratio<u64>;

/// The default inner sentence cutoff and outer reporting threshold, 9/10.
pub fn default_threshold() -> Ratio {
    Ratio::new(9, 10)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no valid tokens")]
    NoValidTokens,
    #[error("empty input")]
    EmptyInput,
    #[error("prompt {prompt_id}: expected {expected} repeats, found {found}")]
    ShapeMismatch {
        prompt_id: String,
        expected: u32,
        found: usize,
    },
    #[error("threshold {0} outside its allowed range")]
    InvalidThreshold(Ratio),
    #[error("repeats per prompt must be positive")]
    ZeroRepeats,
}

fn is_target(t: &TokenRecord) -> bool {
    t.valid && t.script == ScriptClass::TargetScript
}

/// (target-valid, valid) counts.
fn counts<'a>(tokens: impl IntoIterator<Item = &'a TokenRecord>) -> (u64, u64) {
    tokens.into_iter().fold((0, 0), |(hit, all), t| {
        (hit + u64::from(is_target(t)), all + u64::from(t.valid))
    })
}

pub fn response_wpr(tokens: &[TokenRecord]) -> Result<Ratio, MetricsError> {
    match counts(tokens) {
        (_, 0) => Err(MetricsError::NoValidTokens),
        (hit, all) => Ok(Ratio::new(hit, all)),
    }
}

/// WPR pooled over the union of all responses' valid tokens.
pub fn corpus_wpr<'a, I>(responses: I) -> Result<Ratio, MetricsError>
where
    I: IntoIterator<Item = &'a [TokenRecord]>,
{
    let (hit, all) = responses
        .into_iter()
        .map(counts)
        .fold((0, 0), |(h, a), (h2, a2)| (h + h2, a + a2));
    if all == 0 {
        return Err(MetricsError::NoValidTokens);
    }
    Ok(Ratio::new(hit, all))
}

fn check_tau(tau: Ratio) -> Result<(), MetricsError> {
    if tau.is_zero() || tau > Ratio::one() {
        return Err(MetricsError::InvalidThreshold(tau));
    }
    Ok(())
}

/// Returns the LPR together with the number of sentences that had at least
/// one valid token.
fn lpr_parts(
    spans: &[SentenceSpan],
    tokens: &[TokenRecord],
    tau: Ratio,
) -> Result<(Ratio, u64), MetricsError> {
    check_tau(tau)?;
    let mut passed = 0u64;
    let mut counted = 0u64;
    for span in spans {
        let (hit, all) = counts(&tokens[span.token_indices.clone()]);
        if all == 0 {
            continue;
        }
        counted += 1;
        if Ratio::new(hit, all) >= tau {
            passed += 1;
        }
    }
    if counted == 0 {
        return Err(MetricsError::NoValidTokens);
    }
    Ok((Ratio::new(passed, counted), counted))
}

pub fn response_lpr(
    spans: &[SentenceSpan],
    tokens: &[TokenRecord],
    tau: Ratio,
) -> Result<Ratio, MetricsError> {
    lpr_parts(spans, tokens, tau).map(|(lpr, _)| lpr)
}

/// Fraction of `scores` strictly above `threshold`.
pub fn threshold_ratio(scores: &[Ratio], threshold: Ratio) -> Result<Ratio, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if threshold > Ratio::one() {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    let above = scores.iter().filter(|&&s| s > threshold).count();
    Ok(Ratio::new(above as u64, scores.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredResponse {
    pub response_id: String,
    pub prompt_id: String,
    pub repeat: u32,
    pub token_total: u64,
    pub target_token_total: u64,
    pub wpr: Ratio,
    pub lpr: Ratio,
    /// Sentences with at least one valid token; the LPR denominator.
    pub sentence_count: u64,
}

/// Outcome of scoring one response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scoring {
    Scored(ScoredResponse),
    /// Zero valid tokens; kept out of means and ratios.
    Excluded {
        response_id: String,
        prompt_id: String,
        repeat: u32,
    },
}

impl Scoring {
    pub fn prompt_id(&self) -> &str {
        match self {
            Scoring::Scored(s) => &s.prompt_id,
            Scoring::Excluded { prompt_id, .. } => prompt_id,
        }
    }

    pub fn repeat(&self) -> u32 {
        match self {
            Scoring::Scored(s) => s.repeat,
            Scoring::Excluded { repeat, .. } => *repeat,
        }
    }

    pub fn scored(&self) -> Option<&ScoredResponse> {
        match self {
            Scoring::Scored(s) => Some(s),
            Scoring::Excluded { .. } => None,
        }
    }
}

pub fn score_response(
    response_id: impl Into<String>,
    prompt_id: impl Into<String>,
    repeat: u32,
    tokens: &[TokenRecord],
    spans: &[SentenceSpan],
    tau: Ratio,
) -> Result<Scoring, MetricsError> {
    let response_id = response_id.into();
    let prompt_id = prompt_id.into();
    let (hit, all) = counts(tokens);
    if all == 0 {
        check_tau(tau)?;
        return Ok(Scoring::Excluded {
            response_id,
            prompt_id,
            repeat,
        });
    }
    let (lpr, sentence_count) = lpr_parts(spans, tokens, tau)?;
    Ok(Scoring::Scored(ScoredResponse {
        response_id,
        prompt_id,
        repeat,
        token_total: all,
        target_token_total: hit,
        wpr: Ratio::new(hit, all),
        lpr,
        sentence_count,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusScore {
    /// Scored (non-excluded) responses.
    pub n_responses: u64,
    pub excluded: u64,
    pub mean_wpr: BigRational,
    pub mean_lpr: BigRational,
    pub wpr_over_threshold_ratio: Ratio,
    pub lpr_over_threshold_ratio: Ratio,
    pub threshold: Ratio,
}

/// Averages within each prompt across its repeats, then across prompts.
/// Threshold ratios are taken over individual responses.
///
/// Every prompt must contribute exactly `repeats_per_prompt` entries with
/// distinct repeat numbers (excluded responses count toward the shape).
pub fn aggregate(
    entries: &[Scoring],
    repeats_per_prompt: u32,
    threshold: Ratio,
) -> Result<CorpusScore, MetricsError> {
    if repeats_per_prompt == 0 {
        return Err(MetricsError::ZeroRepeats);
    }
    if threshold > Ratio::one() {
        return Err(MetricsError::InvalidThreshold(threshold));
    }
    if entries.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut by_prompt: BTreeMap<&str, Vec<&Scoring>> = BTreeMap::new();
    for e in entries {
        by_prompt.entry(e.prompt_id()).or_default().push(e);
    }
    let mut wpr_sum = BigRational::zero();
    let mut lpr_sum = BigRational::zero();
    let mut prompts_scored = 0u64;
    for (prompt_id, group) in &by_prompt {
        let mut repeats: Vec<u32> = group.iter().map(|e| e.repeat()).collect();
        repeats.sort_unstable();
        repeats.dedup();
        if group.len() != repeats_per_prompt as usize || repeats.len() != group.len() {
            return Err(MetricsError::ShapeMismatch {
                prompt_id: String::from(*prompt_id),
                expected: repeats_per_prompt,
                found: repeats.len(),
            });
        }
        let scored: Vec<&ScoredResponse> = group.iter().filter_map(|e| e.scored()).collect();
        if scored.is_empty() {
            continue;
        }
        let n = BigRational::from_integer(BigInt::from(scored.len()));
        let w: BigRational = scored.iter().map(|s| to_big(&s.wpr)).sum();
        let l: BigRational = scored.iter().map(|s| to_big(&s.lpr)).sum();
        wpr_sum += w / n.clone();
        lpr_sum += l / n;
        prompts_scored += 1;
    }
    let scored: Vec<&ScoredResponse> = entries.iter().filter_map(|e| e.scored()).collect();
    let excluded = (entries.len() - scored.len()) as u64;
    if scored.is_empty() {
        return Err(MetricsError::NoValidTokens);
    }
    let wprs: Vec<Ratio> = scored.iter().map(|s| s.wpr).collect();
    let lprs: Vec<Ratio> = scored.iter().map(|s| s.lpr).collect();
    let p = BigRational::from_integer(BigInt::from(prompts_scored));
    Ok(CorpusScore {
        n_responses: scored.len() as u64,
        excluded,
        mean_wpr: wpr_sum / p.clone(),
        mean_lpr: lpr_sum / p,
        wpr_over_threshold_ratio: threshold_ratio(&wprs, threshold)?,
        lpr_over_threshold_ratio: threshold_ratio(&lprs, threshold)?,
        threshold,
    })
}
