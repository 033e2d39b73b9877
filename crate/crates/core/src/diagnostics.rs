//! Loss diagnostics over externally exported losses and log-probabilities.
//!
//! Losses are mean per-token negative log-likelihoods in nats. The ORPO
//! odds use the length-normalized sequence likelihood
//! `p = exp(mean_token_logprob)`; the DPO margin uses total log-probs
//! (`mean * token_count`).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite loss for example {0}")]
    NonFiniteLoss(String),
    #[error("negative loss for example {0}")]
    NegativeLoss(String),
    #[error("checkpoint {0} reports more than one tokens_seen value")]
    InconsistentCheckpoint(String),
    #[error("token-weighted means need token counts (example {0})")]
    MissingTokenCounts(String),
    #[error("degenerate sequence probability for example {0}")]
    DegenerateProbability(String),
    #[error("example {0} has no reference log-probability")]
    MissingReference(String),
    #[error("invalid token count for example {0}")]
    InvalidTokenCount(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub checkpoint_id: String,
    pub tokens_seen: u64,
    pub example_id: String,
    pub chosen_loss: f64,
    pub rejected_loss: f64,
    /// Only needed for token-weighted trajectories.
    pub chosen_tokens: Option<u64>,
    pub rejected_tokens: Option<u64>,
}

impl LossRecord {
    pub fn new(
        checkpoint_id: impl Into<String>,
        tokens_seen: u64,
        example_id: impl Into<String>,
        chosen_loss: f64,
        rejected_loss: f64,
    ) -> Self {
        Self {
            checkpoint_id: checkpoint_id.into(),
            tokens_seen,
            example_id: example_id.into(),
            chosen_loss,
            rejected_loss,
            chosen_tokens: None,
            rejected_tokens: None,
        }
    }

    fn validate(&self) -> Result<(), DiagnosticsError> {
        for loss in [self.chosen_loss, self.rejected_loss] {
            if !loss.is_finite() {
                return Err(DiagnosticsError::NonFiniteLoss(self.example_id.clone()));
            }
            if loss < 0.0 {
                return Err(DiagnosticsError::NegativeLoss(self.example_id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Example,
    Token,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub checkpoint_id: String,
    pub tokens_seen: u64,
    pub mean_chosen_loss: f64,
    pub mean_rejected_loss: f64,
    /// `mean_rejected_loss - mean_chosen_loss`.
    pub delta: f64,
    pub n_examples: u64,
}

/// One point per checkpoint, ascending by `tokens_seen` (ties by id).
pub fn trajectory(
    records: &[LossRecord],
    weighting: Weighting,
) -> Result<Vec<TrajectoryPoint>, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::EmptyInput);
    }
    let mut groups: BTreeMap<&str, Vec<&LossRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        groups.entry(&r.checkpoint_id).or_default().push(r);
    }
    let mut points = Vec::with_capacity(groups.len());
    for (id, group) in groups {
        let tokens_seen = group[0].tokens_seen;
        if group.iter().any(|r| r.tokens_seen != tokens_seen) {
            return Err(DiagnosticsError::InconsistentCheckpoint(id.into()));
        }
        let (chosen, rejected) = match weighting {
            Weighting::Example => {
                let n = group.len() as f64;
                (
                    group.iter().map(|r| r.chosen_loss).sum::<f64>() / n,
                    group.iter().map(|r| r.rejected_loss).sum::<f64>() / n,
                )
            }
            Weighting::Token => token_weighted(&group)?,
        };
        points.push(TrajectoryPoint {
            checkpoint_id: id.into(),
            tokens_seen,
            mean_chosen_loss: chosen,
            mean_rejected_loss: rejected,
            delta: rejected - chosen,
            n_examples: group.len() as u64,
        });
    }
    points.sort_by(|a, b| {
        a.tokens_seen
            .cmp(&b.tokens_seen)
            .then_with(|| a.checkpoint_id.cmp(&b.checkpoint_id))
    });
    Ok(points)
}

fn token_weighted(group: &[&LossRecord]) -> Result<(f64, f64), DiagnosticsError> {
    let (mut cw, mut cn, mut rw, mut rn) = (0.0, 0u64, 0.0, 0u64);
    for r in group {
        let (Some(ct), Some(rt)) = (r.chosen_tokens, r.rejected_tokens) else {
            return Err(DiagnosticsError::MissingTokenCounts(r.example_id.clone()));
        };
        cw += r.chosen_loss * ct as f64;
        rw += r.rejected_loss * rt as f64;
        cn += ct;
        rn += rt;
    }
    if cn == 0 || rn == 0 {
        let id = group.first().map(|r| r.example_id.clone()).unwrap_or_default();
        return Err(DiagnosticsError::MissingTokenCounts(id));
    }
    Ok((cw / cn as f64, rw / rn as f64))
}

/// Mean over records of `rejected_loss - chosen_loss`.
pub fn delta_loss(records: &[LossRecord]) -> Result<f64, DiagnosticsError> {
    if records.is_empty() {
        return Err(DiagnosticsError::EmptyInput);
    }
    let mut sum = 0.0;
    for r in records {
        r.validate()?;
        sum += r.rejected_loss - r.chosen_loss;
    }
    Ok(sum / records.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSummary {
    pub n_records: u64,
    pub n_checkpoints: u64,
    pub mean_chosen_loss: f64,
    pub mean_rejected_loss: f64,
    pub delta_loss: f64,
}

pub fn delta_summary(records: &[LossRecord]) -> Result<DeltaSummary, DiagnosticsError> {
    let delta = delta_loss(records)?;
    let n = records.len() as f64;
    let mut checkpoints: Vec<&str> = records.iter().map(|r| r.checkpoint_id.as_str()).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    Ok(DeltaSummary {
        n_records: records.len() as u64,
        n_checkpoints: checkpoints.len() as u64,
        mean_chosen_loss: records.iter().map(|r| r.chosen_loss).sum::<f64>() / n,
        mean_rejected_loss: records.iter().map(|r| r.rejected_loss).sum::<f64>() / n,
        delta_loss: delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLogProb {
    pub example_id: String,
    /// Mean per-token log-probability, nats, `<= 0`.
    pub mean_token_logprob: f64,
    pub token_count: u64,
    pub reference_mean_token_logprob: Option<f64>,
}

impl SequenceLogProb {
    pub fn new(example_id: impl Into<String>, mean_token_logprob: f64, token_count: u64) -> Self {
        Self {
            example_id: example_id.into(),
            mean_token_logprob,
            token_count,
            reference_mean_token_logprob: None,
        }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference_mean_token_logprob = Some(reference);
        self
    }
}

/// `-log(sigmoid(x))`, stable for large `|x|`.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        libm::log1p(libm::exp(-x))
    } else {
        -x + libm::log1p(libm::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `log(p / (1 - p))` for `p = exp(lp)`, with `1 - p` via `expm1`.
pub fn log_odds(mean_token_logprob: f64) -> f64 {
    mean_token_logprob - libm::log(-libm::expm1(mean_token_logprob))
}

fn check_odds_domain(s: &SequenceLogProb) -> Result<(), DiagnosticsError> {
    let lp = s.mean_token_logprob;
    let p = libm::exp(lp);
    let q = -libm::expm1(lp);
    if !lp.is_finite() || lp >= 0.0 || p <= 0.0 || q <= 0.0 || !log_odds(lp).is_finite() {
        return Err(DiagnosticsError::DegenerateProbability(s.example_id.clone()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrpoLoss {
    pub total: f64,
    /// Negative mean log-likelihood of the chosen response.
    pub sft_term: f64,
    /// `-log sigmoid(log odds(chosen) - log odds(rejected))`.
    pub or_term: f64,
}

pub fn orpo_loss(
    chosen: &SequenceLogProb,
    rejected: &SequenceLogProb,
    beta: f64,
) -> Result<OrpoLoss, DiagnosticsError> {
    check_odds_domain(chosen)?;
    check_odds_domain(rejected)?;
    let ratio = log_odds(chosen.mean_token_logprob) - log_odds(rejected.mean_token_logprob);
    let or_term = neg_log_sigmoid(ratio);
    let sft_term = -chosen.mean_token_logprob;
    Ok(OrpoLoss {
        total: sft_term + beta * or_term,
        sft_term,
        or_term,
    })
}

/// Analytic partial derivatives of the odds-ratio term with respect to the
/// chosen and rejected mean log-probs.
pub fn orpo_or_term_gradient(
    chosen: &SequenceLogProb,
    rejected: &SequenceLogProb,
) -> Result<(f64, f64), DiagnosticsError> {
    check_odds_domain(chosen)?;
    check_odds_domain(rejected)?;
    let (lc, lr) = (chosen.mean_token_logprob, rejected.mean_token_logprob);
    let s = sigmoid(-(log_odds(lc) - log_odds(lr)));
    // d log_odds / d lp = 1 / (1 - p)
    let dc = -s / -libm::expm1(lc);
    let dr = s / -libm::expm1(lr);
    Ok((dc, dr))
}

fn total_logprobs(s: &SequenceLogProb) -> Result<(f64, f64), DiagnosticsError> {
    let reference = s
        .reference_mean_token_logprob
        .ok_or_else(|| DiagnosticsError::MissingReference(s.example_id.clone()))?;
    if s.token_count == 0 {
        return Err(DiagnosticsError::InvalidTokenCount(s.example_id.clone()));
    }
    let n = s.token_count as f64;
    Ok((s.mean_token_logprob * n, reference * n))
}

/// `(lp_c - ref_c) - (lp_r - ref_r)` over total log-probs.
pub fn dpo_margin(chosen: &SequenceLogProb, rejected: &SequenceLogProb) -> Result<f64, DiagnosticsError> {
    let (pc, rc) = total_logprobs(chosen)?;
    let (pr, rr) = total_logprobs(rejected)?;
    Ok((pc - rc) - (pr - rr))
}

pub fn dpo_loss_from_margin(margin: f64, beta: f64) -> f64 {
    neg_log_sigmoid(beta * margin)
}

pub fn dpo_loss(chosen: &SequenceLogProb, rejected: &SequenceLogProb, beta: f64) -> Result<f64, DiagnosticsError> {
    Ok(dpo_loss_from_margin(dpo_margin(chosen, rejected)?, beta))
}

/// Small deterministic loss log for tests and demos: losses decay with
/// training tokens and rejected responses sit `gap` nats above chosen.
pub fn synthetic_loss_log(seed: u64, checkpoints: usize, examples: usize, gap: f64) -> Vec<LossRecord> {
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(checkpoints * examples);
    for c in 0..checkpoints {
        let tokens_seen = (c as u64 + 1) * 1_000_000_000;
        let base = 4.0 / libm::sqrt(c as f64 + 1.0);
        for e in 0..examples {
            let noise_c = rng.next_f64() * 0.2;
            let noise_r = rng.next_f64() * 0.2;
            out.push(LossRecord {
                checkpoint_id: format!("ckpt-{c:04}"),
                tokens_seen,
                example_id: format!("ex-{e:05}"),
                chosen_loss: base + noise_c,
                rejected_loss: base + gap + noise_r,
                chosen_tokens: Some(16 + rng.below(48)),
                rejected_tokens: Some(16 + rng.below(48)),
            });
        }
    }
    out
}
