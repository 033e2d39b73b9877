use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

use crate::metrics::{response_lpr, response_wpr, Ratio};
use crate::textscan::Scanner;

use super::pipeline::PreferenceTriplet;

/// NFC, trimmed, with whitespace runs collapsed to one space, or to one
/// newline when the run contains a line break.
pub fn normalize(text: &str) -> String {
    let composed: String = text.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    let mut pending: Option<char> = None;
    for c in composed.trim().chars() {
        if c.is_whitespace() {
            let brk = matches!(c, '\n' | '\r' | '\u{85}' | '\u{2028}' | '\u{2029}');
            pending = match pending {
                Some('\n') => Some('\n'),
                _ if brk => Some('\n'),
                _ => Some(' '),
            };
        } else {
            if let Some(sep) = pending.take() {
                out.push(sep);
            }
            out.push(c);
        }
    }
    out
}

/// True iff the text is entirely target-script: WPR = 1 and LPR = 1.
/// Texts without valid tokens fail.
pub fn monolingual_gate(text: &str, scanner: &Scanner) -> bool {
    let (tokens, spans) = scanner.scan(text);
    let one = Ratio::new(1, 1);
    response_wpr(&tokens) == Ok(one) && response_lpr(&spans, &tokens, one) == Ok(one)
}

/// Keeps the pair iff `lo <= chars(chosen) / chars(rejected) <= hi`.
pub fn length_ratio_filter(chosen: &str, rejected: &str, lo: Ratio, hi: Ratio) -> bool {
    let c = chosen.chars().count() as u64;
    let r = rejected.chars().count() as u64;
    if c == 0 || r == 0 {
        return false;
    }
    let ratio = Ratio::new(c, r);
    lo <= ratio && ratio <= hi
}

/// Normalized instruction with non-target letters lowercased.
pub fn dedup_key(instruction: &str, scanner: &Scanner) -> String {
    let target = scanner.target();
    let mut key = String::new();
    for c in normalize(instruction).chars() {
        if c.is_alphabetic() && !target.is_target_letter(c) {
            key.extend(c.to_lowercase());
        } else {
            key.push(c);
        }
    }
    key
}

/// Keeps the first row (in input order) for each instruction key.
pub fn dedup_instructions(rows: Vec<PreferenceTriplet>, scanner: &Scanner) -> Vec<PreferenceTriplet> {
    let mut seen = BTreeSet::new();
    rows.into_iter()
        .filter(|row| seen.insert(dedup_key(&row.instruction, scanner)))
        .collect()
}

/// Thresholds for detecting degenerate generations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureConfig {
    /// Reject when one token repeats more than this many times in a row.
    pub max_repeat_run: usize,
    pub min_phrase_len: usize,
    pub max_phrase_len: usize,
    /// Reject when a phrase occurs this many times back-to-back.
    pub phrase_repeats: usize,
}

impl Default for FailureConfig {
    fn default() -> Self {
        Self {
            max_repeat_run: 4,
            min_phrase_len: 2,
            max_phrase_len: 5,
            phrase_repeats: 3,
        }
    }
}

/// Returns `false` (reject) for text that looks like a failed generation:
/// a replacement character, a long single-token run, or a short phrase
/// repeated back-to-back.
pub fn failure_filter(text: &str, config: &FailureConfig) -> bool {
    if text.contains('\u{FFFD}') {
        return false;
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut run = 0usize;
    for (i, w) in words.iter().enumerate() {
        run = if i > 0 && words[i - 1] == *w { run + 1 } else { 1 };
        if run > config.max_repeat_run {
            return false;
        }
    }
    let reps = config.phrase_repeats.max(2);
    for n in config.min_phrase_len.max(1)..=config.max_phrase_len {
        if n * reps > words.len() {
            break;
        }
        for start in 0..=words.len() - n * reps {
            let phrase = &words[start..start + n];
            if (1..reps).all(|r| &words[start + r * n..start + (r + 1) * n] == phrase) {
                return false;
            }
        }
    }
    true
}
