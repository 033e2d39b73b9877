//! Deterministic code-mix injection.
//!
//! The RNG procedure is fixed so other implementations can reproduce it:
//!
//! 1. `rng = SplitMix64(seed ^ fnv1a64(row_id))`.
//! 2. Eligible positions are the indices (ascending) of valid target-script
//!    tokens with a lexicon entry in an enabled language.
//! 3. Fisher–Yates over the eligible list: for `i = len-1 ..= 1`,
//!    `j = rng.next() % (i + 1)`, swap. The first `min(k, words)` entries are
//!    the selected positions.
//! 4. With both languages enabled, each selected position (in selection
//!    order) draws one more output; low bit 0 picks English, 1 Chinese. A
//!    word lacking the picked language falls back to the other one.
//!
//! Only the stripped core of each selected token is rewritten; every other
//! byte of the input is preserved.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::rng::{shuffle, SplitMix64};
use crate::textscan::{Scanner, ScriptClass};

use super::filters::monolingual_gate;
use super::lexicon::{Lang, SubstitutionLexicon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LangSet {
    pub en: bool,
    pub zh: bool,
}

impl LangSet {
    pub const BOTH: LangSet = LangSet { en: true, zh: true };
    pub const EN: LangSet = LangSet { en: true, zh: false };
    pub const ZH: LangSet = LangSet { en: false, zh: true };

    pub fn langs(self) -> &'static [Lang] {
        match (self.en, self.zh) {
            (true, true) => &[Lang::En, Lang::Zh],
            (true, false) => &[Lang::En],
            (false, true) => &[Lang::Zh],
            (false, false) => &[],
        }
    }
}

impl Default for LangSet {
    fn default() -> Self {
        Self::BOTH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectConfig {
    pub k: usize,
    pub seed: u64,
    pub langs: LangSet,
}

impl Default for InjectConfig {
    fn default() -> Self {
        Self {
            k: 8,
            seed: 0,
            langs: LangSet::BOTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("only {eligible} of the {needed} words to replace have lexicon entries")]
    LexiconMiss { needed: usize, eligible: usize },
    #[error("input is not monolingual target-script text")]
    NotMonolingual,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("no injection language enabled")]
    NoLanguages,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub text: String,
    /// Token indices that were rewritten, in selection order.
    pub positions: Vec<usize>,
    /// Language used at each entry of `positions`.
    pub langs: Vec<Lang>,
    /// The input had fewer than `k` target words, so all were eligible.
    pub insufficient_words: bool,
}

pub fn inject_code_mix(
    chosen: &str,
    row_id: &str,
    lexicon: &SubstitutionLexicon,
    config: &InjectConfig,
    scanner: &Scanner,
) -> Result<Injection, InjectError> {
    let enabled = config.langs.langs();
    if enabled.is_empty() {
        return Err(InjectError::NoLanguages);
    }
    if lexicon.is_empty() {
        return Err(InjectError::EmptyLexicon);
    }
    if !monolingual_gate(chosen, scanner) {
        return Err(InjectError::NotMonolingual);
    }
    let tokens = scanner.tokenize(chosen);
    let words = tokens
        .iter()
        .filter(|t| t.valid && t.script == ScriptClass::TargetScript)
        .count();
    let needed = config.k.min(words);
    let mut eligible: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            t.valid && t.script == ScriptClass::TargetScript && lexicon.has_any(&t.text, enabled)
        })
        .map(|(i, _)| i)
        .collect();
    if eligible.len() < needed {
        return Err(InjectError::LexiconMiss {
            needed,
            eligible: eligible.len(),
        });
    }

    let mut rng = SplitMix64::for_row(config.seed, row_id);
    shuffle(&mut rng, &mut eligible);
    eligible.truncate(needed);

    let mut picks = Vec::with_capacity(needed);
    for &pos in &eligible {
        let word = &tokens[pos].text;
        let preferred = if enabled.len() == 2 {
            if rng.next_u64() & 1 == 0 { Lang::En } else { Lang::Zh }
        } else {
            enabled[0]
        };
        let (lang, replacement) = match lexicon.lookup(word, preferred) {
            Some(r) => (preferred, r),
            None => {
                let other = *enabled
                    .iter()
                    .find(|&&l| l != preferred)
                    .expect("eligible words have an entry in some enabled language");
                let r = lexicon
                    .lookup(word, other)
                    .expect("eligible words have an entry in some enabled language");
                (other, r)
            }
        };
        picks.push((pos, lang, replacement));
    }

    let mut order: Vec<usize> = (0..picks.len()).collect();
    order.sort_by_key(|&i| picks[i].0);
    let mut text = String::with_capacity(chosen.len() + 8 * needed);
    let mut cursor = 0;
    for i in order {
        let core = &tokens[picks[i].0].core;
        text.push_str(&chosen[cursor..core.start]);
        text.push_str(picks[i].2);
        cursor = core.end;
    }
    text.push_str(&chosen[cursor..]);

    Ok(Injection {
        text,
        positions: picks.iter().map(|p| p.0).collect(),
        langs: picks.iter().map(|p| p.1).collect(),
        insufficient_words: words < config.k,
    })
}
