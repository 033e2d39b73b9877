//! Tokenization, script classification and sentence segmentation.
//!
//! Tokens are maximal runs of non-whitespace characters. Leading and
//! trailing characters that are neither letters nor digits are stripped
//! before classification, so `"world!"` becomes `"world"` and `"---"`
//! becomes the empty (invalid) token. A token is *valid* when it keeps at
//! least one letter; digit-only and punctuation-only tokens are invalid and
//! drop out of every metric.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Range, RangeInclusive};

/// Hangul Syllables, Jamo, Compatibility Jamo and Jamo Extended-A/B.
pub const KOREAN_BLOCKS: &[RangeInclusive<u32>] = &[
    0xAC00..=0xD7AF,
    0x1100..=0x11FF,
    0x3130..=0x318F,
    0xA960..=0xA97F,
    0xD7B0..=0xD7FF,
];

const LATIN_BLOCKS: &[RangeInclusive<u32>] = &[
    0x0041..=0x005A,
    0x0061..=0x007A,
    0x00AA..=0x00AA,
    0x00BA..=0x00BA,
    0x00C0..=0x02AF,
    0x1D00..=0x1D7F,
    0x1E00..=0x1EFF,
    0x2C60..=0x2C7F,
    0xA720..=0xA7FF,
    0xAB30..=0xAB6F,
    0xFB00..=0xFB06,
    0xFF21..=0xFF3A,
    0xFF41..=0xFF5A,
];

const HAN_BLOCKS: &[RangeInclusive<u32>] = &[
    0x2E80..=0x2FDF,
    0x3005..=0x3007,
    0x3021..=0x3029,
    0x3038..=0x303B,
    0x3400..=0x4DBF,
    0x4E00..=0x9FFF,
    0xF900..=0xFAFF,
    0x20000..=0x323AF,
];

/// Characters after which a sentence ends.
pub const SENTENCE_TERMINATORS: &[char] = &['.', '!', '?', '\u{2026}', '\u{3002}'];

fn in_blocks(blocks: &[RangeInclusive<u32>], c: char) -> bool {
    let cp = c as u32;
    blocks.iter().any(|r| r.contains(&cp))
}

fn is_line_break(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{85}' | '\u{2028}' | '\u{2029}')
}

/// Character-level class. Every scalar value has exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CharClass {
    Hangul,
    Latin,
    Han,
    OtherLetter,
    NonLetter,
}

impl CharClass {
    pub const ALL: [CharClass; 5] = [
        CharClass::Hangul,
        CharClass::Latin,
        CharClass::Han,
        CharClass::OtherLetter,
        CharClass::NonLetter,
    ];

    pub fn of(c: char) -> Self {
        if !c.is_alphabetic() {
            CharClass::NonLetter
        } else if in_blocks(KOREAN_BLOCKS, c) {
            CharClass::Hangul
        } else if in_blocks(LATIN_BLOCKS, c) {
            CharClass::Latin
        } else if in_blocks(HAN_BLOCKS, c) {
            CharClass::Han
        } else {
            CharClass::OtherLetter
        }
    }

    pub fn is_letter(self) -> bool {
        self != CharClass::NonLetter
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CharClass::Hangul => "hangul",
            CharClass::Latin => "latin",
            CharClass::Han => "han",
            CharClass::OtherLetter => "other_letter",
            CharClass::NonLetter => "non_letter",
        };
        f.write_str(name)
    }
}

/// Per-token count of characters in each [`CharClass`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CharCounts([u32; 5]);

impl CharCounts {
    pub fn from_text(text: &str) -> Self {
        let mut counts = CharCounts::default();
        for c in text.chars() {
            counts.0[CharClass::of(c).index()] += 1;
        }
        counts
    }

    pub fn get(&self, class: CharClass) -> u32 {
        self.0[class.index()]
    }

    pub fn letters(&self) -> u32 {
        self.0[..4].iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (CharClass, u32)> + '_ {
        CharClass::ALL.iter().map(move |&c| (c, self.get(c)))
    }
}

/// The Unicode blocks that make up the intended output language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptConfig {
    name: String,
    blocks: Vec<RangeInclusive<u32>>,
}

impl ScriptConfig {
    pub fn new(name: impl Into<String>, blocks: Vec<RangeInclusive<u32>>) -> Self {
        Self {
            name: name.into(),
            blocks,
        }
    }

    /// The shipped reference configuration (Hangul blocks).
    pub fn korean() -> Self {
        Self::new("korean", KOREAN_BLOCKS.to_vec())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn blocks(&self) -> &[RangeInclusive<u32>] {
        &self.blocks
    }

    /// True when `c` is a letter inside one of the target blocks.
    pub fn is_target_letter(&self, c: char) -> bool {
        c.is_alphabetic() && in_blocks(&self.blocks, c)
    }
}

impl Default for ScriptConfig {
    fn default() -> Self {
        Self::korean()
    }
}

/// Token-level script verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScriptClass {
    TargetScript,
    OtherScript,
    Unclassified,
}

/// One whitespace-delimited token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    /// Token text after stripping edge punctuation and symbols.
    pub text: String,
    pub valid: bool,
    pub script: ScriptClass,
    pub char_counts: CharCounts,
    /// Byte range of the whole whitespace-delimited run.
    pub raw: Range<usize>,
    /// Byte range of `text` inside the source string.
    pub core: Range<usize>,
}

/// A sentence: a contiguous, non-empty run of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub text: String,
    pub token_indices: Range<usize>,
}

impl SentenceSpan {
    pub fn len(&self) -> usize {
        self.token_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_indices.is_empty()
    }
}

/// Majority rule: strictly more than half of the letters must be target
/// letters. Ties go to [`ScriptClass::OtherScript`].
pub fn classify_token(token: &TokenRecord, target: &ScriptConfig) -> ScriptClass {
    classify_text(&token.text, target)
}

fn classify_text(text: &str, target: &ScriptConfig) -> ScriptClass {
    let mut letters = 0u32;
    let mut hits = 0u32;
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        if target.is_target_letter(c) {
            hits += 1;
        }
    }
    if letters == 0 {
        ScriptClass::Unclassified
    } else if 2 * hits > letters {
        ScriptClass::TargetScript
    } else {
        ScriptClass::OtherScript
    }
}

/// Tokenizer and segmenter bound to one target script.
#[derive(Debug, Clone, Default)]
pub struct Scanner {
    target: ScriptConfig,
}

impl Scanner {
    pub fn new(target: ScriptConfig) -> Self {
        Self { target }
    }

    pub fn target(&self) -> &ScriptConfig {
        &self.target
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenRecord> {
        raw_runs(text)
            .map(|raw| self.make_token(text, raw))
            .collect()
    }

    fn make_token(&self, text: &str, raw: Range<usize>) -> TokenRecord {
        let run = &text[raw.clone()];
        let core = match run.char_indices().find(|(_, c)| c.is_alphanumeric()) {
            None => raw.end..raw.end,
            Some((first, _)) => {
                let (last, c) = run
                    .char_indices()
                    .rev()
                    .find(|(_, c)| c.is_alphanumeric())
                    .expect("a forward match implies a backward match");
                raw.start + first..raw.start + last + c.len_utf8()
            }
        };
        let stripped = &text[core.clone()];
        let char_counts = CharCounts::from_text(stripped);
        let script = classify_text(stripped, &self.target);
        TokenRecord {
            text: stripped.to_owned(),
            valid: char_counts.letters() > 0,
            script,
            char_counts,
            raw,
            core,
        }
    }

    pub fn classify(&self, token: &TokenRecord) -> ScriptClass {
        classify_token(token, &self.target)
    }

    /// Splits `tokens` (which must come from tokenizing `text`) into
    /// sentences. A boundary follows any token whose raw run ends with a
    /// terminator and any token followed by a line break.
    pub fn segment(&self, text: &str, tokens: &[TokenRecord]) -> Vec<SentenceSpan> {
        segment_sentences(text, tokens)
    }

    /// Tokenizes and segments in one pass.
    pub fn scan(&self, text: &str) -> (Vec<TokenRecord>, Vec<SentenceSpan>) {
        let tokens = self.tokenize(text);
        let spans = segment_sentences(text, &tokens);
        (tokens, spans)
    }
}

fn raw_runs(text: &str) -> impl Iterator<Item = Range<usize>> + '_ {
    let mut iter = text.char_indices().peekable();
    core::iter::from_fn(move || {
        while let Some(&(_, c)) = iter.peek() {
            if !c.is_whitespace() {
                break;
            }
            iter.next();
        }
        let (start, _) = *iter.peek()?;
        let mut end = start;
        while let Some(&(i, c)) = iter.peek() {
            if c.is_whitespace() {
                break;
            }
            end = i + c.len_utf8();
            iter.next();
        }
        Some(start..end)
    })
}

/// Tokenizes with the Korean reference configuration.
pub fn tokenize(text: &str) -> Vec<TokenRecord> {
    Scanner::default().tokenize(text)
}

pub fn segment_sentences(text: &str, tokens: &[TokenRecord]) -> Vec<SentenceSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, token) in tokens.iter().enumerate() {
        let terminated = text[token.raw.clone()]
            .chars()
            .next_back()
            .is_some_and(|c| SENTENCE_TERMINATORS.contains(&c));
        let line_break = tokens
            .get(i + 1)
            .is_some_and(|next| text[token.raw.end..next.raw.start].chars().any(is_line_break));
        if terminated || line_break || i + 1 == tokens.len() {
            let first = &tokens[start];
            spans.push(SentenceSpan {
                text: text[first.raw.start..token.raw.end].to_owned(),
                token_indices: start..i + 1,
            });
            start = i + 1;
        }
    }
    spans
}
