//! Independent re-implementations used to check the library paths.
//! Nothing here calls into `langmix_core` metric or RNG code.

#![allow(dead_code)]

use std::collections::HashMap;

pub fn is_hangul(c: char) -> bool {
    let cp = c as u32;
    (0xAC00..=0xD7AF).contains(&cp)
        || (0x1100..=0x11FF).contains(&cp)
        || (0x3130..=0x318F).contains(&cp)
        || (0xA960..=0xA97F).contains(&cp)
        || (0xD7B0..=0xD7FF).contains(&cp)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Reduced (numerator, denominator).
pub fn reduce(n: u64, d: u64) -> (u64, u64) {
    let g = gcd(n, d).max(1);
    (n / g, d / g)
}

#[derive(Debug, Default)]
struct Word {
    letters: u64,
    hangul: u64,
    last: Option<char>,
    newline_after: bool,
}

/// Character loop: splits on whitespace, tracks per-word letter and Hangul
/// counts and sentence boundaries.
fn words(text: &str) -> Vec<Word> {
    let mut out: Vec<Word> = Vec::new();
    let mut current: Option<Word> = None;
    for c in text.chars() {
        if c.is_whitespace() {
            if let Some(w) = current.take() {
                out.push(w);
            }
            if matches!(c, '\n' | '\r' | '\u{85}' | '\u{2028}' | '\u{2029}') {
                if let Some(prev) = out.last_mut() {
                    prev.newline_after = true;
                }
            }
            continue;
        }
        let w = current.get_or_insert_with(Word::default);
        if c.is_alphabetic() {
            w.letters += 1;
            if is_hangul(c) {
                w.hangul += 1;
            }
        }
        w.last = Some(c);
    }
    if let Some(w) = current {
        out.push(w);
    }
    out
}

/// (target-valid, valid) word counts.
pub fn wpr_counts(text: &str) -> (u64, u64) {
    let mut hit = 0;
    let mut all = 0;
    for w in words(text) {
        if w.letters > 0 {
            all += 1;
            if 2 * w.hangul > w.letters {
                hit += 1;
            }
        }
    }
    (hit, all)
}

/// Reduced LPR with inclusive 9/10 sentence cutoff, or `None` when no
/// sentence has a valid word.
pub fn lpr(text: &str) -> Option<(u64, u64)> {
    let ws = words(text);
    let mut passed = 0u64;
    let mut counted = 0u64;
    let (mut hit, mut all) = (0u64, 0u64);
    let n = ws.len();
    for (i, w) in ws.iter().enumerate() {
        if w.letters > 0 {
            all += 1;
            if 2 * w.hangul > w.letters {
                hit += 1;
            }
        }
        let end = matches!(w.last, Some('.' | '!' | '?' | '…' | '。'));
        if end || w.newline_after || i + 1 == n {
            if all > 0 {
                counted += 1;
                if 10 * hit >= 9 * all {
                    passed += 1;
                }
            }
            hit = 0;
            all = 0;
        }
    }
    (counted > 0).then(|| reduce(passed, counted))
}

pub struct Mix(u64);

impl Mix {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
}

pub fn fnv(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Reference injection for space-separated, punctuation-free Hangul words
/// with both languages enabled. Returns (output, replaced word indices in
/// selection order).
pub fn inject(
    text: &str,
    row_id: &str,
    lexicon: &HashMap<&str, (&str, &str)>,
    k: usize,
    seed: u64,
) -> (String, Vec<usize>) {
    let mut ws: Vec<String> = text.split(' ').map(str::to_owned).collect();
    let mut eligible: Vec<usize> = (0..ws.len()).filter(|&i| lexicon.contains_key(ws[i].as_str())).collect();
    let m = k.min(ws.len());
    assert!(eligible.len() >= m);
    let mut rng = Mix(seed ^ fnv(row_id.as_bytes()));
    let mut i = eligible.len();
    while i > 1 {
        i -= 1;
        let j = (rng.next() % (i as u64 + 1)) as usize;
        eligible.swap(i, j);
    }
    let chosen: Vec<usize> = eligible[..m].to_vec();
    for &pos in &chosen {
        let (en, zh) = lexicon[ws[pos].as_str()];
        ws[pos] = if rng.next() & 1 == 0 { en.to_owned() } else { zh.to_owned() };
    }
    (ws.join(" "), chosen)
}
