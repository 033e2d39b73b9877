mod oracle;

use std::collections::{HashMap, HashSet};

use langmix_core::forge::{
    build_triplets, inject_code_mix, monolingual_gate, normalize, ForgeConfig, ForgeMode, ForgedRow, InjectConfig,
    Lang, LangSet, SourceRow, Stage, SubstitutionLexicon,
};
use langmix_core::textscan::{tokenize, Scanner, ScriptClass};
use proptest::prelude::*;

const WORDS: &[(&str, &str, &str)] = &[
    ("사과", "apple", "苹果"),
    ("바나나", "banana", "香蕉"),
    ("학교", "school", "学校"),
    ("친구", "friend", "朋友"),
    ("음식", "food", "食物"),
    ("물", "water", "水"),
    ("하늘", "sky", "天空"),
    ("바다", "sea", "海"),
    ("도시", "city", "城市"),
    ("나무", "tree", "树"),
    ("책", "book", "书"),
    ("시간", "time", "时间"),
];

fn lexicon() -> SubstitutionLexicon {
    let mut lex = SubstitutionLexicon::default();
    for (ko, en, zh) in WORDS {
        lex.insert(*ko, Lang::En, *en).unwrap();
        lex.insert(*ko, Lang::Zh, *zh).unwrap();
    }
    lex
}

fn oracle_lexicon() -> HashMap<&'static str, (&'static str, &'static str)> {
    WORDS.iter().map(|(k, e, z)| (*k, (*e, *z))).collect()
}

fn sentence(idx: &[usize]) -> String {
    idx.iter().map(|&i| WORDS[i].0).collect::<Vec<_>>().join(" ")
}

#[test]
fn ten_words_k3_matches_reference_procedure() {
    let text = sentence(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    let cfg = InjectConfig { k: 3, seed: 20240601, langs: LangSet::BOTH };
    let got = inject_code_mix(&text, "row-17", &lexicon(), &cfg, &Scanner::default()).unwrap();
    let (expected_text, expected_positions) = oracle::inject(&text, "row-17", &oracle_lexicon(), 3, 20240601);
    assert_eq!(got.positions, expected_positions);
    assert_eq!(got.text, expected_text);
    assert_eq!(got.positions.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn injection_matches_oracle(
        idx in prop::collection::vec(0usize..WORDS.len(), 1..25),
        k in 0usize..12,
        seed in any::<u64>(),
        row in "[a-z0-9]{1,8}",
    ) {
        let text = sentence(&idx);
        let got = inject_code_mix(&text, &row, &lexicon(), &InjectConfig { k, seed, langs: LangSet::BOTH }, &Scanner::default()).unwrap();
        let (expected, positions) = oracle::inject(&text, &row, &oracle_lexicon(), k, seed);
        prop_assert_eq!(&got.text, &expected);
        prop_assert_eq!(&got.positions, &positions);
        prop_assert_eq!(got.insufficient_words, idx.len() < k);
    }

    #[test]
    fn confusion_adds_exactly_m_foreign_tokens(
        idx in prop::collection::vec(0usize..WORDS.len(), 1..25),
        k in 1usize..12,
        seed in any::<u64>(),
    ) {
        let text = sentence(&idx);
        let out = inject_code_mix(&text, "r", &lexicon(), &InjectConfig { k, seed, langs: LangSet::BOTH }, &Scanner::default()).unwrap();
        let foreign = |s: &str| tokenize(s).iter().filter(|t| t.valid && t.script == ScriptClass::OtherScript).count();
        prop_assert_eq!(foreign(&out.text) - foreign(&text), k.min(idx.len()));
        prop_assert!(!monolingual_gate(&out.text, &Scanner::default()));
        let positions: HashSet<usize> = out.positions.iter().copied().collect();
        prop_assert_eq!(positions.len(), out.positions.len());
    }

    #[test]
    fn injection_is_reproducible(idx in prop::collection::vec(0usize..WORDS.len(), 1..25), seed in any::<u64>()) {
        let text = sentence(&idx);
        let cfg = InjectConfig { k: 8, seed, langs: LangSet::BOTH };
        let a = inject_code_mix(&text, "x", &lexicon(), &cfg, &Scanner::default()).unwrap();
        let b = inject_code_mix(&text, "x", &lexicon(), &cfg, &Scanner::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn normalize_is_idempotent(text in any::<String>()) {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn pipeline_invariants(rows in prop::collection::vec(
        (prop::collection::vec(0usize..WORDS.len(), 1..12), 0usize..4, any::<bool>(), 0usize..6),
        0..30,
    )) {
        let source: Vec<SourceRow> = rows.iter().enumerate().map(|(i, (idx, instr, pollute, foreign_len))| {
            let mut chosen = sentence(idx);
            if *pollute {
                chosen.push_str(" oops");
            }
            SourceRow {
                id: format!("r{i}"),
                instruction: format!("질문 {instr}"),
                chosen,
                foreign_response: Some(vec!["word"; *foreign_len + 1].join(" ")),
            }
        }).collect();
        for mode in [ForgeMode::CodeMixed, ForgeMode::FullForeign, ForgeMode::Quadruplet] {
            let scanner = Scanner::default();
            let out = build_triplets(&source, Some(&lexicon()), &ForgeConfig::new(mode), &scanner).unwrap();
            prop_assert_eq!(out.counts.input, out.counts.output + out.counts.total_dropped());
            prop_assert_eq!(out.counts.output as usize, out.rows.len());
            prop_assert_eq!(out.skips.len() as u64, out.counts.total_dropped());
            for row in &out.rows {
                let t = row.triplet();
                prop_assert!(monolingual_gate(&t.chosen, &scanner));
                prop_assert!(!monolingual_gate(&t.rejected, &scanner));
                prop_assert_ne!(&t.rejected, &t.chosen);
                if let ForgedRow::Quadruplet(q) = row {
                    prop_assert!(!monolingual_gate(&q.confusion, &scanner));
                }
            }
        }
    }
}

#[test]
fn different_seeds_give_distinct_outputs() {
    let text = sentence(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 0, 1, 2, 3, 4, 5, 6, 7]);
    let outputs: HashSet<String> = (0..100u64)
        .map(|seed| {
            inject_code_mix(&text, "row", &lexicon(), &InjectConfig { k: 8, seed, langs: LangSet::BOTH }, &Scanner::default())
                .unwrap()
                .text
        })
        .collect();
    assert_eq!(outputs.len(), 100);
}

#[test]
fn normalize_matches_reference_nfc() {
    // Expected code points frozen from Python's unicodedata.normalize("NFC", ...).
    let cases: &[(&str, &[u32])] = &[
        ("\u{1112}\u{1161}\u{11AB}\u{1100}\u{116E}\u{11A8} \u{1109}\u{1165}\u{110B}\u{116E}\u{11AF}", &[0xD55C, 0xAD6D, 0x20, 0xC11C, 0xC6B8]),
        ("cafe\u{301} \u{1100}\u{1161}", &[0x63, 0x61, 0x66, 0xE9, 0x20, 0xAC00]),
        ("\u{3131}\u{314F}", &[0x3131, 0x314F]),
    ];
    for (input, expected) in cases {
        let got: Vec<u32> = normalize(input).chars().map(|c| c as u32).collect();
        assert_eq!(&got, expected, "input {input:?}");
    }
}

#[test]
fn stage_counts_name_each_drop() {
    let source = vec![
        SourceRow { id: "ok".into(), instruction: "질문".into(), chosen: "사과 바나나".into(), foreign_response: None },
        SourceRow { id: "dup".into(), instruction: " 질문 ".into(), chosen: "학교 친구".into(), foreign_response: None },
        SourceRow { id: "rep".into(), instruction: "다른".into(), chosen: "물 물 물 물 물".into(), foreign_response: None },
    ];
    let mut cfg = ForgeConfig::new(ForgeMode::CodeMixed);
    cfg.inject.k = 1;
    let out = build_triplets(&source, Some(&lexicon()), &cfg, &Scanner::default()).unwrap();
    assert_eq!(out.counts.dropped_at(Stage::Dedup), 1);
    assert_eq!(out.counts.dropped_at(Stage::FailureFilter), 1);
    assert_eq!(out.rows.len(), 1);
}
