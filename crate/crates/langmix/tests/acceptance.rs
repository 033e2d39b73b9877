//! Acceptance checks, one PASS/FAIL line each. Exits non-zero on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use langmix::commands::{forge_rows, score_report};
use langmix::formats::{read_corpus, read_generations, read_lexicon, to_jsonl, GenerationLine, ForgedLine};
use langmix::render::{markdown, render, Format};
use langmix_core::diagnostics::{
    delta_loss, dpo_loss_from_margin, orpo_loss, orpo_or_term_gradient, LossRecord, SequenceLogProb,
};
use langmix_core::forge::{inject_code_mix, ForgeConfig, ForgeMode, InjectConfig, Lang, SourceRow, Stage, SubstitutionLexicon};
use langmix_core::harness::{GenerationRecord, Method, ScoreOptions, Temperature};
use langmix_core::metrics::{corpus_wpr, response_lpr, response_wpr, threshold_ratio};
use langmix_core::ratio::to_big;
use langmix_core::rng::SplitMix64;
use langmix_core::{Ratio, Scanner, ScriptConfig};
use num_bigint::BigInt;
use num_rational::BigRational;

const TAU: (u64, u64) = (9, 10);

fn tau() -> Ratio {
    Ratio::new(TAU.0, TAU.1)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// Brute-force oracle: one pass over characters, no library tokenizer.

fn is_hangul(c: char) -> bool {
    matches!(c as u32, 0xAC00..=0xD7AF | 0x1100..=0x11FF | 0x3130..=0x318F | 0xA960..=0xA97F | 0xD7B0..=0xD7FF)
}

fn is_break(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{85}' | '\u{2028}' | '\u{2029}')
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…' | '。')
}

/// Per sentence: (valid tokens, target tokens). Plus totals.
fn oracle(text: &str) -> (u64, u64, Vec<(u64, u64)>) {
    let mut sentences = vec![(0u64, 0u64)];
    let (mut valid, mut target) = (0, 0);
    let (mut letters, mut hangul, mut in_word, mut last) = (0u64, 0u64, false, ' ');
    let mut pending_end = false;
    let mut gap_break = false;
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().chain(std::iter::once(&' ')).enumerate() {
        let end_of_text = i == chars.len();
        if c.is_whitespace() || end_of_text {
            if in_word {
                if letters > 0 {
                    valid += 1;
                    let s = sentences.last_mut().unwrap();
                    s.0 += 1;
                    if 2 * hangul > letters {
                        target += 1;
                        s.1 += 1;
                    }
                }
                pending_end = is_terminator(last);
                gap_break = false;
                in_word = false;
            }
            if is_break(c) {
                gap_break = true;
            }
        } else {
            if !in_word && (pending_end || gap_break) && i > 0 {
                sentences.push((0, 0));
            }
            pending_end = false;
            gap_break = false;
            if !in_word {
                letters = 0;
                hangul = 0;
                in_word = true;
            }
            if c.is_alphabetic() {
                letters += 1;
                hangul += u64::from(is_hangul(c));
            }
            last = c;
        }
    }
    (valid, target, sentences)
}

fn oracle_lpr(sentences: &[(u64, u64)]) -> Option<Ratio> {
    let counted: Vec<_> = sentences.iter().filter(|s| s.0 > 0).collect();
    if counted.is_empty() {
        return None;
    }
    let hits = counted.iter().filter(|s| s.1 * TAU.1 >= s.0 * TAU.0).count() as u64;
    Some(Ratio::new(hits, counted.len() as u64))
}

fn random_response(rng: &mut SplitMix64) -> String {
    const HANGUL: &[&str] = &["한국", "사람", "ᄀᄂ", "ㅋㅋ", "먹다", "가", "ꥠ"];
    const LATIN: &[&str] = &["hello", "Ünïcode", "abc", "x", "ﬁne"];
    const HAN: &[&str] = &["中文", "漢字", "日"];
    const OTHER: &[&str] = &["123", "3.14", "…", "--", "(", "\"", "2024년", "a가나", "가a", "ab가", "!?"];
    const PUNCT: &[&str] = &["", "", "", ".", "!", "?", ",", "…", "。", ")", "\""];
    const GAPS: &[&str] = &[" ", " ", " ", "  ", "\n", "\t", " \r\n ", "\u{2028}", "\u{3000}"];
    let n = rng.below(51) as usize;
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(GAPS[rng.below(GAPS.len() as u64) as usize]);
        }
        let pool = match rng.below(10) {
            0..=4 => HANGUL,
            5..=6 => LATIN,
            7 => HAN,
            _ => OTHER,
        };
        if rng.below(8) == 0 {
            out.push('(');
        }
        out.push_str(pool[rng.below(pool.len() as u64) as usize]);
        out.push_str(PUNCT[rng.below(PUNCT.len() as u64) as usize]);
    }
    out
}

fn metric_oracle_equivalence() -> String {
    let scanner = Scanner::default();
    let mut rng = SplitMix64::new(0x5EED);
    let start = Instant::now();
    let mut compared = 0;
    for _ in 0..10_000 {
        let text = random_response(&mut rng);
        let (tokens, spans) = scanner.scan(&text);
        let (valid, target, sentences) = oracle(&text);
        let lib_wpr = response_wpr(&tokens).ok();
        let want_wpr = (valid > 0).then(|| Ratio::new(target, valid));
        assert_eq!(lib_wpr, want_wpr, "wpr of {text:?}");
        let lib_lpr = response_lpr(&spans, &tokens, tau()).ok();
        assert_eq!(lib_lpr, oracle_lpr(&sentences), "lpr of {text:?}");
        compared += usize::from(want_wpr.is_some());
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    format!("10000 responses ({compared} with valid tokens) in {:.2}s", elapsed.as_secs_f64())
}

fn lpr_boundary() -> String {
    let scanner = Scanner::default();
    let boundary = "하나 둘 셋 넷 다섯 여섯 일곱 여덟 아홉 ten.";
    let (tokens, spans) = scanner.scan(boundary);
    assert_eq!(response_wpr(&tokens), Ok(Ratio::new(9, 10)));
    assert_eq!(response_lpr(&spans, &tokens, tau()), Ok(Ratio::from_integer(1)));

    let failing = "one two 셋.";
    let text = format!("{}{failing}", format!("{boundary} ").repeat(9));
    let (tokens, spans) = scanner.scan(&text);
    let lpr = response_lpr(&spans, &tokens, tau()).unwrap();
    assert_eq!(lpr, Ratio::new(9, 10));
    assert_eq!(threshold_ratio(&[lpr], tau()), Ok(Ratio::from_integer(0)));
    assert_eq!(threshold_ratio(&[Ratio::new(9, 10)], tau()), Ok(Ratio::from_integer(0)));
    "9/10 sentence passes the indicator; a 0.9 response is not > 0.9".into()
}

const WORDS: &[(&str, &str, &str)] = &[
    ("사과", "apple", "苹果"),
    ("바나나", "banana", "香蕉"),
    ("포도", "grape", "葡萄"),
    ("하늘", "sky", "天空"),
    ("바다", "sea", "海"),
    ("나무", "tree", "树"),
    ("학교", "school", "学校"),
    ("친구", "friend", "朋友"),
    ("음악", "music", "音乐"),
    ("도시", "city", "城市"),
    ("기차", "train", "火车"),
    ("커피", "coffee", "咖啡"),
];

fn lexicon() -> SubstitutionLexicon {
    let mut lex = SubstitutionLexicon::new(ScriptConfig::korean());
    for (ko, en, zh) in WORDS {
        lex.insert(*ko, Lang::En, *en).unwrap();
        lex.insert(*ko, Lang::Zh, *zh).unwrap();
    }
    lex
}

fn korean_sentence(rng: &mut SplitMix64, words: usize) -> String {
    let picked: Vec<&str> = (0..words).map(|_| WORDS[rng.below(WORDS.len() as u64) as usize].0).collect();
    format!("{}.", picked.join(" "))
}

fn planted_confusion() -> String {
    let scanner = Scanner::default();
    let lex = lexicon();
    let mut rng = SplitMix64::new(7);
    let cfg = InjectConfig { k: 2, seed: 11, ..InjectConfig::default() };
    let records: Vec<GenerationRecord> = (0..1000)
        .map(|i| {
            let clean = korean_sentence(&mut rng, 10);
            let text = if i % 10 < 3 {
                inject_code_mix(&clean, &format!("p{i:04}"), &lex, &cfg, &scanner).unwrap().text
            } else {
                clean
            };
            GenerationRecord {
                prompt_id: format!("p{i:04}"),
                model: "m".into(),
                method: Method::Sft,
                temperature: Temperature::new(1.0).unwrap(),
                repeat: 1,
                text,
            }
        })
        .collect();
    let options = ScoreOptions { repeats: 1, ..ScoreOptions::default() };
    let report = score_report(&records, &options, 4).unwrap();
    let s = &report.rows[0].score;
    assert_eq!(s.lpr_over_threshold_ratio, Ratio::new(7, 10));
    assert_eq!(s.mean_lpr, big(7, 10));
    assert!(markdown(&report).contains("| LPR > 0.9 ratio | 0.7000 |"));
    "1000 responses, 300 corrupted: LPR > 0.9 ratio = 7/10, mean LPR = 7/10".into()
}

fn pooled_witness() -> String {
    let scanner = Scanner::default();
    let a = scanner.tokenize("안녕");
    let b = scanner.tokenize("one two three");
    assert_eq!(corpus_wpr([a.as_slice(), b.as_slice()]), Ok(Ratio::new(1, 4)));
    let mean = (to_big(&response_wpr(&a).unwrap()) + to_big(&response_wpr(&b).unwrap())) / big(2, 1);
    assert_eq!(mean, big(1, 2));
    "pooled 1/4 vs mean of responses 1/2".into()
}

fn injection_rows() -> Vec<SourceRow> {
    let mut rng = SplitMix64::new(100);
    (0..100)
        .map(|i| {
            let words = 10 + rng.below(6) as usize;
            SourceRow {
                id: format!("row-{i:03}"),
                instruction: format!("질문 {i}"),
                chosen: korean_sentence(&mut rng, words),
                foreign_response: None,
            }
        })
        .collect()
}

fn injected(rows: &[SourceRow], seed: u64, workers: usize) -> Vec<u8> {
    let mut cfg = ForgeConfig::new(ForgeMode::CodeMixed);
    cfg.inject.seed = seed;
    let outcome = forge_rows(rows, Some(&lexicon()), &cfg, workers).unwrap();
    assert_eq!(outcome.rows.len(), rows.len());
    to_jsonl(&outcome.rows.iter().map(ForgedLine::from).collect::<Vec<_>>())
}

fn injection_determinism() -> String {
    let rows = injection_rows();
    let reference = injected(&rows, 42, 1);
    for _ in 0..2 {
        assert_eq!(injected(&rows, 42, 1), reference);
    }
    assert_eq!(injected(&rows, 42, 8), reference);
    let other = injected(&rows, 43, 8);
    let changed = reference.split(|&b| b == b'\n').zip(other.split(|&b| b == b'\n')).filter(|(a, b)| a != b).count();
    assert!(changed >= 99, "only {changed} rows changed");
    format!("3 runs and 1 vs 8 threads identical; seed change alters {changed}/100 rows")
}

fn pipeline_conservation() -> String {
    let source = read_corpus(&fixture("forge_fixture.jsonl")).unwrap();
    let lex = read_lexicon(&fixture("forge_lexicon.tsv"), ScriptConfig::korean()).unwrap();
    let mut cfg = ForgeConfig::new(ForgeMode::Quadruplet);
    cfg.inject.k = 2;
    cfg.inject.seed = 42;
    let outcome = forge_rows(&source, Some(&lex), &cfg, 4).unwrap();
    let c = &outcome.counts;
    let trace = [
        (Stage::Normalize, 3),
        (Stage::MonolingualGate, 2),
        (Stage::LengthRatio, 2),
        (Stage::Dedup, 2),
        (Stage::FailureFilter, 3),
        (Stage::Injection, 2),
    ];
    for (stage, n) in trace {
        assert_eq!(c.dropped_at(stage), n, "{stage}");
    }
    assert_eq!((c.input, c.output, c.insufficient_words), (20, 6, 1));
    assert_eq!(c.total_dropped(), c.input - c.output);
    let kept: Vec<&str> = outcome.rows.iter().map(|r| r.triplet().id.as_str()).collect();
    assert_eq!(kept, ["r01", "r10", "r11", "r18", "r19", "r20"]);
    "20 rows: drops 3/2/2/2/3/2 by stage, 6 kept, sum = input - output".into()
}

fn lp(v: f64) -> SequenceLogProb {
    SequenceLogProb::new("x", v, 10)
}

fn preference_calculators() -> String {
    let ln2 = std::f64::consts::LN_2;
    for v in [-0.05, -0.7, -3.0] {
        let o = orpo_loss(&lp(v), &lp(v), 0.1).unwrap();
        assert!((o.or_term - ln2).abs() < 1e-9);
    }
    assert!((dpo_loss_from_margin(0.0, 0.1) - ln2).abs() < 1e-9);
    let c = lp(-0.8).with_reference(-0.9);
    let r = lp(-0.8).with_reference(-0.9);
    assert!((langmix_core::diagnostics::dpo_loss(&c, &r, 0.1).unwrap() - ln2).abs() < 1e-9);

    let grid = [-0.05, -0.3, -0.9, -1.7, -3.2];
    let h = 1e-6;
    let or = |a: f64, b: f64| orpo_loss(&lp(a), &lp(b), 1.0).unwrap().or_term;
    let mut worst = 0.0f64;
    for &a in &grid {
        for &b in &grid {
            let (dc, dr) = orpo_or_term_gradient(&lp(a), &lp(b)).unwrap();
            let fc = (or(a + h, b) - or(a - h, b)) / (2.0 * h);
            let fr = (or(a, b + h) - or(a, b - h)) / (2.0 * h);
            for (analytic, numeric) in [(dc, fc), (dr, fr)] {
                let rel = (analytic - numeric).abs() / analytic.abs().max(1e-12);
                worst = worst.max(rel);
            }
            assert!(dc < 0.0 && dr > 0.0);
        }
    }
    assert!(worst < 1e-5, "relative error {worst}");
    for w in grid.windows(2) {
        for &b in &grid {
            // grid is descending, so w[1] is less likely than w[0]
            assert!(or(w[1], b) > or(w[0], b));
            assert!(or(b, w[1]) < or(b, w[0]));
        }
        assert!(dpo_loss_from_margin(w[1], 0.1) > dpo_loss_from_margin(w[0], 0.1));
    }
    format!("log 2 within 1e-9; worst finite-difference relative error {worst:.1e}; monotone on grid")
}

fn trajectory_arithmetic() -> String {
    let records = [LossRecord::new("c", 1, "a", 1.0, 2.0), LossRecord::new("c", 1, "b", 1.5, 2.5)];
    let d = delta_loss(&records).unwrap();
    assert!((d - 1.0).abs() < 1e-12);
    format!("delta_loss = {d}")
}

fn write_synthetic_generations(path: &Path) {
    let mut rng = SplitMix64::new(3000);
    let scanner = Scanner::default();
    let lex = lexicon();
    let mut lines = Vec::with_capacity(3000);
    for p in 0..1000 {
        for repeat in 1..=3 {
            let mut text = String::new();
            for s in 0..1 + rng.below(4) {
                let words = 5 + rng.below(10) as usize;
                let clean = korean_sentence(&mut rng, words);
                let sentence = if rng.below(5) == 0 {
                    let cfg = InjectConfig { k: 1 + rng.below(3) as usize, seed: s, ..InjectConfig::default() };
                    inject_code_mix(&clean, &format!("{p}-{repeat}"), &lex, &cfg, &scanner).unwrap().text
                } else {
                    clean
                };
                text.push_str(&sentence);
                text.push(' ');
            }
            lines.push(GenerationLine {
                prompt_id: format!("prompt-{p:04}"),
                model: "synthetic".into(),
                method: "dpo".into(),
                temperature: 0.7,
                repeat,
                text: text.trim_end().to_owned(),
            });
        }
    }
    std::fs::write(path, to_jsonl(&lines)).unwrap();
}

fn end_to_end_score() -> String {
    let dir = tempfile::tempdir().unwrap();
    let gens = dir.path().join("generations.jsonl");
    write_synthetic_generations(&gens);
    let run = |workers: &str| {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_langmix"))
            .args(["score", "--workers", workers])
            .arg(&gens)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (out.stdout, start.elapsed())
    };
    let (a, t1) = run("1");
    let (b, t2) = run("8");
    let (c, _) = run("4");
    assert!(a == b && b == c, "reports differ across runs");
    let worst = t1.max(t2);
    assert!(worst < Duration::from_secs(5), "took {worst:?}");
    let report = score_report(&read_generations(&gens).unwrap(), &ScoreOptions::default(), 2).unwrap();
    assert_eq!(report.meta.total_records, 3000);
    assert_eq!(report.meta.scored, 3000);
    format!("3000 records scored in {:.2}s, identical bytes for 1/4/8 workers", worst.as_secs_f64())
}

fn golden_report() -> String {
    let records = read_generations(&fixture("score_fixture.jsonl")).unwrap();
    let report = score_report(&records, &ScoreOptions::default(), 3).unwrap();
    let md = render(&report, Format::Markdown);
    assert_eq!(md, std::fs::read(fixture("score_fixture.md")).unwrap());
    let text = String::from_utf8(md).unwrap();
    for label in ["WPR > 0.9 ratio", "LPR > 0.9 ratio", "Average WPR", "Average LPR"] {
        assert!(text.contains(&format!("| {label} |")));
    }
    assert_eq!(render(&report, Format::Csv), std::fs::read(fixture("score_fixture.csv")).unwrap());
    "Markdown and CSV match committed golden files; four metric rows present".into()
}

type Check = fn() -> String;

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let checks: &[(&str, Check)] = &[
        ("metric oracle equivalence", metric_oracle_equivalence),
        ("LPR boundary: inclusive indicator, strict ratio", lpr_boundary),
        ("planted-confusion recovery", planted_confusion),
        ("pooled vs mean WPR witness", pooled_witness),
        ("injection determinism", injection_determinism),
        ("pipeline conservation", pipeline_conservation),
        ("ORPO/DPO calculators", preference_calculators),
        ("trajectory arithmetic", trajectory_arithmetic),
        ("end-to-end score", end_to_end_score),
        ("golden report render", golden_report),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!(
        "N/A   trained-model scores, loss curves and QA accuracies: need GPU-scale models; \
         not reproduced here"
    );
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
