//! Report rendering: Markdown table, CSV, and a JSON form that parses back.

use std::fmt::Write;

use langmix_core::harness::{EvalReport, GroupKey, Method, ReportMeta, ReportRow, SkippedGroup, Temperature};
use langmix_core::metrics::{CorpusScore, Ratio};
use langmix_core::ratio::{format_exact, format_fixed, parse_exact, to_big};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const PLACES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

pub fn render(report: &EvalReport, format: Format) -> Vec<u8> {
    match format {
        Format::Markdown => markdown(report).into_bytes(),
        Format::Csv => csv(report),
        Format::Json => json(report),
    }
}

/// Shortest terminating decimal for `r`, or `p/q` when none exists.
pub fn decimal(r: &Ratio) -> String {
    let big = to_big(r);
    for places in 0..=18 {
        let s = format_fixed(&big, places);
        if parse_decimal_big(&s) == big {
            return s;
        }
    }
    format_exact(&big)
}

fn parse_decimal_big(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("rendered decimal");
    BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32))
}

fn fixed_u64(r: &Ratio) -> String {
    format_fixed(&to_big(r), PLACES)
}

type Cell = fn(&CorpusScore) -> String;

pub fn markdown(report: &EvalReport) -> String {
    let tau = decimal(&report.meta.threshold);
    let mut out = String::new();
    out.push_str("| Metric |");
    for row in &report.rows {
        let _ = write!(out, " {} |", row.key);
    }
    out.push_str("\n|---|");
    for _ in &report.rows {
        out.push_str("---:|");
    }
    out.push('\n');
    let lines: [(String, Cell); 4] = [
        (format!("WPR > {tau} ratio"), |s| fixed_u64(&s.wpr_over_threshold_ratio)),
        (format!("LPR > {tau} ratio"), |s| fixed_u64(&s.lpr_over_threshold_ratio)),
        ("Average WPR".into(), |s| format_fixed(&s.mean_wpr, PLACES)),
        ("Average LPR".into(), |s| format_fixed(&s.mean_lpr, PLACES)),
    ];
    for (label, cell) in lines {
        let _ = write!(out, "| {label} |");
        for row in &report.rows {
            let _ = write!(out, " {} |", cell(&row.score));
        }
        out.push('\n');
    }
    let m = &report.meta;
    out.push('\n');
    let _ = writeln!(out, "- threshold: {tau}");
    let _ = writeln!(out, "- sentence cutoff: {}", decimal(&m.lpr_tau));
    let _ = writeln!(out, "- repeats: {}", m.repeats);
    let _ = writeln!(
        out,
        "- records: {} total, {} scored, {} excluded (no valid tokens), {} skipped",
        m.total_records, m.scored, m.excluded, m.skipped
    );
    for g in &report.skipped_groups {
        let _ = writeln!(out, "- skipped {} ({} records): {}", g.key, g.records, g.reason);
    }
    let _ = writeln!(out, "- langmix {}", m.tool_version);
    out
}

const CSV_HEADER: [&str; 14] = [
    "model",
    "method",
    "temperature",
    "n_responses",
    "excluded",
    "threshold",
    "wpr_over_threshold_ratio",
    "lpr_over_threshold_ratio",
    "mean_wpr",
    "mean_lpr",
    "wpr_over_threshold_ratio_exact",
    "lpr_over_threshold_ratio_exact",
    "mean_wpr_exact",
    "mean_lpr_exact",
];

/// One line per group; `_exact` columns carry the rationals as `p/q`.
pub fn csv(report: &EvalReport) -> Vec<u8> {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for ReportRow { key, score: s } in &report.rows {
        w.write_record([
            key.model.clone(),
            key.method.to_string(),
            key.temperature.to_string(),
            s.n_responses.to_string(),
            s.excluded.to_string(),
            decimal(&s.threshold),
            fixed_u64(&s.wpr_over_threshold_ratio),
            fixed_u64(&s.lpr_over_threshold_ratio),
            format_fixed(&s.mean_wpr, PLACES),
            format_fixed(&s.mean_lpr, PLACES),
            format_exact(&to_big(&s.wpr_over_threshold_ratio)),
            format_exact(&to_big(&s.lpr_over_threshold_ratio)),
            format_exact(&s.mean_wpr),
            format_exact(&s.mean_lpr),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn small_ratio(big: &BigRational) -> Option<Ratio> {
    Some(Ratio::new(big.numer().to_u64()?, big.denom().to_u64()?))
}

fn exact_field(s: &str, line: usize) -> Result<BigRational> {
    parse_exact(s).ok_or_else(|| AppError::parse("<csv>", line, format!("bad rational {s:?}")))
}

fn exact_small(s: &str, line: usize) -> Result<Ratio> {
    small_ratio(&exact_field(s, line)?).ok_or_else(|| AppError::parse("<csv>", line, format!("bad ratio {s:?}")))
}

fn key_from(model: &str, method: &str, temperature: &str) -> Result<GroupKey, String> {
    let t: f64 = temperature.parse().map_err(|_| format!("bad temperature {temperature:?}"))?;
    Ok(GroupKey {
        model: model.to_owned(),
        method: method.parse::<Method>().map_err(|e| e.to_string())?,
        temperature: Temperature::new(t).map_err(|e| e.to_string())?,
    })
}

/// Inverse of [`csv`] for the per-group rows.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<ReportRow>> {
    let mut reader = ::csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| AppError::parse("<csv>", line, e))?;
        if rec.len() != CSV_HEADER.len() {
            return Err(AppError::parse("<csv>", line, "wrong column count"));
        }
        let count = |j: usize| rec[j].parse::<u64>().map_err(|e| AppError::parse("<csv>", line, e));
        let threshold = crate::config::parse_threshold(&rec[5]).map_err(|e| AppError::parse("<csv>", line, e))?;
        rows.push(ReportRow {
            key: key_from(&rec[0], &rec[1], &rec[2]).map_err(|e| AppError::parse("<csv>", line, e))?,
            score: CorpusScore {
                n_responses: count(3)?,
                excluded: count(4)?,
                threshold,
                wpr_over_threshold_ratio: exact_small(&rec[10], line)?,
                lpr_over_threshold_ratio: exact_small(&rec[11], line)?,
                mean_wpr: exact_field(&rec[12], line)?,
                mean_lpr: exact_field(&rec[13], line)?,
            },
        });
    }
    Ok(rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonMetric {
    value: String,
    exact: String,
}

impl JsonMetric {
    fn of(r: &BigRational) -> Self {
        JsonMetric {
            value: format_fixed(r, PLACES),
            exact: format_exact(r),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    model: String,
    method: String,
    temperature: f64,
    n_responses: u64,
    excluded: u64,
    wpr_over_threshold_ratio: JsonMetric,
    lpr_over_threshold_ratio: JsonMetric,
    mean_wpr: JsonMetric,
    mean_lpr: JsonMetric,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonSkipped {
    model: String,
    method: String,
    temperature: f64,
    records: u64,
    reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonMeta {
    threshold: String,
    lpr_tau: String,
    repeats: u32,
    total_records: u64,
    scored: u64,
    excluded: u64,
    skipped: u64,
    tool_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonReport {
    meta: JsonMeta,
    rows: Vec<JsonRow>,
    skipped_groups: Vec<JsonSkipped>,
}

pub fn json(report: &EvalReport) -> Vec<u8> {
    let m = &report.meta;
    let doc = JsonReport {
        meta: JsonMeta {
            threshold: decimal(&m.threshold),
            lpr_tau: decimal(&m.lpr_tau),
            repeats: m.repeats,
            total_records: m.total_records,
            scored: m.scored,
            excluded: m.excluded,
            skipped: m.skipped,
            tool_version: m.tool_version.clone(),
        },
        rows: report
            .rows
            .iter()
            .map(|r| JsonRow {
                model: r.key.model.clone(),
                method: r.key.method.to_string(),
                temperature: r.key.temperature.get(),
                n_responses: r.score.n_responses,
                excluded: r.score.excluded,
                wpr_over_threshold_ratio: JsonMetric::of(&to_big(&r.score.wpr_over_threshold_ratio)),
                lpr_over_threshold_ratio: JsonMetric::of(&to_big(&r.score.lpr_over_threshold_ratio)),
                mean_wpr: JsonMetric::of(&r.score.mean_wpr),
                mean_lpr: JsonMetric::of(&r.score.mean_lpr),
            })
            .collect(),
        skipped_groups: report
            .skipped_groups
            .iter()
            .map(|g| JsonSkipped {
                model: g.key.model.clone(),
                method: g.key.method.to_string(),
                temperature: g.key.temperature.get(),
                records: g.records,
                reason: g.reason.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("report serializes");
    out.push(b'\n');
    out
}

/// Reads back a report written by [`json`].
pub fn parse_json(bytes: &[u8]) -> Result<EvalReport> {
    let doc: JsonReport = serde_json::from_slice(bytes).map_err(|e| AppError::parse("<json>", e.line(), e))?;
    let bad = |msg: String| AppError::parse("<json>", 0, msg);
    let threshold = crate::config::parse_threshold(&doc.meta.threshold).map_err(bad)?;
    let lpr_tau = crate::config::parse_threshold(&doc.meta.lpr_tau).map_err(bad)?;
    let metric = |m: &JsonMetric| parse_exact(&m.exact).ok_or_else(|| bad(format!("bad rational {:?}", m.exact)));
    let small = |m: &JsonMetric| {
        metric(m).and_then(|b| small_ratio(&b).ok_or_else(|| bad(format!("bad ratio {:?}", m.exact))))
    };
    let mut rows = Vec::with_capacity(doc.rows.len());
    for r in &doc.rows {
        rows.push(ReportRow {
            key: key_from(&r.model, &r.method, &r.temperature.to_string()).map_err(bad)?,
            score: CorpusScore {
                n_responses: r.n_responses,
                excluded: r.excluded,
                mean_wpr: metric(&r.mean_wpr)?,
                mean_lpr: metric(&r.mean_lpr)?,
                wpr_over_threshold_ratio: small(&r.wpr_over_threshold_ratio)?,
                lpr_over_threshold_ratio: small(&r.lpr_over_threshold_ratio)?,
                threshold,
            },
        });
    }
    let mut skipped_groups = Vec::with_capacity(doc.skipped_groups.len());
    for g in &doc.skipped_groups {
        skipped_groups.push(SkippedGroup {
            key: key_from(&g.model, &g.method, &g.temperature.to_string()).map_err(bad)?,
            records: g.records,
            reason: g.reason.clone(),
        });
    }
    let m = doc.meta;
    Ok(EvalReport {
        rows,
        skipped_groups,
        meta: ReportMeta {
            threshold,
            lpr_tau,
            repeats: m.repeats,
            total_records: m.total_records,
            scored: m.scored,
            excluded: m.excluded,
            skipped: m.skipped,
            tool_version: m.tool_version,
        },
    })
}
