use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use langmix_core::diagnostics::{
    delta_summary, dpo_loss_from_margin, dpo_margin, orpo_loss, trajectory, DiagnosticsError, SequenceLogProb,
    Weighting,
};
use langmix_core::forge::{
    build_triplets_with, ForgeConfig, ForgeMode, ForgeOutcome, LangSet, RowExecutor, SourceRow, Stage,
    SubstitutionLexicon,
};
use langmix_core::harness::{build_report, score_record, validate_records, EvalReport, GenerationRecord, Method, ScoreOptions, Temperature};
use langmix_core::metrics::default_threshold;
use langmix_core::{Scanner, ScriptConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::{Cli, Command, DiagnoseArgs, FetchArgs, ForgeArgs, Mode, ReportArgs, ReportFormat, ScoreArgs, WeightingArg};
use crate::config::{parse_threshold, Config};
use crate::error::{AppError, Result};
use crate::fetch::{fetch_generations, FetchOptions, HttpGenerator, TOKEN_ENV};
use crate::formats::{self, ForgedLine};
use crate::render::{self, Format};

pub const DEFAULT_WORKERS: usize = 4;

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Fetch(args) => fetch(&config, &args),
        Command::Score(args) => score(&config, &args),
        Command::Forge(args) => forge(&config, &args),
        Command::Diagnose(args) => diagnose(&args),
        Command::Report(args) => report(&args),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Usage(e.to_string()))
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => formats::write_bytes(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|()| stdout.flush())
                .map_err(|e| AppError::io("<stdout>", e))
        }
    }
}

fn format_of(f: ReportFormat) -> Format {
    match f {
        ReportFormat::Markdown => Format::Markdown,
        ReportFormat::Csv => Format::Csv,
        ReportFormat::Json => Format::Json,
    }
}

fn fetch(config: &Config, args: &FetchArgs) -> Result<()> {
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| config.endpoint.clone())
        .ok_or_else(|| AppError::Usage("no endpoint given (--endpoint or config `endpoint`)".into()))?;
    let temperatures = args
        .temperatures
        .clone()
        .or_else(|| config.temperatures.clone())
        .ok_or_else(|| AppError::Usage("no temperatures given (--temperatures or config `temperatures`)".into()))?
        .into_iter()
        .map(|t| Temperature::new(t).map_err(|e| AppError::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let model = args
        .model
        .clone()
        .or_else(|| config.model.clone())
        .ok_or_else(|| AppError::Usage("no model name given (--model or config `model`)".into()))?;
    let method: Method = args
        .method
        .as_deref()
        .or(config.method.as_deref())
        .unwrap_or("base")
        .parse()
        .map_err(|e: langmix_core::harness::HarnessError| AppError::Usage(e.to_string()))?;
    let opts = FetchOptions {
        temperatures,
        repeats: args.repeats.or(config.repeats).unwrap_or(3),
        model,
        method,
        seed: args.seed.or(config.seed).unwrap_or(0),
        workers: args.workers.or(config.workers).unwrap_or(DEFAULT_WORKERS),
        retries: args.retries.or(config.retries).unwrap_or(3),
        backoff: Duration::from_millis(250),
    };
    let timeout = Duration::from_secs(args.timeout_secs.or(config.timeout_secs).unwrap_or(120));
    let prompts: Vec<formats::PromptLine> = formats::read_jsonl(&args.prompts)?;
    let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
    let generator = HttpGenerator::new(&endpoint, token, timeout)?;
    let summary = fetch_generations(&generator, &prompts, &opts, &args.out)?;
    eprintln!(
        "{}: {} written, {} already present, {} skipped, {} retries ({} planned)",
        args.out.display(),
        summary.written,
        summary.already_present,
        summary.skipped.len(),
        summary.retries,
        summary.planned
    );
    Ok(())
}

/// Scores every record on a pool of `workers` threads; the report does not
/// depend on the worker count.
pub fn score_report(records: &[GenerationRecord], options: &ScoreOptions, workers: usize) -> Result<EvalReport> {
    validate_records(records).map_err(AppError::data)?;
    let scanner = Scanner::default();
    let scorings = pool(workers)?
        .install(|| {
            records
                .par_iter()
                .map(|r| score_record(r, &scanner, options))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(AppError::data)?;
    build_report(records, scorings, options).map_err(AppError::data)
}

fn threshold_flag(flag: Option<&str>, from_config: Option<langmix_core::Ratio>) -> Result<langmix_core::Ratio> {
    match flag {
        Some(s) => parse_threshold(s).map_err(AppError::Usage),
        None => Ok(from_config.unwrap_or_else(default_threshold)),
    }
}

fn score(config: &Config, args: &ScoreArgs) -> Result<()> {
    let options = ScoreOptions {
        threshold: threshold_flag(args.threshold.as_deref(), config.threshold()?)?,
        lpr_tau: threshold_flag(args.lpr_tau.as_deref(), config.lpr_tau()?)?,
        repeats: args.repeats.or(config.repeats).unwrap_or(3),
    };
    if options.repeats == 0 {
        return Err(AppError::Usage("repeats must be at least 1".into()));
    }
    let records = formats::read_generations(&args.generations)?;
    let report = score_report(&records, &options, args.workers.or(config.workers).unwrap_or(DEFAULT_WORKERS))?;
    for g in &report.skipped_groups {
        log::warn!("skipped group {}: {}", g.key, g.reason);
    }
    emit(&render::render(&report, format_of(args.format)), args.out.as_deref())
}

/// Row-local forge stages on the current rayon pool, order preserved.
pub struct RayonExecutor;

impl RowExecutor for RayonExecutor {
    fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

pub fn forge_rows(
    source: &[SourceRow],
    lexicon: Option<&SubstitutionLexicon>,
    config: &ForgeConfig,
    workers: usize,
) -> Result<ForgeOutcome> {
    let scanner = Scanner::default();
    pool(workers)?
        .install(|| build_triplets_with(&RayonExecutor, source, lexicon, config, &scanner))
        .map_err(|e| AppError::Usage(e.to_string()))
}

pub fn parse_langs(s: &str) -> Result<LangSet> {
    let mut set = LangSet { en: false, zh: false };
    for part in s.split(',').map(str::trim) {
        match part {
            "en" => set.en = true,
            "zh" => set.zh = true,
            "both" => set = LangSet::BOTH,
            other => return Err(AppError::Usage(format!("unknown language {other:?} (expected en, zh)"))),
        }
    }
    Ok(set)
}

#[derive(Serialize)]
struct StageReport<'a> {
    mode: &'a str,
    input: u64,
    output: u64,
    dropped: Vec<(&'static str, u64)>,
    insufficient_words: u64,
    skips: Vec<SkipLine<'a>>,
}

#[derive(Serialize)]
struct SkipLine<'a> {
    id: &'a str,
    stage: &'static str,
    reason: &'a str,
}

pub fn stage_report_json(mode: Mode, outcome: &ForgeOutcome) -> Vec<u8> {
    let mode = match mode {
        Mode::CodeMixed => "code_mixed",
        Mode::FullForeign => "full_foreign",
        Mode::Quadruplet => "quadruplet",
    };
    let doc = StageReport {
        mode,
        input: outcome.counts.input,
        output: outcome.counts.output,
        dropped: Stage::ALL.iter().map(|&s| (s.as_str(), outcome.counts.dropped_at(s))).collect(),
        insufficient_words: outcome.counts.insufficient_words,
        skips: outcome
            .skips
            .iter()
            .map(|s| SkipLine {
                id: &s.id,
                stage: s.stage.as_str(),
                reason: &s.reason,
            })
            .collect(),
    };
    // Stage counts as an ordered object rather than pairs.
    let mut value = serde_json::to_value(&doc).expect("report serializes");
    let dropped: serde_json::Map<String, serde_json::Value> =
        doc.dropped.iter().map(|(k, v)| ((*k).to_owned(), (*v).into())).collect();
    value["dropped"] = serde_json::Value::Object(dropped);
    let mut out = serde_json::to_vec_pretty(&value).expect("report serializes");
    out.push(b'\n');
    out
}

fn forge(config: &Config, args: &ForgeArgs) -> Result<()> {
    let mode = match args.mode {
        Mode::CodeMixed => ForgeMode::CodeMixed,
        Mode::FullForeign => ForgeMode::FullForeign,
        Mode::Quadruplet => ForgeMode::Quadruplet,
    };
    let mut forge_config = ForgeConfig::new(mode);
    forge_config.inject.seed = args.seed.or(config.seed).unwrap_or(0);
    forge_config.inject.k = args.k.or(config.k).unwrap_or(forge_config.inject.k);
    if let Some(langs) = args.langs.as_deref().or(config.langs.as_deref()) {
        forge_config.inject.langs = parse_langs(langs)?;
    }
    let lexicon = args
        .lexicon
        .as_deref()
        .map(|p| formats::read_lexicon(p, ScriptConfig::korean()))
        .transpose()?;
    let source = formats::read_corpus(&args.corpus)?;
    let outcome = forge_rows(
        &source,
        lexicon.as_ref(),
        &forge_config,
        args.workers.or(config.workers).unwrap_or(DEFAULT_WORKERS),
    )?;
    let lines: Vec<ForgedLine> = outcome.rows.iter().map(ForgedLine::from).collect();
    formats::write_jsonl(&args.out, &lines)?;
    if let Some(path) = &args.report {
        formats::write_bytes(path, &stage_report_json(args.mode, &outcome))?;
    }
    let c = &outcome.counts;
    let dropped: Vec<String> = Stage::ALL
        .iter()
        .filter(|&&s| c.dropped_at(s) > 0)
        .map(|&s| format!("{s} {}", c.dropped_at(s)))
        .collect();
    eprintln!(
        "{}: {} of {} rows kept; dropped: {}",
        args.out.display(),
        c.output,
        c.input,
        if dropped.is_empty() { "none".into() } else { dropped.join(", ") }
    );
    Ok(())
}

#[derive(Serialize)]
struct DeltaJson {
    weighting: &'static str,
    n_records: u64,
    n_checkpoints: u64,
    mean_chosen_loss: f64,
    mean_rejected_loss: f64,
    delta_loss: f64,
}

fn diag_err(e: DiagnosticsError) -> AppError {
    AppError::data(e)
}

pub fn trajectory_csv(points: &[langmix_core::diagnostics::TrajectoryPoint]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["checkpoint_id", "tokens_seen", "n_examples", "mean_chosen_loss", "mean_rejected_loss", "delta"])
        .expect("in-memory write");
    for p in points {
        w.write_record([
            p.checkpoint_id.clone(),
            p.tokens_seen.to_string(),
            p.n_examples.to_string(),
            p.mean_chosen_loss.to_string(),
            p.mean_rejected_loss.to_string(),
            p.delta.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// One CSV line per example present in both files, in chosen-file order.
pub fn preference_losses_csv(
    chosen: &[SequenceLogProb],
    rejected: &[SequenceLogProb],
    beta: f64,
    dpo_beta: f64,
) -> Result<Vec<u8>> {
    let by_id: HashMap<&str, &SequenceLogProb> = rejected.iter().map(|r| (r.example_id.as_str(), r)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["example_id", "sft_term", "or_term", "orpo_loss", "dpo_margin", "dpo_loss"])
        .expect("in-memory write");
    for c in chosen {
        let r = by_id
            .get(c.example_id.as_str())
            .ok_or_else(|| AppError::data(format!("example {} has no rejected log-prob", c.example_id)))?;
        let orpo = orpo_loss(c, r, beta).map_err(diag_err)?;
        let (margin, dpo) = if c.reference_mean_token_logprob.is_some() && r.reference_mean_token_logprob.is_some() {
            let m = dpo_margin(c, r).map_err(diag_err)?;
            (m.to_string(), dpo_loss_from_margin(m, dpo_beta).to_string())
        } else {
            (String::new(), String::new())
        };
        w.write_record([
            c.example_id.clone(),
            orpo.sft_term.to_string(),
            orpo.or_term.to_string(),
            orpo.total.to_string(),
            margin,
            dpo,
        ])
        .expect("in-memory write");
    }
    Ok(w.into_inner().expect("in-memory write"))
}

fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    if args.losses.is_none() && args.chosen_logprobs.is_none() {
        return Err(AppError::Usage("nothing to do: give --losses and/or --chosen-logprobs/--rejected-logprobs".into()));
    }
    if let Some(path) = &args.losses {
        let records = formats::read_loss_csv(path)?;
        let (weighting, name) = match args.weighting {
            WeightingArg::Example => (Weighting::Example, "example"),
            WeightingArg::Token => (Weighting::Token, "token"),
        };
        let points = trajectory(&records, weighting).map_err(diag_err)?;
        let d = delta_summary(&records).map_err(diag_err)?;
        let summary = DeltaJson {
            weighting: name,
            n_records: d.n_records,
            n_checkpoints: d.n_checkpoints,
            mean_chosen_loss: d.mean_chosen_loss,
            mean_rejected_loss: d.mean_rejected_loss,
            delta_loss: d.delta_loss,
        };
        formats::write_bytes(&args.out_dir.join("trajectory.csv"), &trajectory_csv(&points))?;
        let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        json.push(b'\n');
        formats::write_bytes(&args.out_dir.join("delta_summary.json"), &json)?;
        eprintln!("{} checkpoints, delta_loss {}", points.len(), d.delta_loss);
    }
    if let (Some(c), Some(r)) = (&args.chosen_logprobs, &args.rejected_logprobs) {
        let chosen = formats::read_logprobs(c)?;
        let rejected = formats::read_logprobs(r)?;
        let bytes = preference_losses_csv(&chosen, &rejected, args.beta, args.dpo_beta)?;
        formats::write_bytes(&args.out_dir.join("preference_losses.csv"), &bytes)?;
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let bytes = std::fs::read(&args.report).map_err(|e| AppError::io(&args.report, e))?;
    let report = render::parse_json(&bytes).map_err(|e| match e {
        AppError::Parse { line, message, .. } => AppError::parse(&args.report, line, message),
        other => other,
    })?;
    emit(&render::render(&report, format_of(args.format)), args.out.as_deref())
}
