//! Generation collection from an HTTP text-generation endpoint.
//!
//! Contract: `POST {"prompt", "temperature", "seed"}` answered by
//! `{"text"}`. Each request is retried up to `retries` times; transport
//! failures that survive every retry abort the run, malformed answers skip
//! the row. Records are appended one line at a time, so an interrupted run
//! resumes by skipping keys already on disk.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use langmix_core::harness::{GenerationRecord, Method, Temperature};
use langmix_core::rng::{fnv1a64, SplitMix64};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::formats::{append_jsonl_line, parse_generations, GenerationLine, PromptLine};

pub const TOKEN_ENV: &str = "LANGMIX_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Connection errors, timeouts, 5xx and 429.
    Transport(String),
    /// Anything else that is not a `{"text": ...}` answer.
    Malformed(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Transport(m) => write!(f, "transport error: {m}"),
            Failure::Malformed(m) => write!(f, "malformed response: {m}"),
        }
    }
}

pub trait Generator: Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<String, Failure>;
}

pub struct HttpGenerator {
    client: reqwest::blocking::Client,
    endpoint: String,
    token: Option<String>,
}

#[derive(Deserialize)]
struct Reply {
    text: String,
}

impl HttpGenerator {
    pub fn new(endpoint: &str, token: Option<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AppError::EndpointUnreachable(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.to_owned(),
            token,
        })
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<String, Failure> {
        let mut builder = self.client.post(&self.endpoint).json(request);
        if let Some(token) = &self.token {
            builder = builder.bearer_auth(token);
        }
        let response = builder.send().map_err(|e| Failure::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Failure::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Malformed(format!("HTTP {status}")));
        }
        let body = response.text().map_err(|e| Failure::Transport(e.to_string()))?;
        serde_json::from_str::<Reply>(&body)
            .map(|r| r.text)
            .map_err(|e| Failure::Malformed(format!("expected {{\"text\": ...}}: {e}")))
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub temperatures: Vec<Temperature>,
    pub repeats: u32,
    pub model: String,
    pub method: Method,
    pub seed: u64,
    pub workers: usize,
    pub retries: u32,
    /// Sleep before retry `n` is `n * backoff`.
    pub backoff: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRequest {
    pub prompt_id: String,
    pub temperature: Temperature,
    pub repeat: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchSummary {
    pub planned: usize,
    pub already_present: usize,
    pub written: usize,
    pub retries: u64,
    pub skipped: Vec<SkippedRequest>,
}

/// Per-request sampling seed, stable across runs and worker counts.
pub fn request_seed(base: u64, prompt_id: &str, temperature: Temperature, repeat: u32) -> u64 {
    let key = format!("{prompt_id}\u{1f}{temperature}\u{1f}{repeat}");
    SplitMix64::new(base ^ fnv1a64(key.as_bytes())).next_u64() & 0xFFFF_FFFF
}

struct Job<'a> {
    prompt: &'a PromptLine,
    temperature: Temperature,
    repeat: u32,
}

enum Outcome {
    Done(String),
    Malformed(String),
    Unreachable(String),
}

struct JobResult {
    retries: u32,
    outcome: Outcome,
}

fn run_job<G: Generator>(generator: &G, job: &Job<'_>, opts: &FetchOptions) -> JobResult {
    let request = GenerationRequest {
        prompt: job.prompt.text.clone(),
        temperature: job.temperature.get(),
        seed: request_seed(opts.seed, &job.prompt.prompt_id, job.temperature, job.repeat),
    };
    let mut retries = 0;
    loop {
        match generator.generate(&request) {
            Ok(text) => {
                return JobResult {
                    retries,
                    outcome: Outcome::Done(text),
                }
            }
            Err(failure) if retries < opts.retries => {
                retries += 1;
                log::warn!(
                    "retry {retries}/{} for {} t={} #{}: {failure}",
                    opts.retries,
                    job.prompt.prompt_id,
                    job.temperature,
                    job.repeat
                );
                thread::sleep(opts.backoff * retries);
            }
            Err(failure) => {
                let outcome = match failure {
                    Failure::Transport(m) => Outcome::Unreachable(m),
                    Failure::Malformed(m) => Outcome::Malformed(m),
                };
                return JobResult { retries, outcome };
            }
        }
    }
}

type Key = (String, String, Method, Temperature, u32);

fn key_of(r: &GenerationRecord) -> Key {
    (r.prompt_id.clone(), r.model.clone(), r.method, r.temperature, r.repeat)
}

/// Opens `out` for appending after dropping a partial trailing line, and
/// returns the keys already present.
fn open_for_resume(out: &Path) -> Result<(File, BTreeSet<Key>)> {
    let existing = match std::fs::read(out) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(AppError::io(out, e)),
    };
    let complete = existing.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let text = std::str::from_utf8(&existing[..complete]).map_err(|e| AppError::parse(out, 0, e))?;
    let keys = parse_generations(text, out)?.iter().map(key_of).collect();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(|e| AppError::io(out, e))?;
    if complete < existing.len() {
        log::warn!("{}: dropping {} bytes of a partial last line", out.display(), existing.len() - complete);
        file.set_len(complete as u64).map_err(|e| AppError::io(out, e))?;
    }
    Ok((file, keys))
}

/// Collects one record per (prompt, temperature, repeat) into `out`.
/// Lines are written in sweep order whatever the worker count.
pub fn fetch_generations<G: Generator>(
    generator: &G,
    prompts: &[PromptLine],
    opts: &FetchOptions,
    out: &Path,
) -> Result<FetchSummary> {
    if opts.repeats == 0 {
        return Err(AppError::Usage("repeats must be at least 1".into()));
    }
    if opts.temperatures.is_empty() {
        return Err(AppError::Usage("no temperatures given".into()));
    }
    let (file, present) = open_for_resume(out)?;
    let mut summary = FetchSummary::default();
    let mut jobs = Vec::new();
    for prompt in prompts {
        for &temperature in &opts.temperatures {
            for repeat in 1..=opts.repeats {
                summary.planned += 1;
                let key = (prompt.prompt_id.clone(), opts.model.clone(), opts.method, temperature, repeat);
                if present.contains(&key) {
                    summary.already_present += 1;
                } else {
                    jobs.push(Job {
                        prompt,
                        temperature,
                        repeat,
                    });
                }
            }
        }
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let mut writer = BufWriter::new(file);
    let mut failure: Option<AppError> = None;
    let mut unreachable: Option<String> = None;
    thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<(usize, JobResult)>();
        for _ in 0..opts.workers.max(1) {
            let tx = tx.clone();
            let (jobs, next, stop) = (&jobs, &next, &stop);
            s.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let result = run_job(generator, job, opts);
                if matches!(result.outcome, Outcome::Unreachable(_)) {
                    stop.store(true, Ordering::Relaxed);
                }
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, JobResult> = BTreeMap::new();
        let mut cursor = 0;
        let mut handle = |i: usize, r: JobResult, summary: &mut FetchSummary, writer: &mut BufWriter<File>| {
            let job = &jobs[i];
            summary.retries += u64::from(r.retries);
            match r.outcome {
                Outcome::Done(text) => {
                    let line = GenerationLine {
                        prompt_id: job.prompt.prompt_id.clone(),
                        model: opts.model.clone(),
                        method: opts.method.as_str().to_owned(),
                        temperature: job.temperature.get(),
                        repeat: job.repeat,
                        text,
                    };
                    match append_jsonl_line(writer, &line) {
                        Ok(()) => summary.written += 1,
                        Err(e) => {
                            if failure.is_none() {
                                failure = Some(AppError::io(out, e));
                            }
                            stop.store(true, Ordering::Relaxed);
                        }
                    }
                }
                Outcome::Malformed(reason) => {
                    log::warn!("skipping {} t={} #{}: {reason}", job.prompt.prompt_id, job.temperature, job.repeat);
                    summary.skipped.push(SkippedRequest {
                        prompt_id: job.prompt.prompt_id.clone(),
                        temperature: job.temperature,
                        repeat: job.repeat,
                        reason,
                    });
                }
                Outcome::Unreachable(reason) => {
                    unreachable.get_or_insert(reason);
                }
            }
        };
        for (i, result) in rx {
            pending.insert(i, result);
            while let Some(r) = pending.remove(&cursor) {
                handle(cursor, r, &mut summary, &mut writer);
                cursor += 1;
            }
        }
        // Only reached with gaps after an abort: keep whatever finished.
        for (i, r) in std::mem::take(&mut pending) {
            handle(i, r, &mut summary, &mut writer);
        }
    });
    writer.flush().map_err(|e| AppError::io(out, e))?;
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(reason) = unreachable {
        return Err(AppError::EndpointUnreachable(reason));
    }
    Ok(summary)
}
