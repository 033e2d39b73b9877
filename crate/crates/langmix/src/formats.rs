//! On-disk formats: JSONL records, the lexicon TSV and the loss-log CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use langmix_core::diagnostics::{LossRecord, SequenceLogProb};
use langmix_core::forge::{ForgedRow, Lang, RejectionKind, SourceRow, SubstitutionLexicon};
use langmix_core::harness::{GenerationRecord, Method, Temperature};
use langmix_core::ScriptConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const LOSS_CSV_HEADER: [&str; 5] = ["checkpoint_id", "tokens_seen", "example_id", "chosen_loss", "rejected_loss"];

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

/// Parses one JSON object per non-blank line.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| AppError::parse(path, i + 1, e))?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    parse_jsonl(&read_text(path)?, path)
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_bytes(path, &to_jsonl(items))
}

pub fn append_jsonl_line<W: Write, T: Serialize>(w: &mut W, item: &T) -> std::io::Result<()> {
    let mut line = serde_json::to_vec(item).map_err(std::io::Error::other)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptLine {
    pub prompt_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLine {
    pub prompt_id: String,
    pub model: String,
    pub method: String,
    pub temperature: f64,
    pub repeat: u32,
    pub text: String,
}

impl GenerationLine {
    pub fn into_record(self) -> Result<GenerationRecord, String> {
        Ok(GenerationRecord {
            method: self.method.parse::<Method>().map_err(|e| e.to_string())?,
            temperature: Temperature::new(self.temperature).map_err(|e| e.to_string())?,
            prompt_id: self.prompt_id,
            model: self.model,
            repeat: self.repeat,
            text: self.text,
        })
    }

    pub fn from_record(r: &GenerationRecord) -> Self {
        Self {
            prompt_id: r.prompt_id.clone(),
            model: r.model.clone(),
            method: r.method.as_str().to_owned(),
            temperature: r.temperature.get(),
            repeat: r.repeat,
            text: r.text.clone(),
        }
    }
}

pub fn parse_generations(text: &str, path: &Path) -> Result<Vec<GenerationRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: GenerationLine = serde_json::from_str(line).map_err(|e| AppError::parse(path, i + 1, e))?;
        out.push(parsed.into_record().map_err(|e| AppError::parse(path, i + 1, e))?);
    }
    Ok(out)
}

pub fn read_generations(path: &Path) -> Result<Vec<GenerationRecord>> {
    parse_generations(&read_text(path)?, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub id: String,
    pub instruction: String,
    pub chosen: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foreign_response: Option<String>,
}

impl From<CorpusLine> for SourceRow {
    fn from(l: CorpusLine) -> Self {
        SourceRow {
            id: l.id,
            instruction: l.instruction,
            chosen: l.chosen,
            foreign_response: l.foreign_response,
        }
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<SourceRow>> {
    Ok(read_jsonl::<CorpusLine>(path)?.into_iter().map(Into::into).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgedLine {
    pub id: String,
    pub instruction: String,
    pub chosen: String,
    pub rejected: String,
    pub rejection_kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub insufficient_words: bool,
}

impl From<&ForgedRow> for ForgedLine {
    fn from(row: &ForgedRow) -> Self {
        let t = row.triplet();
        let (confusion, insufficient_words) = match row {
            ForgedRow::Triplet(_) => (None, false),
            ForgedRow::Quadruplet(q) => (Some(q.confusion.clone()), q.insufficient_words),
        };
        ForgedLine {
            id: t.id.clone(),
            instruction: t.instruction.clone(),
            chosen: t.chosen.clone(),
            rejected: t.rejected.clone(),
            rejection_kind: match t.rejection_kind {
                RejectionKind::FullForeign => "full_foreign",
                RejectionKind::CodeMixed => "code_mixed",
            }
            .to_owned(),
            confusion,
            insufficient_words,
        }
    }
}

/// `word<TAB>lang<TAB>replacement`; blank lines and `#` comments skipped.
pub fn parse_lexicon(text: &str, path: &Path, target: ScriptConfig) -> Result<SubstitutionLexicon> {
    let mut lex = SubstitutionLexicon::new(target);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [word, lang, replacement] = fields[..] else {
            return Err(AppError::parse(path, i + 1, "expected word<TAB>lang<TAB>replacement"));
        };
        let lang: Lang = lang.parse().map_err(|e| AppError::parse(path, i + 1, e))?;
        lex.insert(word.trim(), lang, replacement.trim())
            .map_err(|e| AppError::parse(path, i + 1, e))?;
    }
    Ok(lex)
}

pub fn read_lexicon(path: &Path, target: ScriptConfig) -> Result<SubstitutionLexicon> {
    parse_lexicon(&read_text(path)?, path, target)
}

#[derive(Debug, Deserialize)]
struct LossRow {
    checkpoint_id: String,
    tokens_seen: u64,
    example_id: String,
    chosen_loss: f64,
    rejected_loss: f64,
    #[serde(default)]
    chosen_tokens: Option<u64>,
    #[serde(default)]
    rejected_tokens: Option<u64>,
}

/// Loss log with the fixed header; optional trailing `chosen_tokens` and
/// `rejected_tokens` columns enable token weighting.
pub fn parse_loss_csv(text: &str, path: &Path) -> Result<Vec<LossRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| AppError::parse(path, 1, e))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < LOSS_CSV_HEADER.len() || names[..5] != LOSS_CSV_HEADER {
        return Err(AppError::parse(path, 1, format!("header must start with {}", LOSS_CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<LossRow>().enumerate() {
        let row = row.map_err(|e| AppError::parse(path, i + 2, e))?;
        out.push(LossRecord {
            checkpoint_id: row.checkpoint_id,
            tokens_seen: row.tokens_seen,
            example_id: row.example_id,
            chosen_loss: row.chosen_loss,
            rejected_loss: row.rejected_loss,
            chosen_tokens: row.chosen_tokens,
            rejected_tokens: row.rejected_tokens,
        });
    }
    Ok(out)
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<LossRecord>> {
    parse_loss_csv(&read_text(path)?, path)
}

pub fn loss_csv(records: &[LossRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOSS_CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.checkpoint_id.clone(),
            r.tokens_seen.to_string(),
            r.example_id.clone(),
            r.chosen_loss.to_string(),
            r.rejected_loss.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbLine {
    pub example_id: String,
    pub mean_token_logprob: f64,
    pub token_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_mean_token_logprob: Option<f64>,
}

impl From<LogProbLine> for SequenceLogProb {
    fn from(l: LogProbLine) -> Self {
        SequenceLogProb {
            example_id: l.example_id,
            mean_token_logprob: l.mean_token_logprob,
            token_count: l.token_count,
            reference_mean_token_logprob: l.reference_mean_token_logprob,
        }
    }
}

pub fn read_logprobs(path: &Path) -> Result<Vec<SequenceLogProb>> {
    Ok(read_jsonl::<LogProbLine>(path)?.into_iter().map(Into::into).collect())
}
