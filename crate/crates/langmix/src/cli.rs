use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "langmix", version, about = "Language-confusion scoring, preference-data forging and loss diagnostics")]
pub struct Cli {
    /// TOML config; flags override its keys.
    #[arg(long, global = true, env = "LANGMIX_CONFIG")]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect generations from an HTTP endpoint.
    Fetch(FetchArgs),
    /// Score a generations file into a report.
    Score(ScoreArgs),
    /// Build preference triplets from a corpus.
    Forge(ForgeArgs),
    /// Loss trajectories and preference-loss calculators.
    Diagnose(DiagnoseArgs),
    /// Re-render a JSON report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Prompts JSONL: {"prompt_id", "text"}.
    #[arg(long)]
    pub prompts: PathBuf,
    /// Generations JSONL, appended to and resumed from.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Option<Vec<f64>>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Generations JSONL.
    pub generations: PathBuf,
    /// Outer cutoff of the "> threshold" ratios.
    #[arg(long)]
    pub threshold: Option<String>,
    /// Per-sentence cutoff of the LPR indicator.
    #[arg(long)]
    pub lpr_tau: Option<String>,
    #[arg(long)]
    pub repeats: Option<u32>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    CodeMixed,
    FullForeign,
    Quadruplet,
}

#[derive(Debug, Args)]
pub struct ForgeArgs {
    /// Corpus JSONL: {"id", "instruction", "chosen", "foreign_response"?}.
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// TSV of word<TAB>en|zh<TAB>replacement.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Words replaced per response.
    #[arg(long)]
    pub k: Option<usize>,
    /// en, zh or en,zh.
    #[arg(long)]
    pub langs: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Stage counts and skip reasons as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Example,
    Token,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Loss CSV: checkpoint_id,tokens_seen,example_id,chosen_loss,rejected_loss.
    #[arg(long)]
    pub losses: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "example")]
    pub weighting: WeightingArg,
    /// Log-prob JSONL for chosen responses.
    #[arg(long, requires = "rejected_logprobs")]
    pub chosen_logprobs: Option<PathBuf>,
    /// Log-prob JSONL for rejected responses, paired by example_id.
    #[arg(long, requires = "chosen_logprobs")]
    pub rejected_logprobs: Option<PathBuf>,
    /// Weight of the odds-ratio term.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dpo_beta: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by `score --format json`.
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
