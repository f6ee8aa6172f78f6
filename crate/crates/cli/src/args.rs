use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "spanex", version, about = "Span-interaction explanations: extraction, agreement and faithfulness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Import annotations into canonical JSON.
    Convert(ConvertArgs),
    /// Check label constraints; exits 1 when any rule is violated.
    Validate(ValidateArgs),
    /// Instance and interaction counts.
    Stats(StatsArgs),
    /// Inter-annotator agreement by annotator count.
    Agreement(AgreementArgs),
    /// Choose the attention head used for extraction.
    SelectHead(SelectHeadArgs),
    /// Extract span-pair explanations with community detection.
    Extract(ExtractArgs),
    /// Faithfulness evaluation of extracted or human explanations.
    Eval(EvalArgs),
    /// Merge evaluation reports from several models.
    Report(ReportArgs),
    /// Serve the built-in mock model over HTTP or stdio.
    MockOracle(MockOracleArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Model endpoint: mock, mock:<seed>, http://host:port or stdio:<cmd>.
    /// Falls back to SPANEX_ORACLE_URL.
    #[arg(long)]
    pub oracle: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, default_value = "json")]
    pub from: String,
    #[arg(long, default_value = "json")]
    pub to: String,
    /// A canonical JSON file, or a brat directory (flat, or one
    /// subdirectory per annotator).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name for brat imports.
    #[arg(long, default_value = "snli")]
    pub dataset: String,
    /// Tab-separated `id<TAB>label` file for brat imports.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Annotator name for a flat brat directory.
    #[arg(long, default_value = "A1")]
    pub annotator: String,
    /// Add system interactions (Synonym-SYS and danglers).
    #[arg(long)]
    pub augment: bool,
    #[arg(long)]
    pub case_sensitive: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Validate the annotations as stored, without system interactions.
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub case_sensitive: bool,
    /// Also write the violations as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub augment: bool,
    #[arg(long)]
    pub case_sensitive: bool,
    /// JSON output; a `.csv` sibling is written next to it. Stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "exact")]
    pub mode: String,
    /// Comma-separated levels.
    #[arg(long, default_value = "low,high")]
    pub level: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectHeadArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value = "classifier-weight")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value = "classifier-weight")]
    pub method: String,
    /// classifier-weight only: `instance` picks per instance, `model` uses
    /// the most frequent head.
    #[arg(long, default_value = "instance")]
    pub head_scope: String,
    /// Trained scalar-mix model; trained on the input when absent.
    #[arg(long)]
    pub mix_model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = spanex_core::community::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Worker threads; 0 uses every logical core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Directory for per-instance graph dumps.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, conflicts_with = "annotations", required_unless_present = "annotations")]
    pub explanations: Option<PathBuf>,
    /// Evaluate the human annotations stored in the input.
    #[arg(long)]
    pub annotations: bool,
    /// Add system interactions before evaluating annotations.
    #[arg(long)]
    pub augment: bool,
    #[arg(long, default_value = "1,3,5")]
    pub topk: String,
    #[arg(long, default_value = "random,part")]
    pub baselines: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// `union` perturbs all spans of a unit at once, `per-pair` one pair at a time.
    #[arg(long, default_value = "union")]
    pub unit: String,
    /// Class that post-hoc accuracy compares against: original or gold.
    #[arg(long, default_value = "original")]
    pub pha_reference: String,
    /// Side Part-Phrase draws at random: p1 or p2.
    #[arg(long, default_value = "p2")]
    pub part_phrase_random: String,
    /// Also split human units by annotator agreement (exact or relaxed).
    #[arg(long)]
    pub agreement_split: Option<String>,
    /// Model label recorded in the report.
    #[arg(long, default_value = "")]
    pub model: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MockOracleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Serve JSONL on stdin/stdout instead of HTTP.
    #[arg(long, conflicts_with = "port")]
    pub stdio: bool,
    /// HTTP port on 127.0.0.1; 0 picks a free one.
    #[arg(long, default_value_t = 0)]
    pub port: u16,
}
