use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lecturelens_core::analytics::DenominatorMode;
use lecturelens_core::llm::prompts::LanguageSetting;
use lecturelens_core::metrics::ApVariant;

#[derive(Debug, Parser)]
#[command(name = "lecturelens", version, about = "Classroom engagement analytics from detector output and lecture transcripts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on one session and write report.md, report.json and trend.svg.
    Analyze(AnalyzeArgs),
    /// Score detector predictions against ground-truth boxes (AP per category, mAP).
    Metrics(MetricsArgs),
    /// Generate a seeded synthetic session from a rate profile.
    Simulate(SimulateArgs),
    /// Re-render report.md and trend.svg from a stored report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DenominatorArg {
    UpPlusDown,
    Participants,
}

impl From<DenominatorArg> for DenominatorMode {
    fn from(v: DenominatorArg) -> Self {
        match v {
            DenominatorArg::UpPlusDown => DenominatorMode::UpPlusDown,
            DenominatorArg::Participants => DenominatorMode::Participants,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LanguageArg {
    Auto,
    Zh,
    En,
}

impl From<LanguageArg> for LanguageSetting {
    fn from(v: LanguageArg) -> Self {
        match v {
            LanguageArg::Auto => LanguageSetting::Auto,
            LanguageArg::Zh => LanguageSetting::Zh,
            LanguageArg::En => LanguageSetting::En,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    AllPoint,
    ElevenPoint,
    HundredOnePoint,
}

impl From<VariantArg> for ApVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AllPoint => ApVariant::AllPoint,
            VariantArg::ElevenPoint => ApVariant::ElevenPoint,
            VariantArg::HundredOnePoint => ApVariant::HundredOnePoint,
        }
    }
}

/// Every flag overrides the matching config-file field.
#[derive(Debug, Default, Args)]
pub struct AnalyzeArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Detection JSONL, one frame per line.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Transcript JSONL, one segment per line.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Audio locator passed to the ASR backend.
    #[arg(long)]
    pub audio: Option<String>,
    /// Session length in seconds (inferred from the inputs when omitted).
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub session_id: Option<String>,
    /// Output root; files go to `<out>/<session>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub course: Option<String>,
    #[arg(long)]
    pub teacher: Option<String>,
    #[arg(long)]
    pub date: Option<String>,
    #[arg(long, value_enum)]
    pub denominator: Option<DenominatorArg>,
    #[arg(long)]
    pub high: Option<f64>,
    #[arg(long)]
    pub low: Option<f64>,
    /// Change-point and minimum-stage window, in minutes.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Minutes of transcript on each side of a change point.
    #[arg(long)]
    pub contrast_k: Option<usize>,
    #[arg(long)]
    pub participants: Option<u32>,
    #[arg(long, value_enum)]
    pub language: Option<LanguageArg>,
    /// Stop after persisting corpora; the report carries stats and the chart only.
    #[arg(long)]
    pub skip_llm: bool,
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    #[arg(long)]
    pub llm_model: Option<String>,
    /// Directory of `<hash>.txt` canned LLM responses.
    #[arg(long)]
    pub mock_llm: Option<PathBuf>,
    /// Transcript JSONL replayed in place of speech recognition.
    #[arg(long)]
    pub mock_asr: Option<PathBuf>,
    #[arg(long)]
    pub asr_endpoint: Option<String>,
    /// Write every LLM request to `<dir>/<hash>.request.json` (fixture authoring).
    #[arg(long, hide = true)]
    pub record_requests: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predictions: detection JSONL lines with an extra "image" field.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth JSONL: {"image", "cls", "xyxy"} per line.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[arg(long, value_enum, default_value = "all-point")]
    pub variant: VariantArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Synthetic profile JSON.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the profile's seed (which itself defaults to 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `analyze`.
    pub input: PathBuf,
    /// Destination directory (defaults to the input's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
