//! Report outputs: trend chart (SVG), Markdown report and canonical JSON.

mod json;
mod markdown;
mod svg;

use serde::{Deserialize, Serialize};

use crate::analytics::{AnalyticsConfig, ChangePoint, MinuteRate, SessionStats, StageInterval};
use crate::llm::prompts::Language;
use crate::llm::report::{EvaluationReport, OptimizationReport};

pub use json::{parse_json, render_json};
pub use markdown::render_markdown;
pub use svg::{render_trend_svg, RenderError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub duration_s: f64,
    pub course: String,
    pub teacher: String,
    pub date: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Skipped,
    Mock,
    Http,
}

/// Every parameter that shaped the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub analytics: AnalyticsConfig,
    pub report_language: Language,
    pub llm: LlmMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub session: SessionInfo,
    pub series: Vec<MinuteRate>,
    pub stages: Vec<StageInterval>,
    pub change_points: Vec<ChangePoint>,
    pub stats: SessionStats,
    /// `None` when LLM stages were skipped.
    pub evaluation: Option<EvaluationReport>,
    pub optimization: Option<OptimizationReport>,
    pub config: ConfigEcho,
    pub notes: Vec<String>,
}
