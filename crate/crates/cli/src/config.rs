//! Run configuration: a JSON file, overridden field by field by flags.
//!
//! Secrets never live in the file. The LLM API key is read from the
//! environment only; endpoints fall back to the environment when neither
//! the file nor a flag sets them.

use std::path::{Path, PathBuf};

use lecturelens_core::analytics::{AnalyticsConfig, DenominatorMode};
use lecturelens_core::ingest::{SessionMetadata, ASR_ENDPOINT_ENV};
use lecturelens_core::llm::prompts::{LanguageSetting, PromptBuilder};
use lecturelens_core::llm::{DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, LLM_ENDPOINT_ENV};
use lecturelens_core::pipeline::PipelineOptions;
use serde::{Deserialize, Serialize};

use crate::args::AnalyzeArgs;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    pub endpoint: Option<String>,
    pub model: String,
    pub reply_path: String,
    pub timeout_s: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub mock_dir: Option<PathBuf>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: "default".to_string(),
            reply_path: "choices[0].message.content".to_string(),
            timeout_s: 600,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            mock_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsrSettings {
    pub endpoint: Option<String>,
    /// Transcript JSONL replayed instead of calling a recognizer.
    pub mock_fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub session_id: Option<String>,
    pub detections: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    /// Audio locator handed to the ASR backend.
    pub audio: Option<String>,
    pub duration_s: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub metadata: SessionMetadata,
    pub analytics: AnalyticsConfig,
    pub participants: Option<u32>,
    pub language: LanguageSetting,
    pub skip_llm: bool,
    pub llm: LlmSettings,
    pub asr: AsrSettings,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.detections);
        rebase(base, &mut cfg.transcript);
        rebase(base, &mut cfg.out_dir);
        rebase(base, &mut cfg.llm.mock_dir);
        rebase(base, &mut cfg.asr.mock_fixture);
        Ok(cfg)
    }

    pub fn apply_flags(&mut self, a: &AnalyzeArgs) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        set_opt(&mut self.session_id, &a.session_id);
        set_opt(&mut self.detections, &a.detections);
        set_opt(&mut self.transcript, &a.transcript);
        set_opt(&mut self.audio, &a.audio);
        set_opt(&mut self.duration_s, &a.duration);
        set_opt(&mut self.out_dir, &a.out);
        set(&mut self.metadata.course, &a.course);
        set(&mut self.metadata.teacher, &a.teacher);
        set(&mut self.metadata.date, &a.date);
        set(&mut self.analytics.denominator_mode, &a.denominator.map(DenominatorMode::from));
        set(&mut self.analytics.high_threshold, &a.high);
        set(&mut self.analytics.low_threshold, &a.low);
        set(&mut self.analytics.window_w, &a.window);
        set(&mut self.analytics.delta, &a.delta);
        set(&mut self.analytics.contrast_k, &a.contrast_k);
        set_opt(&mut self.participants, &a.participants);
        set(&mut self.language, &a.language.map(LanguageSetting::from));
        self.skip_llm |= a.skip_llm;
        set_opt(&mut self.llm.endpoint, &a.llm_endpoint);
        set(&mut self.llm.model, &a.llm_model);
        set_opt(&mut self.llm.mock_dir, &a.mock_llm);
        set_opt(&mut self.asr.endpoint, &a.asr_endpoint);
        set_opt(&mut self.asr.mock_fixture, &a.mock_asr);
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) {
        if self.llm.endpoint.is_none() {
            self.llm.endpoint = env(LLM_ENDPOINT_ENV);
        }
        if self.asr.endpoint.is_none() {
            self.asr.endpoint = env(ASR_ENDPOINT_ENV);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.analytics
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.detections.is_none() {
            return Err(CliError::Usage("no detections file given (--detections or config `detections`)".into()));
        }
        if self.participants == Some(0) {
            return Err(CliError::Usage("participants must be at least 1".into()));
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0) {
                return Err(CliError::Usage(format!("duration must be positive, got {d}")));
            }
        }
        if !self.llm.temperature.is_finite() || self.llm.temperature < 0.0 {
            return Err(CliError::Usage("llm.temperature must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            analytics: self.analytics.clone(),
            participants: self.participants,
            prompts: PromptBuilder {
                language: self.language,
                temperature: self.llm.temperature,
                max_tokens: self.llm.max_tokens,
            },
        }
    }
}
