//! End-to-end session processing shared by the CLI, tests and the demo.

use serde_json::Value;
use thiserror::Error;

use crate::analytics::{
    detect_change_points, estimate_participants, interpolate_missing, minute_series,
    recognition_rates, segment_stages, session_stats, AnalyticsConfig, AnalyticsError, ChangePoint,
    DenominatorMode, MinuteRate, SessionStats, StageInterval,
};
use crate::canon::to_canonical_value;
use crate::corpus::{
    bucket_by_minute, extract_contrast, join_minutes, label_by_stage, ContrastPair, CorpusError,
    LabeledCorpus, MinuteCorpus,
};
use crate::ingest::{IngestError, SessionBundle};
use crate::llm::prompts::{Language, PromptBuilder};
use crate::llm::report::{EvaluationReport, OptimizationReport};
use crate::llm::{evaluate_session, generate_optimization, LlmBackend, LlmError};
use crate::render::{
    render_json, render_markdown, render_trend_svg, ConfigEcho, LlmMode, RenderError,
    ReportBundle, SessionInfo,
};
use crate::store::{RecordKind, StoreError, TeachingRecord};

/// Any failure along the pipeline, tagged with the module that raised it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[ingest] {0}")]
    Ingest(#[from] IngestError),
    #[error("[behavior-analytics] {0}")]
    Analytics(#[from] AnalyticsError),
    #[error("[corpus-mapping] {0}")]
    Corpus(#[from] CorpusError),
    #[error("[llm-eval] {0}")]
    Llm(#[from] LlmError),
    #[error("[store] {0}")]
    Store(#[from] StoreError),
    #[error("[report-render] {0}")]
    Render(#[from] RenderError),
}

impl PipelineError {
    pub fn module(&self) -> &'static str {
        match self {
            PipelineError::Ingest(_) => "ingest",
            PipelineError::Analytics(_) => "behavior-analytics",
            PipelineError::Corpus(_) => "corpus-mapping",
            PipelineError::Llm(_) => "llm-eval",
            PipelineError::Store(_) => "store",
            PipelineError::Render(_) => "report-render",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOptions {
    pub analytics: AnalyticsConfig,
    /// Class size; estimated from the busiest frame when absent.
    pub participants: Option<u32>,
    pub prompts: PromptBuilder,
}

/// Everything computed before any model is consulted.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub participants: u32,
    pub series: Vec<MinuteRate>,
    pub stats: SessionStats,
    pub stages: Vec<StageInterval>,
    pub change_points: Vec<ChangePoint>,
    pub minutes: Vec<MinuteCorpus>,
    pub labeled: Vec<LabeledCorpus>,
    pub contrasts: Vec<ContrastPair>,
    pub notes: Vec<String>,
}

impl Analysis {
    pub fn full_corpus(&self) -> String {
        join_minutes(&self.minutes, 0..self.minutes.len())
    }

    pub fn language(&self, prompts: &PromptBuilder) -> Language {
        prompts.language.resolve(&self.full_corpus())
    }

    /// Stage corpora, contrast corpora and stats as store records.
    pub fn records(&self, session_id: &str, created_at: &str) -> Vec<TeachingRecord> {
        let rec = |kind, payload: Value| TeachingRecord::new(session_id, kind, payload, created_at);
        let mut out: Vec<TeachingRecord> = self
            .labeled
            .iter()
            .map(|l| rec(RecordKind::StageCorpus, to_canonical_value(l)))
            .collect();
        out.extend(
            self.contrasts
                .iter()
                .map(|c| rec(RecordKind::ContrastCorpus, to_canonical_value(c))),
        );
        out.push(rec(RecordKind::Stats, to_canonical_value(&self.stats)));
        out
    }
}

pub fn analyze(bundle: &SessionBundle, opts: &PipelineOptions) -> Result<Analysis, PipelineError> {
    let cfg = &opts.analytics;
    cfg.validate()?;
    let mut notes = Vec::new();

    let participants = match opts.participants {
        Some(0) => return Err(AnalyticsError::NoParticipants.into()),
        Some(p) => p,
        None => {
            let p = estimate_participants(&bundle.frames)?;
            if cfg.denominator_mode == DenominatorMode::Participants {
                notes.push(format!("participants estimated from the busiest frame: {p}"));
            }
            p
        }
    };

    let (rates, dropped) = recognition_rates(&bundle.frames, cfg.denominator_mode, participants)?;
    if rates.is_empty() {
        return Err(AnalyticsError::NoNonEmptyFrames.into());
    }
    if !dropped.is_empty() {
        notes.push(format!("{} empty frame(s) dropped", dropped.len()));
    }

    let raw = minute_series(&rates, bundle.duration_s);
    let series = interpolate_missing(&raw)?;
    let filled = series.iter().filter(|m| m.interpolated).count();
    if filled > 0 {
        notes.push(format!("{filled} minute(s) without observations were interpolated"));
    }

    let stats = session_stats(&series, participants)?;
    let stages = segment_stages(&series, cfg)?;
    let change_points = match detect_change_points(&series, cfg) {
        Ok(points) => points,
        Err(AnalyticsError::SeriesTooShort { len, window }) => {
            notes.push(format!(
                "change-point detection skipped: {len} minute(s) is shorter than 2 × window ({window})"
            ));
            Vec::new()
        }
        Err(e) => return Err(e.into()),
    };

    let minutes = bucket_by_minute(&bundle.segments, bundle.duration_s);
    let labeled = label_by_stage(&minutes, &stages)?;
    let contrasts = extract_contrast(&minutes, &change_points, cfg.contrast_k);

    Ok(Analysis {
        participants,
        series,
        stats,
        stages,
        change_points,
        minutes,
        labeled,
        contrasts,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmReports {
    pub evaluation: EvaluationReport,
    pub optimization: OptimizationReport,
}

impl LlmReports {
    pub fn records(&self, session_id: &str, created_at: &str) -> Vec<TeachingRecord> {
        [to_canonical_value(&self.evaluation), to_canonical_value(&self.optimization)]
            .into_iter()
            .map(|p| TeachingRecord::new(session_id, RecordKind::Report, p, created_at))
            .collect()
    }
}

/// Runs the evaluation and optimization chains side by side. Each result
/// goes to its own slot, so completion order never matters.
pub fn run_llm(
    session_id: &str,
    analysis: &Analysis,
    backend: &dyn LlmBackend,
    opts: &PipelineOptions,
) -> Result<LlmReports, PipelineError> {
    let corpus = analysis.full_corpus();
    let (evaluation, optimization) = std::thread::scope(|s| {
        let eval = s.spawn(|| evaluate_session(session_id, &corpus, backend, &opts.prompts));
        let optimization = generate_optimization(
            session_id,
            &analysis.labeled,
            &analysis.contrasts,
            &analysis.stats,
            &opts.analytics,
            backend,
            &opts.prompts,
        );
        let evaluation = eval.join().expect("evaluation thread panicked");
        (evaluation, optimization)
    });
    Ok(LlmReports {
        evaluation: evaluation?,
        optimization: optimization?,
    })
}

pub fn assemble(
    bundle: &SessionBundle,
    analysis: &Analysis,
    reports: Option<LlmReports>,
    opts: &PipelineOptions,
    llm: LlmMode,
) -> ReportBundle {
    let (evaluation, optimization) = match reports {
        Some(r) => (Some(r.evaluation), Some(r.optimization)),
        None => (None, None),
    };
    ReportBundle {
        session: SessionInfo {
            session_id: bundle.session_id.clone(),
            duration_s: bundle.duration_s,
            course: bundle.metadata.course.clone(),
            teacher: bundle.metadata.teacher.clone(),
            date: bundle.metadata.date.clone(),
        },
        series: analysis.series.clone(),
        stages: analysis.stages.clone(),
        change_points: analysis.change_points.clone(),
        stats: analysis.stats.clone(),
        evaluation,
        optimization,
        config: ConfigEcho {
            analytics: opts.analytics.clone(),
            report_language: analysis.language(&opts.prompts),
            llm,
        },
        notes: analysis.notes.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub markdown: String,
    pub json: String,
    pub svg: String,
}

pub fn render_all(bundle: &ReportBundle) -> Result<RenderedReport, PipelineError> {
    Ok(RenderedReport {
        svg: render_trend_svg(&bundle.series, &bundle.change_points, &bundle.stages)?,
        markdown: render_markdown(bundle),
        json: render_json(bundle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{validate_session, SessionMetadata};
    use crate::llm::MockLlm;
    use crate::synth::{generate_synthetic, SyntheticProfile};

    fn bundle(minutes: usize) -> SessionBundle {
        let p = SyntheticProfile::steps(minutes, 35, &[(0, 0.35), (minutes / 2, 0.8)], 0.0, 6, 1);
        let s = generate_synthetic(&p).unwrap();
        let d = s.duration_s();
        validate_session("s1", s.frames, s.segments, d, SessionMetadata::default()).unwrap()
    }

    #[test]
    fn analysis_finds_the_step() {
        let b = bundle(20);
        let a = analyze(&b, &PipelineOptions::default()).unwrap();
        assert_eq!(a.series.len(), 20);
        assert_eq!(a.change_points.len(), 1);
        assert_eq!(a.change_points[0].minute, 10);
        assert_eq!(a.contrasts.len(), 1);
        assert_eq!(a.participants, 35);
        assert!(a.notes.is_empty());
    }

    #[test]
    fn short_session_skips_change_points_with_note() {
        let b = bundle(3);
        let a = analyze(&b, &PipelineOptions::default()).unwrap();
        assert!(a.change_points.is_empty());
        assert!(a.notes.iter().any(|n| n.contains("skipped")));
    }

    #[test]
    fn llm_slots_are_filled_independently() {
        let b = bundle(20);
        let opts = PipelineOptions::default();
        let a = analyze(&b, &opts).unwrap();
        let r = run_llm("s1", &a, &MockLlm::placeholder(), &opts).unwrap();
        assert!(r.evaluation.is_schema_valid());
        assert!(!r.optimization.entries.is_empty());
        let rb = assemble(&b, &a, Some(r), &opts, LlmMode::Mock);
        let out = render_all(&rb).unwrap();
        assert_eq!(out, render_all(&rb).unwrap());
    }

    #[test]
    fn error_names_module() {
        let mut opts = PipelineOptions::default();
        opts.analytics.window_w = 0;
        let err = analyze(&bundle(10), &opts).unwrap_err();
        assert_eq!(err.module(), "behavior-analytics");
        assert!(err.to_string().starts_with("[behavior-analytics]"));
    }
}
