use super::prompts::{interval_labels, PromptBuilder};
use super::report::{parse_evaluation, parse_optimization, EvaluationReport, OptimizationReport};
use super::{complete, LlmBackend, LlmError};
use crate::analytics::{AnalyticsConfig, SessionStats};
use crate::corpus::{ContrastPair, LabeledCorpus};

/// Summarize, then evaluate on the five dimensions.
pub fn evaluate_session(
    session_id: &str,
    full_corpus: &str,
    backend: &dyn LlmBackend,
    prompts: &PromptBuilder,
) -> Result<EvaluationReport, LlmError> {
    let summary_req = prompts.summary_prompt(full_corpus)?;
    let summary = complete(&summary_req, backend)?;
    // A blank summary should not abort the evaluation.
    let summary = if summary.trim().is_empty() {
        "(empty summary)".to_string()
    } else {
        summary
    };
    let eval_req = prompts.evaluation_prompt(&summary, full_corpus)?;
    let raw = complete(&eval_req, backend)?;
    Ok(parse_evaluation(&raw, session_id))
}

pub fn generate_optimization(
    session_id: &str,
    labeled: &[LabeledCorpus],
    contrasts: &[ContrastPair],
    stats: &SessionStats,
    cfg: &AnalyticsConfig,
    backend: &dyn LlmBackend,
    prompts: &PromptBuilder,
) -> Result<OptimizationReport, LlmError> {
    let req = prompts.optimization_prompt(labeled, contrasts, stats, cfg)?;
    let all_text: String = labeled.iter().map(|l| l.text.as_str()).collect();
    let lang = prompts.language.resolve(&all_text);
    let labels = interval_labels(labeled, contrasts, lang);
    let raw = complete(&req, backend)?;
    Ok(parse_optimization(&raw, session_id, &labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::Stage;
    use crate::llm::{ChatRequest, MockLlm};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl LlmBackend for Counting {
        fn name(&self) -> String {
            "counting".into()
        }
        fn send(&self, _r: &ChatRequest) -> Result<String, LlmError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(String::new())
        }
    }

    fn stats() -> SessionStats {
        SessionStats {
            participants: 30,
            avg_up_per_min: 15.0,
            avg_down_per_min: 15.0,
            up_down_ratio: Some(1.0),
            duration_min: 40,
        }
    }

    #[test]
    fn empty_corpus_fails_before_backend() {
        let b = Counting(AtomicUsize::new(0));
        assert!(evaluate_session("S", " ", &b, &PromptBuilder::default()).is_err());
        assert_eq!(b.0.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn placeholder_mock_completes_both_reports() {
        let mock = MockLlm::placeholder();
        let e = evaluate_session("S", "lecture text", &mock, &PromptBuilder::default()).unwrap();
        assert!(e.parse_failure.is_none());
        assert!(e.is_schema_valid());

        let labeled = [LabeledCorpus {
            start_min: 0,
            end_min: 40,
            stage: Stage::Medium,
            text: "all".into(),
            mean_rate: 0.55,
        }];
        let o = generate_optimization(
            "S",
            &labeled,
            &[],
            &stats(),
            &AnalyticsConfig::default(),
            &mock,
            &PromptBuilder::default(),
        )
        .unwrap();
        assert!(o.parse_failure.is_none());
        assert_eq!(o.entries.len(), 1);
    }

    #[test]
    fn prose_mock_yields_flagged_reports() {
        let mock = MockLlm::fixed("I think the class went well.");
        let e = evaluate_session("S", "lecture text", &mock, &PromptBuilder::default()).unwrap();
        assert!(e.parse_failure.is_some());
        assert!(e.is_schema_valid());
    }
}
