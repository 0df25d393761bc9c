//! Report schemas and tolerant parsing of model output.
//!
//! Models wrap JSON in prose, code fences or reasoning blocks. Parsing takes
//! the first top-level JSON object and validates it; anything that fails
//! becomes a degraded report carrying the raw text and the failure reason,
//! so the pipeline always completes with a schema-valid value.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::prompts::{IntervalLabel, LabelKind, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    ContentSummary,
    IdeologicalPoliticalIntegration,
    TeachingLogic,
    TheoryPracticeCombination,
    SubjectCharacteristics,
}

impl Dimension {
    /// Fixed report order.
    pub const ALL: [Dimension; 5] = [
        Dimension::ContentSummary,
        Dimension::IdeologicalPoliticalIntegration,
        Dimension::TeachingLogic,
        Dimension::TheoryPracticeCombination,
        Dimension::SubjectCharacteristics,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Dimension::ContentSummary => "content_summary",
            Dimension::IdeologicalPoliticalIntegration => "ideological_political_integration",
            Dimension::TeachingLogic => "teaching_logic",
            Dimension::TheoryPracticeCombination => "theory_practice_combination",
            Dimension::SubjectCharacteristics => "subject_characteristics",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.key() == key.trim())
    }

    pub fn title(self, lang: Language) -> &'static str {
        match (self, lang) {
            (Dimension::ContentSummary, Language::En) => "Main teaching content",
            (Dimension::IdeologicalPoliticalIntegration, Language::En) => {
                "Ideological-political integration"
            }
            (Dimension::TeachingLogic, Language::En) => "Teaching logic",
            (Dimension::TheoryPracticeCombination, Language::En) => "Theory-practice combination",
            (Dimension::SubjectCharacteristics, Language::En) => "Subject characteristics",
            (Dimension::ContentSummary, Language::Zh) => "主要教学内容",
            (Dimension::IdeologicalPoliticalIntegration, Language::Zh) => "课程思政融入",
            (Dimension::TeachingLogic, Language::Zh) => "教学逻辑",
            (Dimension::TheoryPracticeCombination, Language::Zh) => "理论联系实际",
            (Dimension::SubjectCharacteristics, Language::Zh) => "学科特色",
        }
    }

    pub fn question(self, lang: Language) -> &'static str {
        match (self, lang) {
            (Dimension::ContentSummary, Language::En) => {
                "What were the main topics taught in this class?"
            }
            (Dimension::IdeologicalPoliticalIntegration, Language::En) => {
                "Does the class weave ideological-political (values) education into the subject matter?"
            }
            (Dimension::TeachingLogic, Language::En) => {
                "Does the lesson proceed in a coherent and rigorous order, with clear transitions?"
            }
            (Dimension::TheoryPracticeCombination, Language::En) => {
                "Does the teacher connect theory with practical cases when explaining?"
            }
            (Dimension::SubjectCharacteristics, Language::En) => {
                "Are the characteristics of the discipline clearly conveyed?"
            }
            (Dimension::ContentSummary, Language::Zh) => "本节课主要讲授了哪些内容？",
            (Dimension::IdeologicalPoliticalIntegration, Language::Zh) => {
                "本节课是否将思想政治教育融入专业内容？"
            }
            (Dimension::TeachingLogic, Language::Zh) => "本节课的教学逻辑是否连贯、严谨，过渡是否自然？",
            (Dimension::TheoryPracticeCombination, Language::Zh) => {
                "讲解过程中是否做到理论与实践案例相结合？"
            }
            (Dimension::SubjectCharacteristics, Language::Zh) => "本节课的学科特色是否鲜明？",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDimension {
    pub name: Dimension,
    pub conclusion: String,
    pub analysis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub session_id: String,
    pub summary: String,
    /// Always the five dimensions, in [`Dimension::ALL`] order.
    pub dimensions: Vec<EvaluationDimension>,
    /// Set when the model output could not be parsed; `summary` then holds the raw text.
    pub parse_failure: Option<String>,
}

impl EvaluationReport {
    pub fn degraded(session_id: &str, raw: &str, reason: impl Into<String>) -> Self {
        Self {
            session_id: session_id.to_string(),
            summary: raw.to_string(),
            dimensions: Dimension::ALL
                .iter()
                .map(|&name| EvaluationDimension {
                    name,
                    conclusion: String::new(),
                    analysis: String::new(),
                })
                .collect(),
            parse_failure: Some(reason.into()),
        }
    }

    pub fn is_schema_valid(&self) -> bool {
        self.dimensions.len() == 5
            && self
                .dimensions
                .iter()
                .zip(Dimension::ALL)
                .all(|(d, expected)| d.name == expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationEntry {
    pub interval_label: String,
    pub behavior: String,
    pub content_and_expression: String,
    pub analysis: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub session_id: String,
    pub entries: Vec<OptimizationEntry>,
    pub summary: String,
    pub parse_failure: Option<String>,
}

impl OptimizationReport {
    /// Fallback with one bare entry per stage so the report still covers the timeline.
    pub fn degraded(
        session_id: &str,
        raw: &str,
        labels: &[IntervalLabel],
        reason: impl Into<String>,
    ) -> Self {
        Self {
            session_id: session_id.to_string(),
            entries: labels
                .iter()
                .filter(|l| l.kind == LabelKind::Stage)
                .map(|l| OptimizationEntry {
                    interval_label: l.label.clone(),
                    behavior: l.label.clone(),
                    content_and_expression: String::new(),
                    analysis: String::new(),
                })
                .collect(),
            summary: raw.to_string(),
            parse_failure: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportSchema {
    Evaluation,
    /// Optimization reports must refer to these timeline labels.
    Optimization { labels: Vec<IntervalLabel> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Evaluation(EvaluationReport),
    Optimization(OptimizationReport),
}

fn strip_reasoning(raw: &str) -> &str {
    match raw.rfind("</think>") {
        Some(pos) => &raw[pos + "</think>".len()..],
        None => raw,
    }
}

/// First `{ ... }` in `raw` that parses as a JSON object.
pub fn extract_json_object(raw: &str) -> Option<Map<String, Value>> {
    let text = strip_reasoning(raw);
    for (i, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

fn string_field(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("`{path}{key}` is not a string")),
        None => Err(format!("missing key `{path}{key}`")),
    }
}

fn optional_string(obj: &Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("`{key}` is not a string")),
    }
}

fn evaluation_from(obj: &Map<String, Value>, session_id: &str) -> Result<EvaluationReport, String> {
    let summary = optional_string(obj, "summary")?;
    let items = match obj.get("dimensions") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err("`dimensions` is not an array".into()),
        None => return Err("missing key `dimensions`".into()),
    };
    let mut found: Vec<Option<EvaluationDimension>> = vec![None; Dimension::ALL.len()];
    for (i, item) in items.iter().enumerate() {
        let Value::Object(d) = item else {
            return Err(format!("`dimensions[{i}]` is not an object"));
        };
        let path = format!("dimensions[{i}].");
        let name = string_field(d, "name", &path)?;
        let Some(dim) = Dimension::from_key(&name) else {
            continue;
        };
        let slot = Dimension::ALL.iter().position(|&x| x == dim).expect("known");
        if found[slot].is_none() {
            found[slot] = Some(EvaluationDimension {
                name: dim,
                conclusion: string_field(d, "conclusion", &path)?,
                analysis: string_field(d, "analysis", &path)?,
            });
        }
    }
    let mut dimensions = Vec::with_capacity(5);
    for (slot, dim) in found.into_iter().zip(Dimension::ALL) {
        match slot {
            Some(d) => dimensions.push(d),
            None => return Err(format!("missing dimension `{}`", dim.key())),
        }
    }
    Ok(EvaluationReport {
        session_id: session_id.to_string(),
        summary,
        dimensions,
        parse_failure: None,
    })
}

fn normalize_label(s: &str) -> String {
    s.trim()
        .replace(['-', '—', '~'], "–")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn optimization_from(
    obj: &Map<String, Value>,
    session_id: &str,
    labels: &[IntervalLabel],
) -> Result<OptimizationReport, String> {
    let summary = optional_string(obj, "summary")?;
    let items = match obj.get("entries") {
        Some(Value::Array(items)) => items,
        Some(_) => return Err("`entries` is not an array".into()),
        None => return Err("missing key `entries`".into()),
    };
    let mut keyed = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let Value::Object(e) = item else {
            return Err(format!("`entries[{i}]` is not an object"));
        };
        let path = format!("entries[{i}].");
        let label = string_field(e, "interval_label", &path)?;
        let wanted = normalize_label(&label);
        let Some(known) = labels.iter().find(|l| normalize_label(&l.label) == wanted) else {
            return Err(format!("entries[{i}] refers to unknown interval `{label}`"));
        };
        keyed.push((
            (known.start_min, known.kind),
            OptimizationEntry {
                interval_label: known.label.clone(),
                behavior: string_field(e, "behavior", &path)?,
                content_and_expression: string_field(e, "content_and_expression", &path)?,
                analysis: string_field(e, "analysis", &path)?,
            },
        ));
    }
    if keyed.is_empty() && labels.iter().any(|l| l.kind == LabelKind::Stage) {
        return Err("`entries` is empty".into());
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(OptimizationReport {
        session_id: session_id.to_string(),
        entries: keyed.into_iter().map(|(_, e)| e).collect(),
        summary,
        parse_failure: None,
    })
}

pub fn parse_evaluation(raw: &str, session_id: &str) -> EvaluationReport {
    let Some(obj) = extract_json_object(raw) else {
        return EvaluationReport::degraded(session_id, raw, "no JSON object found in model output");
    };
    evaluation_from(&obj, session_id)
        .unwrap_or_else(|reason| EvaluationReport::degraded(session_id, raw, reason))
}

pub fn parse_optimization(raw: &str, session_id: &str, labels: &[IntervalLabel]) -> OptimizationReport {
    let Some(obj) = extract_json_object(raw) else {
        return OptimizationReport::degraded(
            session_id,
            raw,
            labels,
            "no JSON object found in model output",
        );
    };
    optimization_from(&obj, session_id, labels)
        .unwrap_or_else(|reason| OptimizationReport::degraded(session_id, raw, labels, reason))
}

/// Parses `raw` against `schema`; never fails.
pub fn parse_report_json(raw: &str, schema: &ReportSchema, session_id: &str) -> ReportValue {
    match schema {
        ReportSchema::Evaluation => ReportValue::Evaluation(parse_evaluation(raw, session_id)),
        ReportSchema::Optimization { labels } => {
            ReportValue::Optimization(parse_optimization(raw, session_id, labels))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn full_eval() -> Value {
        json!({
            "summary": "s",
            "dimensions": Dimension::ALL.iter().rev().map(|d| json!({
                "name": d.key(), "conclusion": format!("c-{}", d.key()), "analysis": "a"
            })).collect::<Vec<_>>()
        })
    }

    #[test]
    fn fenced_json_parses_and_orders() {
        let raw = format!("Here you go:\n```json\n{}\n```\nthanks", full_eval());
        let r = parse_evaluation(&raw, "S");
        assert!(r.parse_failure.is_none(), "{:?}", r.parse_failure);
        assert!(r.is_schema_valid());
        assert_eq!(r.dimensions[2].conclusion, "c-teaching_logic");
        assert_eq!(r.summary, "s");
    }

    #[test]
    fn prose_degrades() {
        let r = parse_evaluation("The class was fine overall.", "S");
        assert!(r.parse_failure.is_some());
        assert_eq!(r.summary, "The class was fine overall.");
        assert!(r.is_schema_valid());
    }

    #[test]
    fn missing_dimension_named() {
        let mut v = full_eval();
        v["dimensions"]
            .as_array_mut()
            .unwrap()
            .retain(|d| d["name"] != "teaching_logic");
        let r = parse_evaluation(&v.to_string(), "S");
        assert!(r.parse_failure.as_deref().unwrap().contains("teaching_logic"));
    }

    #[test]
    fn reasoning_block_skipped() {
        let raw = format!("<think>maybe {{\"x\": 1}} works</think>{}", full_eval());
        assert!(parse_evaluation(&raw, "S").parse_failure.is_none());
    }

    fn labels() -> Vec<IntervalLabel> {
        vec![
            IntervalLabel { label: "0–11 min, low head-up rate".into(), start_min: 0, kind: LabelKind::Stage },
            IntervalLabel { label: "minute 11, head-up rate increase".into(), start_min: 11, kind: LabelKind::ChangePoint },
            IntervalLabel { label: "11–19 min, high head-up rate".into(), start_min: 11, kind: LabelKind::Stage },
        ]
    }

    fn entry(label: &str) -> Value {
        json!({"interval_label": label, "behavior": "b", "content_and_expression": "c", "analysis": "a"})
    }

    #[test]
    fn optimization_sorted_by_interval() {
        let raw = json!({
            "entries": [entry("minute 11, head-up rate increase"), entry("11-19 min, high head-up rate"), entry("0–11 min, low head-up rate")],
            "summary": "sum"
        })
        .to_string();
        let r = parse_optimization(&raw, "S", &labels());
        assert!(r.parse_failure.is_none(), "{:?}", r.parse_failure);
        let order: Vec<_> = r.entries.iter().map(|e| e.interval_label.as_str()).collect();
        assert_eq!(
            order,
            vec!["0–11 min, low head-up rate", "11–19 min, high head-up rate", "minute 11, head-up rate increase"]
        );
    }

    #[test]
    fn optimization_unknown_label_degrades() {
        let raw = json!({"entries": [entry("5–9 min")], "summary": ""}).to_string();
        let r = parse_optimization(&raw, "S", &labels());
        assert!(r.parse_failure.as_deref().unwrap().contains("5–9 min"));
        assert_eq!(r.entries.len(), 2);
    }

    #[test]
    fn optimization_prose_degrades_with_stage_entries() {
        let r = parse_optimization("no json here", "S", &labels());
        assert!(r.parse_failure.is_some());
        assert_eq!(r.entries.len(), 2);
        assert_eq!(r.summary, "no json here");
    }

    proptest! {
        #[test]
        fn never_panics_and_stays_schema_valid(raw in ".{0,300}") {
            let e = parse_evaluation(&raw, "S");
            prop_assert!(e.is_schema_valid());
            let o = parse_optimization(&raw, "S", &labels());
            prop_assert!(!o.entries.is_empty());
        }

        #[test]
        fn never_panics_on_brace_soup(raw in "[{}\\[\\]\":,a-z0-9 ]{0,200}") {
            let e = parse_evaluation(&raw, "S");
            prop_assert!(e.is_schema_valid());
        }
    }
}
