//! Prompt templates (Chinese and English) and request builders.
//!
//! Builders are pure: identical inputs give byte-identical requests, which is
//! what lets the mock backend key canned responses by request hash.

use serde::{Deserialize, Serialize};

use super::report::Dimension;
use super::{ChatMessage, ChatRequest, LlmError, Role, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use crate::analytics::{AnalyticsConfig, SessionStats, Stage};
use crate::corpus::{ContrastPair, LabeledCorpus, Polarity};

/// Prefix of the machine-readable line listing allowed `interval_label`s.
pub const LABEL_OPTIONS_PREFIX: &str = "interval_label ∈ ";

/// Marker present in every evaluation prompt's schema.
pub const EVALUATION_SCHEMA_MARKER: &str = "\"dimensions\"";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageSetting {
    /// Follow the corpus: any CJK ideograph selects Chinese.
    #[default]
    Auto,
    Zh,
    En,
}

impl LanguageSetting {
    pub fn resolve(self, corpus: &str) -> Language {
        match self {
            LanguageSetting::Zh => Language::Zh,
            LanguageSetting::En => Language::En,
            LanguageSetting::Auto => {
                if corpus.chars().any(|c| ('\u{4e00}'..='\u{9fff}').contains(&c)) {
                    Language::Zh
                } else {
                    Language::En
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Stage,
    ChangePoint,
}

/// A timeline location an optimization entry may refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalLabel {
    pub label: String,
    pub start_min: usize,
    pub kind: LabelKind,
}

pub fn stage_label(lc: &LabeledCorpus, lang: Language) -> String {
    let (s, e) = (lc.start_min, lc.end_min);
    match lang {
        Language::En => format!("{s}–{e} min, {} head-up rate", lc.stage.as_str()),
        Language::Zh => {
            let level = match lc.stage {
                Stage::High => "高",
                Stage::Medium => "中",
                Stage::Low => "低",
            };
            format!("{s}–{e} 分钟，{level}抬头率阶段")
        }
    }
}

pub fn contrast_label(cp: &ContrastPair, lang: Language) -> String {
    let t = cp.change_minute;
    match (lang, cp.polarity) {
        (Language::En, Polarity::Positive) => format!("minute {t}, head-up rate increase"),
        (Language::En, Polarity::Negative) => format!("minute {t}, head-up rate decrease"),
        (Language::Zh, Polarity::Positive) => format!("第 {t} 分钟，抬头率上升"),
        (Language::Zh, Polarity::Negative) => format!("第 {t} 分钟，抬头率下降"),
    }
}

enum Block<'a> {
    Stage(&'a LabeledCorpus),
    Contrast(&'a ContrastPair),
}

impl Block<'_> {
    fn sort_key(&self) -> (usize, u8) {
        match self {
            Block::Stage(s) => (s.start_min, 0),
            Block::Contrast(c) => (c.change_minute, 1),
        }
    }

    fn label(&self, lang: Language) -> IntervalLabel {
        match self {
            Block::Stage(s) => IntervalLabel {
                label: stage_label(s, lang),
                start_min: s.start_min,
                kind: LabelKind::Stage,
            },
            Block::Contrast(c) => IntervalLabel {
                label: contrast_label(c, lang),
                start_min: c.change_minute,
                kind: LabelKind::ChangePoint,
            },
        }
    }
}

fn timeline_blocks<'a>(labeled: &'a [LabeledCorpus], contrasts: &'a [ContrastPair]) -> Vec<Block<'a>> {
    let mut blocks: Vec<Block> = labeled
        .iter()
        .map(Block::Stage)
        .chain(contrasts.iter().map(Block::Contrast))
        .collect();
    blocks.sort_by_key(|b| b.sort_key());
    blocks
}

/// Labels in the order the optimization prompt lists them.
pub fn interval_labels(
    labeled: &[LabeledCorpus],
    contrasts: &[ContrastPair],
    lang: Language,
) -> Vec<IntervalLabel> {
    timeline_blocks(labeled, contrasts)
        .iter()
        .map(|b| b.label(lang))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBuilder {
    pub language: LanguageSetting,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        Self {
            language: LanguageSetting::Auto,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

fn or_silence(text: &str, lang: Language) -> &str {
    if !text.trim().is_empty() {
        return text;
    }
    match lang {
        Language::En => "(no speech recorded)",
        Language::Zh => "（无语音记录）",
    }
}

fn band(stage: Stage, cfg: &AnalyticsConfig) -> String {
    match stage {
        Stage::High => format!("≥ {:.2}", cfg.high_threshold),
        Stage::Medium => format!("{:.2}–{:.2}", cfg.low_threshold, cfg.high_threshold),
        Stage::Low => format!("< {:.2}", cfg.low_threshold),
    }
}

impl PromptBuilder {
    fn request(&self, system: String, user: String) -> ChatRequest {
        ChatRequest {
            messages: vec![
                ChatMessage { role: Role::System, content: system },
                ChatMessage { role: Role::User, content: user },
            ],
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }

    /// First pass: condense the teaching transcript.
    pub fn summary_prompt(&self, full_corpus: &str) -> Result<ChatRequest, LlmError> {
        if full_corpus.trim().is_empty() {
            return Err(LlmError::EmptyInput("corpus"));
        }
        let lang = self.language.resolve(full_corpus);
        let (system, user) = match lang {
            Language::En => (
                "You are a teaching-quality analyst. You read transcripts of a teacher's \
                 speech in class and summarize them faithfully, without adding facts."
                    .to_string(),
                format!(
                    "Summarize the main teaching content of the following class transcript. \
                     Keep the topics in the order they were taught and mention the concrete \
                     cases or examples the teacher used.\n\nTranscript:\n{full_corpus}"
                ),
            ),
            Language::Zh => (
                "你是一名教学质量分析员。你阅读教师课堂讲授的转写文本，并忠实地进行概括，不添加文本中没有的内容。"
                    .to_string(),
                format!(
                    "请概括以下课堂转写文本的主要教学内容。按讲授顺序列出主题，并写明教师使用的具体案例或例子。\n\n转写文本：\n{full_corpus}"
                ),
            ),
        };
        Ok(self.request(system, user))
    }

    /// Second pass: the five-dimension evaluation, answered as JSON.
    pub fn evaluation_prompt(&self, summary: &str, full_corpus: &str) -> Result<ChatRequest, LlmError> {
        if summary.trim().is_empty() {
            return Err(LlmError::EmptyInput("summary"));
        }
        if full_corpus.trim().is_empty() {
            return Err(LlmError::EmptyInput("corpus"));
        }
        let lang = self.language.resolve(full_corpus);
        let mut questions = String::new();
        for (i, d) in Dimension::ALL.iter().enumerate() {
            questions.push_str(&format!("{}. {}: {}\n", i + 1, d.key(), d.question(lang)));
        }
        let names = Dimension::ALL
            .iter()
            .map(|d| d.key())
            .collect::<Vec<_>>()
            .join("\", \"");
        let schema = format!(
            "{{\n  \"summary\": \"<string>\",\n  {EVALUATION_SCHEMA_MARKER}: [\n    {{\"name\": \"<one of: \"{names}\">\", \"conclusion\": \"<string>\", \"analysis\": \"<string>\"}}\n  ]\n}}"
        );
        let (system, user) = match lang {
            Language::En => (
                "You are an experienced university teaching supervisor. You evaluate a class \
                 from the teacher's transcript and answer strictly in JSON."
                    .to_string(),
                format!(
                    "Summary of the class:\n{summary}\n\nFull transcript:\n{full_corpus}\n\n\
                     Evaluate the class on each of these five dimensions. For each one give a \
                     short conclusion and an analysis that cites the transcript.\n{questions}\n\
                     Reply with one JSON object and nothing else, using exactly this schema \
                     (one entry per dimension, all five present):\n{schema}\n"
                ),
            ),
            Language::Zh => (
                "你是一名经验丰富的高校教学督导。你根据教师的课堂转写文本评价课堂，并且只用 JSON 回答。"
                    .to_string(),
                format!(
                    "课堂概要：\n{summary}\n\n完整转写文本：\n{full_corpus}\n\n\
                     请从以下五个维度评价本节课。每个维度给出简短结论，并结合转写文本给出分析。\n{questions}\n\
                     只回复一个 JSON 对象，不要输出其他内容，严格使用以下结构（五个维度各一项，缺一不可）：\n{schema}\n"
                ),
            ),
        };
        Ok(self.request(system, user))
    }

    /// Report pass over stage and contrast corpora.
    pub fn optimization_prompt(
        &self,
        labeled: &[LabeledCorpus],
        contrasts: &[ContrastPair],
        stats: &SessionStats,
        cfg: &AnalyticsConfig,
    ) -> Result<ChatRequest, LlmError> {
        if labeled.is_empty() {
            return Err(LlmError::EmptyInput("labeled corpus"));
        }
        let all_text: String = labeled.iter().map(|l| l.text.as_str()).collect();
        let lang = self.language.resolve(&all_text);
        let blocks = timeline_blocks(labeled, contrasts);

        let mut body = String::new();
        for (i, block) in blocks.iter().enumerate() {
            let n = i + 1;
            let label = block.label(lang).label;
            match (block, lang) {
                (Block::Stage(s), Language::En) => body.push_str(&format!(
                    "### Block {n}: {label}\nStage: {} head-up rate (mean rate {:.2}, band {})\nTranscript:\n{}\n\n",
                    s.stage.as_str(),
                    s.mean_rate,
                    band(s.stage, cfg),
                    or_silence(&s.text, lang)
                )),
                (Block::Stage(s), Language::Zh) => body.push_str(&format!(
                    "### 片段 {n}：{label}\n阶段：{}抬头率（平均抬头率 {:.2}，区间 {}）\n转写文本：\n{}\n\n",
                    match s.stage {
                        Stage::High => "高",
                        Stage::Medium => "中",
                        Stage::Low => "低",
                    },
                    s.mean_rate,
                    band(s.stage, cfg),
                    or_silence(&s.text, lang)
                )),
                (Block::Contrast(c), Language::En) => body.push_str(&format!(
                    "### Block {n}: {label}\n{} contrast: head-up rate {} of {:.2} at minute {}\nBefore (minutes {}–{}):\n{}\nAfter (minutes {}–{}):\n{}\n\n",
                    match c.polarity {
                        Polarity::Positive => "Positive",
                        Polarity::Negative => "Negative",
                    },
                    match c.polarity {
                        Polarity::Positive => "increase",
                        Polarity::Negative => "decrease",
                    },
                    c.magnitude,
                    c.change_minute,
                    c.before.0,
                    c.before.1,
                    or_silence(&c.before_text, lang),
                    c.after.0,
                    c.after.1,
                    or_silence(&c.after_text, lang)
                )),
                (Block::Contrast(c), Language::Zh) => body.push_str(&format!(
                    "### 片段 {n}：{label}\n{}对比：第 {} 分钟抬头率{} {:.2}\n变化前（第 {}–{} 分钟）：\n{}\n变化后（第 {}–{} 分钟）：\n{}\n\n",
                    match c.polarity {
                        Polarity::Positive => "正向",
                        Polarity::Negative => "负向",
                    },
                    c.change_minute,
                    match c.polarity {
                        Polarity::Positive => "上升",
                        Polarity::Negative => "下降",
                    },
                    c.magnitude,
                    c.before.0,
                    c.before.1,
                    or_silence(&c.before_text, lang),
                    c.after.0,
                    c.after.1,
                    or_silence(&c.after_text, lang)
                )),
            }
        }
        if contrasts.is_empty() {
            body.push_str(match lang {
                Language::En => "(No significant change points were detected.)\n\n",
                Language::Zh => "（未检测到显著变化点。）\n\n",
            });
        }

        let labels: Vec<String> = blocks.iter().map(|b| b.label(lang).label).collect();
        let label_line = format!(
            "{LABEL_OPTIONS_PREFIX}{}",
            serde_json::to_string(&labels).expect("labels serialize")
        );
        let schema = "{\n  \"entries\": [\n    {\"interval_label\": \"<string>\", \"behavior\": \"<string>\", \"content_and_expression\": \"<string>\", \"analysis\": \"<string>\"}\n  ],\n  \"summary\": \"<string>\"\n}";
        let ratio = stats.ratio_display();

        let (system, user) = match lang {
            Language::En => (
                "You are a teaching-improvement consultant. You relate what a teacher said to \
                 how attentive students were, and you answer strictly in JSON."
                    .to_string(),
                format!(
                    "Class statistics: {} participants; on average {:.2} students heads-up and {:.2} heads-down per minute; up/down ratio {ratio}.\n\n\
                     The class timeline is split into stages by head-up rate, and contrast windows surround the minutes where the rate changed significantly. \
                     High head-up stages indicate content and delivery that held students' attention; low stages indicate the opposite. \
                     Positive contrasts show what changed when attention rose, negative contrasts when it fell.\n\n{body}\
                     For each block, describe the student behavior, the teaching content and form of expression, and an analysis of why it worked or did not. \
                     Finish with an overall summary containing concrete suggestions.\n\
                     Reply with one JSON object and nothing else, using exactly this schema:\n{schema}\n\
                     Each interval_label must be copied exactly from this list:\n{label_line}\n",
                    stats.participants, stats.avg_up_per_min, stats.avg_down_per_min
                ),
            ),
            Language::Zh => (
                "你是一名教学改进顾问。你把教师的讲授内容与学生的专注程度对应起来分析，并且只用 JSON 回答。"
                    .to_string(),
                format!(
                    "课堂统计：参与人数 {}；平均每分钟抬头 {:.2} 人、低头 {:.2} 人；抬头/低头比 {ratio}。\n\n\
                     课堂时间轴按抬头率划分为若干阶段，并在抬头率显著变化的时间点前后截取对比片段。\
                     高抬头率阶段说明教学内容和表达形式对学生吸引力强，低抬头率阶段则相反。\
                     正向对比反映抬头率上升时的变化，负向对比反映抬头率下降时的变化。\n\n{body}\
                     请针对每个片段描述学生行为、教学内容与表达形式，并分析其效果的原因。最后给出包含具体建议的总体总结。\n\
                     只回复一个 JSON 对象，不要输出其他内容，严格使用以下结构：\n{schema}\n\
                     interval_label 必须从下列取值中原样复制：\n{label_line}\n",
                    stats.participants, stats.avg_up_per_min, stats.avg_down_per_min
                ),
            ),
        };
        Ok(self.request(system, user))
    }
}

pub fn build_summary_prompt(full_corpus: &str) -> Result<ChatRequest, LlmError> {
    PromptBuilder::default().summary_prompt(full_corpus)
}

pub fn build_evaluation_prompt(summary: &str, full_corpus: &str) -> Result<ChatRequest, LlmError> {
    PromptBuilder::default().evaluation_prompt(summary, full_corpus)
}

pub fn build_optimization_prompt(
    labeled: &[LabeledCorpus],
    contrasts: &[ContrastPair],
    stats: &SessionStats,
    cfg: &AnalyticsConfig,
) -> Result<ChatRequest, LlmError> {
    PromptBuilder::default().optimization_prompt(labeled, contrasts, stats, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> SessionStats {
        SessionStats {
            participants: 35,
            avg_up_per_min: 19.39,
            avg_down_per_min: 13.87,
            up_down_ratio: Some(19.39 / 13.87),
            duration_min: 15,
        }
    }

    fn lc(s: usize, e: usize, stage: Stage, text: &str) -> LabeledCorpus {
        LabeledCorpus { start_min: s, end_min: e, stage, text: text.into(), mean_rate: 0.5 }
    }

    fn cp(t: usize, polarity: Polarity, before: &str, after: &str) -> ContrastPair {
        ContrastPair {
            change_minute: t,
            polarity,
            before: (t.saturating_sub(3), t),
            after: (t, t + 3),
            before_text: before.into(),
            after_text: after.into(),
            magnitude: 0.3,
        }
    }

    #[test]
    fn summary_embeds_corpus_verbatim() {
        let r = build_summary_prompt("讲了广告史").unwrap();
        assert!(r.user_content().contains("讲了广告史"));
        assert_eq!(r.messages[0].role, Role::System);
        assert_eq!(r, build_summary_prompt("讲了广告史").unwrap());
        assert!(matches!(build_summary_prompt("  "), Err(LlmError::EmptyInput(_))));
    }

    #[test]
    fn evaluation_lists_all_dimensions() {
        for corpus in ["the lecture text", "讲课内容"] {
            let r = build_evaluation_prompt("summary", corpus).unwrap();
            let user = r.user_content();
            for d in Dimension::ALL {
                assert!(user.contains(d.key()), "{} missing", d.key());
            }
            assert!(user.contains("\"conclusion\""));
            assert!(user.contains("\"analysis\""));
            assert_eq!(r, build_evaluation_prompt("summary", corpus).unwrap());
        }
        assert!(build_evaluation_prompt("", "x").is_err());
        assert!(build_evaluation_prompt("x", "").is_err());
    }

    #[test]
    fn optimization_blocks_in_timeline_order() {
        let labeled = [
            lc(0, 5, Stage::Low, "stage-a"),
            lc(5, 10, Stage::High, "stage-b"),
            lc(10, 15, Stage::Medium, "stage-c"),
        ];
        let contrasts = [
            cp(5, Polarity::Positive, "pos-before", "pos-after"),
            cp(10, Polarity::Negative, "neg-before", "neg-after"),
        ];
        let cfg = AnalyticsConfig::default();
        let r = build_optimization_prompt(&labeled, &contrasts, &stats(), &cfg).unwrap();
        let user = r.user_content();
        assert_eq!(user.matches("### Block ").count(), 5);
        let order: Vec<usize> = ["stage-a", "stage-b", "pos-before", "stage-c", "neg-before"]
            .iter()
            .map(|t| user.find(t).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
        assert!(user.contains("head-up rate increase of 0.30"));
        assert!(user.contains("head-up rate decrease of 0.30"));
        assert_eq!(r, build_optimization_prompt(&labeled, &contrasts, &stats(), &cfg).unwrap());

        let labels = interval_labels(&labeled, &contrasts, Language::En);
        let line = user.lines().find(|l| l.starts_with(LABEL_OPTIONS_PREFIX)).unwrap();
        let listed: Vec<String> =
            serde_json::from_str(&line[LABEL_OPTIONS_PREFIX.len()..]).unwrap();
        assert_eq!(listed, labels.iter().map(|l| l.label.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn optimization_without_contrasts() {
        let cfg = AnalyticsConfig::default();
        let r = build_optimization_prompt(&[lc(0, 40, Stage::Medium, "all")], &[], &stats(), &cfg).unwrap();
        assert!(r.user_content().contains("No significant change points"));
        assert!(build_optimization_prompt(&[], &[], &stats(), &cfg).is_err());
    }

    #[test]
    fn language_follows_corpus() {
        assert_eq!(LanguageSetting::Auto.resolve("广告"), Language::Zh);
        assert_eq!(LanguageSetting::Auto.resolve("ads"), Language::En);
        assert_eq!(LanguageSetting::En.resolve("广告"), Language::En);
        let zh = build_summary_prompt("广告").unwrap();
        assert!(zh.messages[0].content.contains("教学质量"));
    }
}
