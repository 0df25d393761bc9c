use std::fmt::Write;

use super::{LlmMode, ReportBundle};
use crate::analytics::{DenominatorMode, Direction, Stage};
use crate::llm::prompts::Language;

struct Strings {
    title: &'static str,
    session: &'static str,
    course: &'static str,
    teacher: &'static str,
    date: &'static str,
    duration: &'static str,
    minutes_unit: &'static str,
    behavior_heading: &'static str,
    participants: &'static str,
    avg_up: &'static str,
    avg_down: &'static str,
    ratio: &'static str,
    chart_alt: &'static str,
    stages_heading: &'static str,
    stages_cols: &'static str,
    points_heading: &'static str,
    points_cols: &'static str,
    no_points: &'static str,
    eval_heading: &'static str,
    eval_cols: &'static str,
    eval_summary: &'static str,
    opt_heading: &'static str,
    opt_cols: &'static str,
    summary_row: &'static str,
    skipped: &'static str,
    parse_banner: &'static str,
    raw_output: &'static str,
    appendix: &'static str,
    param_cols: &'static str,
    notes: &'static str,
    increase: &'static str,
    decrease: &'static str,
}

const EN: Strings = Strings {
    title: "Classroom evaluation report",
    session: "Session",
    course: "Course",
    teacher: "Teacher",
    date: "Date",
    duration: "Duration",
    minutes_unit: "min",
    behavior_heading: "Student behavior statistics",
    participants: "Participants",
    avg_up: "Average heads-up per minute",
    avg_down: "Average heads-down per minute",
    ratio: "Heads-up / heads-down ratio",
    chart_alt: "Head-up trend",
    stages_heading: "Timeline stages",
    stages_cols: "| Minutes | Stage | Mean head-up rate |",
    points_heading: "Change points",
    points_cols: "| Minute | Direction | Magnitude |",
    no_points: "No significant change points.",
    eval_heading: "Class evaluation report",
    eval_cols: "| Evaluation dimension | Conclusion | Analysis |",
    eval_summary: "Summary",
    opt_heading: "Teaching optimization recommendations",
    opt_cols: "| Student behavior | Teaching content and expression | Analysis |",
    summary_row: "Summary",
    skipped: "_Skipped: LLM stages were not run for this report._",
    parse_banner: "> **⚠ Parse failure:** the model output could not be read as a structured report",
    raw_output: "Raw model output:",
    appendix: "Appendix: analysis parameters",
    param_cols: "| Parameter | Value |",
    notes: "Notes",
    increase: "increase",
    decrease: "decrease",
};

const ZH: Strings = Strings {
    title: "课堂综合评价报告",
    session: "课次",
    course: "课程",
    teacher: "教师",
    date: "日期",
    duration: "时长",
    minutes_unit: "分钟",
    behavior_heading: "学生课堂行为统计",
    participants: "参与人数",
    avg_up: "平均每分钟抬头人数",
    avg_down: "平均每分钟低头人数",
    ratio: "抬头/低头比",
    chart_alt: "抬头率趋势",
    stages_heading: "时间轴阶段",
    stages_cols: "| 时间段（分钟） | 阶段 | 平均抬头率 |",
    points_heading: "显著变化点",
    points_cols: "| 分钟 | 方向 | 幅度 |",
    no_points: "未检测到显著变化点。",
    eval_heading: "课堂评价报告",
    eval_cols: "| 评价维度 | 结论 | 分析 |",
    eval_summary: "概要",
    opt_heading: "教学优化建议报告",
    opt_cols: "| 学生行为 | 教学内容与表达形式 | 分析 |",
    summary_row: "总结",
    skipped: "_已跳过：本报告未运行大语言模型环节。_",
    parse_banner: "> **⚠ 解析失败：** 模型输出无法解析为结构化报告",
    raw_output: "模型原始输出：",
    appendix: "附录：分析参数",
    param_cols: "| 参数 | 取值 |",
    notes: "备注",
    increase: "上升",
    decrease: "下降",
};

fn strings(lang: Language) -> &'static Strings {
    match lang {
        Language::En => &EN,
        Language::Zh => &ZH,
    }
}

fn stage_name(stage: Stage, lang: Language) -> &'static str {
    match (stage, lang) {
        (Stage::High, Language::En) => "High",
        (Stage::Medium, Language::En) => "Medium",
        (Stage::Low, Language::En) => "Low",
        (Stage::High, Language::Zh) => "高",
        (Stage::Medium, Language::Zh) => "中",
        (Stage::Low, Language::Zh) => "低",
    }
}

/// Table-cell safe text: pipes escaped, newlines as `<br>`.
fn cell(text: &str) -> String {
    let t = text.trim().replace('\r', "").replace('|', "\\|");
    t.split('\n').collect::<Vec<_>>().join("<br>")
}

fn fenced(out: &mut String, text: &str) {
    let longest = text
        .split(|c| c != '`')
        .map(str::len)
        .max()
        .unwrap_or(0);
    let fence = "`".repeat(longest.max(2) + 1);
    let _ = writeln!(out, "{fence}text\n{}\n{fence}\n", text.trim_end());
}

pub fn render_markdown(bundle: &ReportBundle) -> String {
    let lang = bundle.config.report_language;
    let s = strings(lang);
    let mut out = String::new();
    let info = &bundle.session;
    let heading = if info.course.is_empty() {
        &info.session_id
    } else {
        &info.course
    };
    let _ = writeln!(out, "# {}: {}\n", s.title, heading);
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} |\n|---|---|---|---|---|\n| {} | {} | {} | {} | {} {} |\n",
        s.session,
        s.course,
        s.teacher,
        s.date,
        s.duration,
        cell(&info.session_id),
        cell(&info.course),
        cell(&info.teacher),
        cell(&info.date),
        bundle.stats.duration_min,
        s.minutes_unit
    );

    let st = &bundle.stats;
    let _ = writeln!(out, "## {}\n", s.behavior_heading);
    let _ = writeln!(out, "- {}: {}", s.participants, st.participants);
    let _ = writeln!(out, "- {}: {:.2}", s.avg_up, st.avg_up_per_min);
    let _ = writeln!(out, "- {}: {:.2}", s.avg_down, st.avg_down_per_min);
    let _ = writeln!(out, "- {}: {}\n", s.ratio, st.ratio_display());
    let _ = writeln!(out, "![{}](trend.svg)\n", s.chart_alt);

    let _ = writeln!(out, "### {}\n", s.stages_heading);
    let _ = writeln!(out, "{}\n|---|---|---|", s.stages_cols);
    for iv in &bundle.stages {
        let _ = writeln!(
            out,
            "| {}–{} | {} | {:.3} |",
            iv.start_min,
            iv.end_min,
            stage_name(iv.stage, lang),
            iv.mean_rate
        );
    }
    out.push('\n');

    let _ = writeln!(out, "### {}\n", s.points_heading);
    if bundle.change_points.is_empty() {
        let _ = writeln!(out, "{}\n", s.no_points);
    } else {
        let _ = writeln!(out, "{}\n|---|---|---|", s.points_cols);
        for p in &bundle.change_points {
            let dir = match p.direction {
                Direction::Increase => s.increase,
                Direction::Decrease => s.decrease,
            };
            let _ = writeln!(out, "| {} | {} | {:.3} |", p.minute, dir, p.magnitude);
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## {}\n", s.eval_heading);
    match &bundle.evaluation {
        None => {
            let _ = writeln!(out, "{}\n", s.skipped);
        }
        Some(e) if e.parse_failure.is_some() => {
            let _ = writeln!(
                out,
                "{} ({}).\n",
                s.parse_banner,
                e.parse_failure.as_deref().unwrap_or_default()
            );
            let _ = writeln!(out, "{}\n", s.raw_output);
            fenced(&mut out, &e.summary);
        }
        Some(e) => {
            let _ = writeln!(out, "{}\n|---|---|---|", s.eval_cols);
            for (i, d) in e.dimensions.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "| {}. {} | {} | {} |",
                    i + 1,
                    d.name.title(lang),
                    cell(&d.conclusion),
                    cell(&d.analysis)
                );
            }
            out.push('\n');
            if !e.summary.trim().is_empty() {
                let _ = writeln!(out, "**{}:** {}\n", s.eval_summary, cell(&e.summary));
            }
        }
    }

    let _ = writeln!(out, "## {}\n", s.opt_heading);
    match &bundle.optimization {
        None => {
            let _ = writeln!(out, "{}\n", s.skipped);
        }
        Some(o) => {
            if let Some(reason) = &o.parse_failure {
                let _ = writeln!(out, "{} ({reason}).\n", s.parse_banner);
            }
            let _ = writeln!(out, "{}\n|---|---|---|", s.opt_cols);
            for e in &o.entries {
                let behavior = if e.behavior.trim() == e.interval_label.trim() {
                    format!("**{}**", cell(&e.interval_label))
                } else {
                    format!("**{}**<br>{}", cell(&e.interval_label), cell(&e.behavior))
                };
                let _ = writeln!(
                    out,
                    "| {} | {} | {} |",
                    behavior,
                    cell(&e.content_and_expression),
                    cell(&e.analysis)
                );
            }
            if o.parse_failure.is_some() {
                let _ = writeln!(out, "| **{}** | | |\n", s.summary_row);
                let _ = writeln!(out, "{}\n", s.raw_output);
                fenced(&mut out, &o.summary);
            } else {
                let _ = writeln!(out, "| **{}** | {} | |\n", s.summary_row, cell(&o.summary));
            }
        }
    }

    let a = &bundle.config.analytics;
    let _ = writeln!(out, "## {}\n", s.appendix);
    let _ = writeln!(out, "{}\n|---|---|", s.param_cols);
    let mode = match a.denominator_mode {
        DenominatorMode::UpPlusDown => "up_plus_down",
        DenominatorMode::Participants => "participants",
    };
    let llm = match bundle.config.llm {
        LlmMode::Skipped => "skipped",
        LlmMode::Mock => "mock",
        LlmMode::Http => "http",
    };
    for (k, v) in [
        ("denominator_mode", mode.to_string()),
        ("high_threshold", format!("{}", a.high_threshold)),
        ("low_threshold", format!("{}", a.low_threshold)),
        ("window_w", format!("{}", a.window_w)),
        ("delta", format!("{}", a.delta)),
        ("contrast_k", format!("{}", a.contrast_k)),
        ("llm", llm.to_string()),
    ] {
        let _ = writeln!(out, "| {k} | {v} |");
    }
    out.push('\n');
    if !bundle.notes.is_empty() {
        let _ = writeln!(out, "### {}\n", s.notes);
        for n in &bundle.notes {
            let _ = writeln!(out, "- {}", cell(n));
        }
        out.push('\n');
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}
