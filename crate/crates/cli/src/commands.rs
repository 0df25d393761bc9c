use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use lecturelens_core::canon::to_canonical_pretty;
use lecturelens_core::ingest::{
    parse_detections, parse_transcript, transcribe, validate_session, HttpAsr, IngestError,
    ReplayAsr, TranscriptSegment,
};
use lecturelens_core::llm::{HttpLlm, LlmBackend, MockLlm, LLM_API_KEY_ENV};
use lecturelens_core::metrics::{
    mean_average_precision, parse_ground_truth, parse_predictions, ApVariant,
};
use lecturelens_core::pipeline::{analyze, assemble, render_all, run_llm, RenderedReport};
use lecturelens_core::render::{parse_json, LlmMode};
use lecturelens_core::store::{persist, StoreHandle};
use lecturelens_core::synth::{generate_synthetic, SyntheticProfile};

use crate::args::{AnalyzeArgs, MetricsArgs, ReportArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::error::CliError;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn ingest_failure(path: &Path, e: IngestError) -> CliError {
    match e {
        IngestError::Io(source) => CliError::io(path, source),
        other => CliError::failed("ingest", format!("{}: {other}", path.display())),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn require_exists(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ))
    }
}

fn check_session_id(id: &str) -> Result<(), CliError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "session id `{id}` must be non-empty and use only letters, digits, '-', '_' or '.'"
        )))
    }
}

enum Backend {
    Skip,
    Mock(PathBuf),
    Http(String),
}

fn choose_backend(cfg: &RunConfig) -> Result<Backend, CliError> {
    if cfg.skip_llm {
        return Ok(Backend::Skip);
    }
    if let Some(dir) = &cfg.llm.mock_dir {
        require_exists(dir)?;
        return Ok(Backend::Mock(dir.clone()));
    }
    match &cfg.llm.endpoint {
        Some(url) => Ok(Backend::Http(url.clone())),
        None => Err(CliError::Usage(
            "no LLM backend: pass --mock-llm <dir>, set llm.endpoint or LECTURELENS_LLM_ENDPOINT, or use --skip-llm".into(),
        )),
    }
}

fn load_transcript(cfg: &RunConfig, session_id: &str) -> Result<Option<Vec<TranscriptSegment>>, CliError> {
    let audio = cfg.audio.clone().unwrap_or_else(|| session_id.to_string());
    if let Some(fixture) = &cfg.asr.mock_fixture {
        require_exists(fixture)?;
        return transcribe(&audio, &ReplayAsr::new(fixture))
            .map(Some)
            .map_err(|e| ingest_failure(fixture, e));
    }
    if let Some(path) = &cfg.transcript {
        return parse_transcript(open(path)?)
            .map(Some)
            .map_err(|e| ingest_failure(path, e));
    }
    if let Some(endpoint) = &cfg.asr.endpoint {
        if cfg.audio.is_none() {
            return Err(CliError::Usage("an ASR endpoint needs --audio <locator>".into()));
        }
        return transcribe(&audio, &HttpAsr::new(endpoint))
            .map(Some)
            .map_err(|e| CliError::failed("ingest", e.to_string()));
    }
    Ok(None)
}

pub struct AnalyzeOutcome {
    pub session_dir: PathBuf,
    pub records_written: usize,
    pub mock_misses: Vec<String>,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalyzeOutcome, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_flags(args);
    cfg.apply_env(|k| std::env::var(k).ok());
    cfg.validate()?;
    let backend = choose_backend(&cfg)?;

    let det_path = cfg.detections.clone().expect("validated");
    let session_id = match &cfg.session_id {
        Some(id) => id.clone(),
        None => det_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    check_session_id(&session_id)?;

    let frames = parse_detections(open(&det_path)?).map_err(|e| ingest_failure(&det_path, e))?;
    let mut extra_notes = Vec::new();
    let segments = match load_transcript(&cfg, &session_id)? {
        Some(s) => s,
        None if cfg.skip_llm => {
            extra_notes.push("no transcript source given; corpora are empty".to_string());
            Vec::new()
        }
        None => {
            return Err(CliError::Usage(
                "no transcript source: pass --transcript, --mock-asr or an ASR endpoint with --audio".into(),
            ))
        }
    };

    let duration_s = match cfg.duration_s {
        Some(d) => d,
        None => {
            let last_frame = frames.last().map_or(0.0, |f| f.timestamp_s);
            let last_speech = segments.iter().map(|s| s.end_s).fold(0.0, f64::max);
            let d = last_frame.max(last_speech);
            extra_notes.push(format!("duration inferred from inputs: {d} s"));
            d
        }
    };
    let bundle = validate_session(&session_id, frames, segments, duration_s, cfg.metadata.clone())
        .map_err(|e| ingest_failure(&det_path, e))?;

    let opts = cfg.pipeline_options();
    let analysis = analyze(&bundle, &opts)?;

    let out_root = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let session_dir = out_root.join(&session_id);
    create_dir(&session_dir)?;

    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut store = StoreHandle::open_writer(&out_root)?;
    let mut records_written = persist(&analysis.records(&session_id, &created_at), &mut store)?;

    let mut mock_misses = Vec::new();
    let (reports, mode) = match backend {
        Backend::Skip => (None, LlmMode::Skipped),
        Backend::Mock(dir) => {
            let mut mock = MockLlm::new(dir);
            if let Some(rec) = &args.record_requests {
                create_dir(rec)?;
                mock = mock.dump_requests_to(rec);
            }
            let r = run_llm(&session_id, &analysis, &mock, &opts)?;
            mock_misses = mock.misses();
            (Some(r), LlmMode::Mock)
        }
        Backend::Http(endpoint) => {
            let mut http = HttpLlm::new(endpoint, cfg.llm.model.clone());
            http.api_key = std::env::var(LLM_API_KEY_ENV).ok().filter(|k| !k.is_empty());
            http.reply_path = cfg.llm.reply_path.clone();
            http.timeout = std::time::Duration::from_secs(cfg.llm.timeout_s);
            let backend: &dyn LlmBackend = &http;
            (Some(run_llm(&session_id, &analysis, backend, &opts)?), LlmMode::Http)
        }
    };
    if let Some(r) = &reports {
        records_written += persist(&r.records(&session_id, &created_at), &mut store)?;
    }
    drop(store);

    let mut report = assemble(&bundle, &analysis, reports, &opts, mode);
    report.notes.extend(extra_notes);
    write_rendered(&session_dir, &render_all(&report)?)?;

    Ok(AnalyzeOutcome {
        session_dir,
        records_written,
        mock_misses,
    })
}

fn write_rendered(dir: &Path, r: &RenderedReport) -> Result<(), CliError> {
    write(&dir.join("report.md"), &r.markdown)?;
    write(&dir.join("report.json"), &r.json)?;
    write(&dir.join("trend.svg"), &r.svg)
}

fn variant_name(v: ApVariant) -> &'static str {
    match v {
        ApVariant::AllPoint => "all-point",
        ApVariant::ElevenPoint => "11-point",
        ApVariant::HundredOnePoint => "101-point",
    }
}

/// Returns the printable table followed by the canonical JSON summary.
pub fn cmd_metrics(args: &MetricsArgs) -> Result<String, CliError> {
    if !(args.iou > 0.0 && args.iou < 1.0) {
        return Err(CliError::Usage(format!("--iou must lie in (0, 1), got {}", args.iou)));
    }
    let dets = parse_predictions(open(&args.pred)?).map_err(|e| match e {
        IngestError::Io(source) => CliError::io(&args.pred, source),
        other => CliError::failed("detector-metrics", format!("{}: {other}", args.pred.display())),
    })?;
    let gts = parse_ground_truth(open(&args.gt)?).map_err(|e| match e {
        IngestError::Io(source) => CliError::io(&args.gt, source),
        other => CliError::failed("detector-metrics", format!("{}: {other}", args.gt.display())),
    })?;
    let variant = ApVariant::from(args.variant);
    let summary = mean_average_precision(&dets, &gts, args.iou, variant)
        .map_err(|e| CliError::failed("detector-metrics", e.to_string()))?;

    let mut out = String::from("category  n_gt  n_det  AP\n");
    for (cat, n_gt) in &summary.n_gt {
        let ap = summary
            .per_category_ap
            .get(cat)
            .map_or("-".to_string(), |v| format!("{v:.4}"));
        out.push_str(&format!(
            "{:<8}  {:>4}  {:>5}  {}\n",
            cat.as_str(),
            n_gt,
            summary.n_det[cat],
            ap
        ));
    }
    out.push_str(&format!(
        "mAP: {:.4} (IoU {}, {})\n\n",
        summary.map,
        args.iou,
        variant_name(variant)
    ));
    out.push_str(&to_canonical_pretty(&summary));
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(&args.profile).map_err(|e| CliError::io(&args.profile, e))?;
    let mut profile: SyntheticProfile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("profile {}: {e}", args.profile.display())))?;
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    let session = generate_synthetic(&profile).map_err(|e| CliError::Usage(e.to_string()))?;
    create_dir(&args.out)?;
    let files = [
        ("detections.jsonl", session.detections_jsonl()),
        ("transcript.jsonl", session.transcript_jsonl()),
        ("truth.json", to_canonical_pretty(&session.truth)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = args.out.join(name);
        write(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_report(args: &ReportArgs) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let bundle = parse_json(&text).map_err(|e| {
        CliError::failed("report-render", format!("{}: {e}", args.input.display()))
    })?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    create_dir(&dir)?;
    write_rendered(&dir, &render_all(&bundle)?)?;
    Ok(dir)
}
