//! Detection and transcript ingestion.
//!
//! Detections arrive as line-delimited JSON written by whatever detector ran
//! over the classroom video; transcripts arrive either as JSONL files or from
//! an [`AsrBackend`]. Every record is validated on the way in and every error
//! carries the 1-based line number of the offending record.

use std::io::BufRead;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance allowed for transcript segments ending after the session end.
pub const SEGMENT_END_TOLERANCE_S: f64 = 1.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("line {line}: timestamp {t} is earlier than previous frame at {prev}")]
    DecreasingTimestamp { line: usize, prev: f64, t: f64 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty detection stream")]
    EmptyDetections,
    #[error("session duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("frame {index} at t={t} lies beyond session duration {duration}")]
    FrameBeyondDuration { index: usize, t: f64, duration: f64 },
    #[error("segment {index} ends at {end}, beyond session duration {duration} (+{SEGMENT_END_TOLERANCE_S} s)")]
    SegmentBeyondDuration { index: usize, end: f64, duration: f64 },
    #[error("ASR backend {endpoint} unreachable: {message}")]
    AsrUnreachable { endpoint: String, message: String },
    #[error("ASR backend {endpoint} failed: {message}")]
    AsrFailed { endpoint: String, message: String },
    #[error("ASR backend {backend} returned invalid segment {index}: {reason}")]
    AsrInvalidSegment {
        backend: String,
        index: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "up")]
    HeadUp,
    #[serde(rename = "down")]
    HeadDown,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::HeadUp, Category::HeadDown];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::HeadUp => "up",
            Category::HeadDown => "down",
        }
    }
}

/// Axis-aligned box in pixel coordinates, `(x1, y1)` top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, String> {
        if !(x1 < x2) {
            return Err(format!("bbox x1 ≥ x2 ({x1} ≥ {x2})"));
        }
        if !(y1 < y2) {
            return Err(format!("bbox y1 ≥ y2 ({y1} ≥ {y2})"));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn area(&self) -> f64 {
        (self.x2 - self.x1) * (self.y2 - self.y1)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = String;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    #[serde(rename = "cls")]
    pub category: Category,
    #[serde(rename = "conf")]
    pub confidence: f64,
    #[serde(rename = "xyxy")]
    pub bbox: BBox,
}

impl DetectionBox {
    pub(crate) fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0,1]", self.confidence));
        }
        Ok(())
    }
}

/// One detector pass over one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    #[serde(rename = "t")]
    pub timestamp_s: f64,
    pub boxes: Vec<DetectionBox>,
}

impl DetectionFrame {
    pub fn count(&self, category: Category) -> usize {
        self.boxes.iter().filter(|b| b.category == category).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    #[serde(rename = "start")]
    pub start_s: f64,
    #[serde(rename = "end")]
    pub end_s: f64,
    pub text: String,
}

impl TranscriptSegment {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.start_s >= 0.0) {
            return Err(format!("segment start {} is negative", self.start_s));
        }
        if !(self.start_s < self.end_s) {
            return Err(format!(
                "segment start {} is not before end {}",
                self.start_s, self.end_s
            ));
        }
        if self.text.trim().is_empty() {
            return Err("segment text is empty".to_string());
        }
        Ok(())
    }

    pub fn midpoint(&self) -> f64 {
        (self.start_s + self.end_s) / 2.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionMetadata {
    #[serde(default)]
    pub course: String,
    #[serde(default)]
    pub teacher: String,
    #[serde(default)]
    pub date: String,
}

/// Validated pairing of detections, transcript and session metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub session_id: String,
    pub duration_s: f64,
    pub frames: Vec<DetectionFrame>,
    pub segments: Vec<TranscriptSegment>,
    pub metadata: SessionMetadata,
}

impl SessionBundle {
    pub fn minute_count(&self) -> usize {
        minute_count(self.duration_s)
    }
}

/// Number of whole-or-partial minutes covered by a session of `duration_s`.
pub fn minute_count(duration_s: f64) -> usize {
    (duration_s / 60.0).ceil().max(0.0) as usize
}

pub(crate) fn jsonl_lines<R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    reader
        .split(b'\n')
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = i + 1;
            let bytes = match raw {
                Ok(b) => b,
                Err(e) => return Some(Err(IngestError::Io(e))),
            };
            let text = match String::from_utf8(bytes) {
                Ok(s) => s,
                Err(_) => {
                    return Some(Err(IngestError::Invalid {
                        line,
                        reason: "invalid UTF-8".to_string(),
                    }))
                }
            };
            let trimmed = text.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                None
            } else {
                Some(Ok((line, trimmed.to_string())))
            }
        })
}

pub(crate) fn json_error(line: usize, e: serde_json::Error) -> IngestError {
    // serde reports try_from failures (bbox invariants) as data errors
    if e.is_data() {
        IngestError::Invalid {
            line,
            reason: e.to_string(),
        }
    } else {
        IngestError::Json {
            line,
            message: e.to_string(),
        }
    }
}

/// Parses detection JSONL, one frame per line.
pub fn parse_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionFrame>, IngestError> {
    let mut frames = Vec::new();
    let mut prev_t: Option<f64> = None;
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let frame: DetectionFrame =
            serde_json::from_str(&text).map_err(|e| json_error(line, e))?;
        if !(frame.timestamp_s >= 0.0) {
            return Err(IngestError::Invalid {
                line,
                reason: format!("timestamp {} is negative", frame.timestamp_s),
            });
        }
        for b in &frame.boxes {
            b.check()
                .map_err(|reason| IngestError::Invalid { line, reason })?;
        }
        if let Some(prev) = prev_t {
            if frame.timestamp_s < prev {
                return Err(IngestError::DecreasingTimestamp {
                    line,
                    prev,
                    t: frame.timestamp_s,
                });
            }
        }
        prev_t = Some(frame.timestamp_s);
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes frames back out in the detection JSONL format.
pub fn serialize_detections(frames: &[DetectionFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f).expect("frame serializes"));
        out.push('\n');
    }
    out
}

/// Parses transcript JSONL, one segment per line.
pub fn parse_transcript<R: BufRead>(reader: R) -> Result<Vec<TranscriptSegment>, IngestError> {
    let mut segments = Vec::new();
    for item in jsonl_lines(reader) {
        let (line, text) = item?;
        let mut seg: TranscriptSegment =
            serde_json::from_str(&text).map_err(|e| json_error(line, e))?;
        seg.validate()
            .map_err(|reason| IngestError::Invalid { line, reason })?;
        seg.text = seg.text.trim().to_string();
        segments.push(seg);
    }
    Ok(segments)
}

pub fn serialize_transcript(segments: &[TranscriptSegment]) -> String {
    let mut out = String::new();
    for s in segments {
        out.push_str(&serde_json::to_string(s).expect("segment serializes"));
        out.push('\n');
    }
    out
}

/// Speech-recognition backend producing timed transcript segments.
pub trait AsrBackend {
    /// Name used in error messages (endpoint URL or fixture path).
    fn name(&self) -> String;

    fn transcribe(&self, audio_ref: &str) -> Result<Vec<TranscriptSegment>, IngestError>;
}

/// Runs `backend` and rejects any segment that breaks the transcript
/// invariants. Overlapping segments are accepted.
pub fn transcribe(
    audio_ref: &str,
    backend: &dyn AsrBackend,
) -> Result<Vec<TranscriptSegment>, IngestError> {
    let segments = backend.transcribe(audio_ref)?;
    for (index, seg) in segments.iter().enumerate() {
        seg.validate()
            .map_err(|reason| IngestError::AsrInvalidSegment {
                backend: backend.name(),
                index,
                reason,
            })?;
    }
    Ok(segments)
}

/// Replays a transcript JSONL fixture regardless of the audio locator.
#[derive(Debug, Clone)]
pub struct ReplayAsr {
    pub fixture: PathBuf,
}

impl ReplayAsr {
    pub fn new(fixture: impl Into<PathBuf>) -> Self {
        Self {
            fixture: fixture.into(),
        }
    }
}

impl AsrBackend for ReplayAsr {
    fn name(&self) -> String {
        self.fixture.display().to_string()
    }

    fn transcribe(&self, _audio_ref: &str) -> Result<Vec<TranscriptSegment>, IngestError> {
        let file = std::fs::File::open(&self.fixture)?;
        parse_transcript(std::io::BufReader::new(file))
    }
}

/// In-memory backend, mostly useful for tests.
#[derive(Debug, Clone, Default)]
pub struct StaticAsr(pub Vec<TranscriptSegment>);

impl AsrBackend for StaticAsr {
    fn name(&self) -> String {
        "static".to_string()
    }

    fn transcribe(&self, _audio_ref: &str) -> Result<Vec<TranscriptSegment>, IngestError> {
        Ok(self.0.clone())
    }
}

pub const ASR_ENDPOINT_ENV: &str = "LECTURELENS_ASR_ENDPOINT";

/// POSTs `{"audio": <locator>}` to an endpoint that answers with transcript JSONL.
#[cfg(feature = "http")]
#[derive(Debug, Clone)]
pub struct HttpAsr {
    pub endpoint: String,
    pub timeout: std::time::Duration,
}

#[cfg(feature = "http")]
impl HttpAsr {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: std::time::Duration::from_secs(600),
        }
    }
}

#[cfg(feature = "http")]
impl AsrBackend for HttpAsr {
    fn name(&self) -> String {
        self.endpoint.clone()
    }

    fn transcribe(&self, audio_ref: &str) -> Result<Vec<TranscriptSegment>, IngestError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let body = serde_json::json!({ "audio": audio_ref }).to_string();
        let mut resp = agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body.as_str())
            .map_err(|e| IngestError::AsrUnreachable {
                endpoint: self.endpoint.clone(),
                message: e.to_string(),
            })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| IngestError::AsrFailed {
                endpoint: self.endpoint.clone(),
                message: e.to_string(),
            })?;
        if !(200..300).contains(&status) {
            return Err(IngestError::AsrFailed {
                endpoint: self.endpoint.clone(),
                message: format!("HTTP status {status}"),
            });
        }
        parse_transcript(text.as_bytes())
    }
}

/// Builds a [`SessionBundle`] iff every bundle invariant holds.
pub fn validate_session(
    session_id: impl Into<String>,
    frames: Vec<DetectionFrame>,
    segments: Vec<TranscriptSegment>,
    duration_s: f64,
    metadata: SessionMetadata,
) -> Result<SessionBundle, IngestError> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(IngestError::NonPositiveDuration(duration_s));
    }
    if frames.is_empty() {
        return Err(IngestError::EmptyDetections);
    }
    for (index, f) in frames.iter().enumerate() {
        if f.timestamp_s > duration_s {
            return Err(IngestError::FrameBeyondDuration {
                index,
                t: f.timestamp_s,
                duration: duration_s,
            });
        }
    }
    for (index, s) in segments.iter().enumerate() {
        if s.end_s > duration_s + SEGMENT_END_TOLERANCE_S {
            return Err(IngestError::SegmentBeyondDuration {
                index,
                end: s.end_s,
                duration: duration_s,
            });
        }
    }
    Ok(SessionBundle {
        session_id: session_id.into(),
        duration_s,
        frames,
        segments,
        metadata,
    })
}
