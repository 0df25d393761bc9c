//! Mapping the teacher's transcript onto the behaviour timeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{ChangePoint, Direction, Stage, StageInterval};
use crate::ingest::{minute_count, TranscriptSegment};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("stage intervals do not partition minutes 0..{minutes}: {reason}")]
    NotAPartition { minutes: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteCorpus {
    pub minute_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub start_min: usize,
    pub end_min: usize,
    pub stage: Stage,
    pub text: String,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

impl From<Direction> for Polarity {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Increase => Polarity::Positive,
            Direction::Decrease => Polarity::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastPair {
    pub change_minute: usize,
    pub polarity: Polarity,
    /// Half-open minute range of the "before" window.
    pub before: (usize, usize),
    /// Half-open minute range of the "after" window; starts at the change minute.
    pub after: (usize, usize),
    pub before_text: String,
    pub after_text: String,
    pub magnitude: f64,
}

/// Assigns each segment to the minute holding its midpoint.
///
/// Texts within a minute are joined with a single space in start-time order.
/// Segments whose midpoint falls past the last minute land in the last minute.
pub fn bucket_by_minute(segments: &[TranscriptSegment], duration_s: f64) -> Vec<MinuteCorpus> {
    let len = minute_count(duration_s);
    let mut buckets: Vec<Vec<&TranscriptSegment>> = vec![Vec::new(); len];
    if len > 0 {
        for seg in segments {
            let m = ((seg.midpoint() / 60.0).floor().max(0.0) as usize).min(len - 1);
            buckets[m].push(seg);
        }
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(minute_index, mut segs)| {
            segs.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
            let text = segs
                .iter()
                .map(|s| s.text.trim())
                .collect::<Vec<_>>()
                .join(" ");
            MinuteCorpus { minute_index, text }
        })
        .collect()
}

/// Newline-joined text of the non-empty minutes in `range`.
pub fn join_minutes(minutes: &[MinuteCorpus], range: std::ops::Range<usize>) -> String {
    minutes[range]
        .iter()
        .map(|m| m.text.as_str())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn check_partition(intervals: &[StageInterval], minutes: usize) -> Result<(), CorpusError> {
    let fail = |reason: String| Err(CorpusError::NotAPartition { minutes, reason });
    let mut cursor = 0;
    for iv in intervals {
        if iv.start_min != cursor {
            return fail(format!(
                "interval [{}, {}) starts at {} but previous coverage ends at {cursor}",
                iv.start_min, iv.end_min, iv.start_min
            ));
        }
        if iv.end_min <= iv.start_min {
            return fail(format!("interval [{}, {}) is empty", iv.start_min, iv.end_min));
        }
        cursor = iv.end_min;
    }
    if cursor != minutes {
        return fail(format!("coverage ends at {cursor}"));
    }
    Ok(())
}

/// Tags each stage interval with the transcript spoken during it.
pub fn label_by_stage(
    minutes: &[MinuteCorpus],
    intervals: &[StageInterval],
) -> Result<Vec<LabeledCorpus>, CorpusError> {
    check_partition(intervals, minutes.len())?;
    Ok(intervals
        .iter()
        .map(|iv| LabeledCorpus {
            start_min: iv.start_min,
            end_min: iv.end_min,
            stage: iv.stage,
            text: join_minutes(minutes, iv.start_min..iv.end_min),
            mean_rate: iv.mean_rate,
        })
        .collect())
}

/// Pulls the `k` minutes before and after each change point.
///
/// The change minute itself belongs to the "after" window. Windows clip at
/// the session bounds.
pub fn extract_contrast(
    minutes: &[MinuteCorpus],
    points: &[ChangePoint],
    k: usize,
) -> Vec<ContrastPair> {
    let len = minutes.len();
    points
        .iter()
        .map(|p| {
            let t = p.minute.min(len);
            let before = (t.saturating_sub(k), t);
            let after = (t, (t + k).min(len));
            ContrastPair {
                change_minute: p.minute,
                polarity: p.direction.into(),
                before,
                after,
                before_text: join_minutes(minutes, before.0..before.1),
                after_text: join_minutes(minutes, after.0..after.1),
                magnitude: p.magnitude,
            }
        })
        .collect()
}
