//! Seeded synthetic classroom sessions with a known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    serialize_detections, serialize_transcript, BBox, Category, DetectionBox, DetectionFrame,
    TranscriptSegment,
};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSegment {
    pub start_min: usize,
    pub end_min: usize,
    pub target_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProfile {
    pub duration_min: usize,
    pub students: u32,
    pub segments: Vec<RateSegment>,
    pub noise_amplitude: f64,
    pub frames_per_minute: u32,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticProfile {
    /// Piecewise-constant profile from `(start_min, rate)` breakpoints.
    pub fn steps(duration_min: usize, students: u32, breaks: &[(usize, f64)], noise: f64, fpm: u32, seed: u64) -> Self {
        let segments = breaks
            .iter()
            .enumerate()
            .map(|(i, &(start, rate))| RateSegment {
                start_min: start,
                end_min: breaks.get(i + 1).map_or(duration_min, |b| b.0),
                target_rate: rate,
            })
            .collect();
        Self {
            duration_min,
            students,
            segments,
            noise_amplitude: noise,
            frames_per_minute: fpm,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidProfile(m));
        if self.duration_min == 0 {
            return bad("duration_min must be ≥ 1".into());
        }
        if self.students == 0 {
            return bad("students must be ≥ 1".into());
        }
        if self.frames_per_minute == 0 {
            return bad("frames_per_minute must be ≥ 1".into());
        }
        if !(self.noise_amplitude >= 0.0) {
            return bad("noise_amplitude must be ≥ 0".into());
        }
        let mut cursor = 0;
        for s in &self.segments {
            if s.start_min != cursor || s.end_min <= s.start_min {
                return bad(format!(
                    "segment [{}, {}) does not continue the partition at minute {cursor}",
                    s.start_min, s.end_min
                ));
            }
            if !(0.0..=1.0).contains(&s.target_rate) {
                return bad(format!("target_rate {} outside [0,1]", s.target_rate));
            }
            cursor = s.end_min;
        }
        if cursor != self.duration_min {
            return bad(format!(
                "segments cover [0, {cursor}) but duration is {} minutes",
                self.duration_min
            ));
        }
        Ok(())
    }

    pub fn rate_at(&self, minute: usize) -> f64 {
        self.segments
            .iter()
            .find(|s| s.start_min <= minute && minute < s.end_min)
            .map_or(0.0, |s| s.target_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueStep {
    pub minute: usize,
    pub from_rate: f64,
    pub to_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub profile: SyntheticProfile,
    pub steps: Vec<TrueStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub frames: Vec<DetectionFrame>,
    pub segments: Vec<TranscriptSegment>,
    pub truth: TruthRecord,
}

impl SyntheticSession {
    pub fn detections_jsonl(&self) -> String {
        serialize_detections(&self.frames)
    }

    pub fn transcript_jsonl(&self) -> String {
        serialize_transcript(&self.segments)
    }

    pub fn duration_s(&self) -> f64 {
        self.truth.profile.duration_min as f64 * 60.0
    }
}

fn seat_box(i: u32) -> BBox {
    let col = (i % 10) as f64;
    let row = (i / 10) as f64;
    BBox {
        x1: col * 64.0,
        y1: row * 80.0,
        x2: col * 64.0 + 48.0,
        y2: row * 80.0 + 64.0,
    }
}

/// Draws every frame's head-up count from
/// `Binomial(students, clamp(rate + U(-noise, noise)))`; fully determined by the seed.
pub fn generate_synthetic(profile: &SyntheticProfile) -> Result<SyntheticSession, SynthError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let fpm = profile.frames_per_minute;
    let mut frames = Vec::with_capacity(profile.duration_min * fpm as usize);
    let mut segments = Vec::with_capacity(profile.duration_min * 2);

    for m in 0..profile.duration_min {
        let target = profile.rate_at(m);
        for i in 0..fpm {
            let jitter = if profile.noise_amplitude > 0.0 {
                rng.random_range(-profile.noise_amplitude..=profile.noise_amplitude)
            } else {
                0.0
            };
            let p = (target + jitter).clamp(0.0, 1.0);
            let up = Binomial::new(profile.students as u64, p)
                .expect("p clamped into [0,1]")
                .sample(&mut rng) as u32;
            let boxes = (0..profile.students)
                .map(|s| DetectionBox {
                    category: if s < up { Category::HeadUp } else { Category::HeadDown },
                    confidence: 0.9,
                    bbox: seat_box(s),
                })
                .collect();
            frames.push(DetectionFrame {
                timestamp_s: 60.0 * m as f64 + 60.0 * (i as f64 + 0.5) / fpm as f64,
                boxes,
            });
        }
        let base = 60.0 * m as f64;
        segments.push(TranscriptSegment {
            start_s: base + 2.0,
            end_s: base + 28.0,
            text: format!("Minute {} sentence 1.", m + 1),
        });
        segments.push(TranscriptSegment {
            start_s: base + 31.0,
            end_s: base + 57.0,
            text: format!("Minute {} sentence 2.", m + 1),
        });
    }

    let steps = profile
        .segments
        .windows(2)
        .filter(|w| w[0].target_rate != w[1].target_rate)
        .map(|w| TrueStep {
            minute: w[1].start_min,
            from_rate: w[0].target_rate,
            to_rate: w[1].target_rate,
        })
        .collect();

    Ok(SyntheticSession {
        frames,
        segments,
        truth: TruthRecord {
            profile: profile.clone(),
            steps,
        },
    })
}
