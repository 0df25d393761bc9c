use super::ReportBundle;
use crate::canon::to_canonical_pretty;

/// Canonical JSON: sorted keys, shortest round-trip floats, LF endings.
pub fn render_json(bundle: &ReportBundle) -> String {
    to_canonical_pretty(bundle)
}

pub fn parse_json(text: &str) -> Result<ReportBundle, serde_json::Error> {
    serde_json::from_str(text)
}
