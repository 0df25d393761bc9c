//! Canonical JSON: object keys sorted, shortest round-trip floats, LF only.

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Recursively rebuilds objects with keys in sorted order, independent of
/// whether `serde_json` preserves insertion order.
pub fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, sort_keys(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

pub fn to_canonical_value<T: Serialize>(value: &T) -> Value {
    sort_keys(serde_json::to_value(value).expect("value serializes to JSON"))
}

/// Compact canonical encoding, used for hashing.
pub fn to_canonical_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&to_canonical_value(value)).expect("canonical JSON serializes")
}

/// Indented canonical encoding with a trailing newline.
pub fn to_canonical_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_canonical_value(value))
        .expect("canonical JSON serializes");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
