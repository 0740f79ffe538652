//! Canonical JSON: keys sorted, no insignificant whitespace.

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Serializes through `serde_json::Value`, whose map type keeps keys sorted.
pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

pub fn from_str<T: DeserializeOwned>(s: &str) -> serde_json::Result<T> {
    serde_json::from_str(s)
}
