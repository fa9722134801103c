//! Canonical JSON: sorted object keys, no insignificant whitespace, floats in
//! shortest round-trip form.

use serde::{de::DeserializeOwned, Serialize};
use std::path::Path;

use crate::error::Result;

/// Serialize `value` canonically.
///
/// Going through [`serde_json::Value`] sorts keys, since its map type is a
/// `BTreeMap` without the `preserve_order` feature.
pub fn to_canonical<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

pub fn from_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

pub fn load<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    from_str(&text)
}

pub fn save<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_canonical(value)?)?;
    Ok(())
}
