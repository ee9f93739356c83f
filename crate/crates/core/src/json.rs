//! Number parsing for buffered JSON.
//!
//! Untagged and internally tagged enums buffer their input, and once
//! serde_json's `arbitrary_precision` feature is enabled anywhere in the
//! build a buffered number no longer deserializes as `f64` or `usize`.
//! Going through `serde_json::Value` sidesteps that.

use serde::de::Error;
use serde::{Deserialize, Deserializer};
use serde_json::Value;

pub(crate) fn f64_value<E: Error>(v: &Value) -> Result<f64, E> {
    v.as_f64()
        .ok_or_else(|| E::custom(format!("expected a number, found {v}")))
}

/// A real number or `[re, im]`.
pub(crate) fn scalar<E: Error>(v: &Value) -> Option<Result<[f64; 2], E>> {
    match v {
        Value::Number(_) => Some(f64_value(v).map(|x| [x, 0.0])),
        Value::Array(a) if a.len() == 2 => {
            Some(f64_value(&a[0]).and_then(|re| Ok([re, f64_value(&a[1])?])))
        }
        _ => None,
    }
}

pub(crate) fn usize_value<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    let v = Value::deserialize(d)?;
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| D::Error::custom(format!("expected a non-negative integer, found {v}")))
}
