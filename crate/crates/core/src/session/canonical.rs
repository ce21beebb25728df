//! Deterministic JSON: sorted object keys, compact layout, and every float
//! rounded to 12 significant digits.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Quantizes every float in place. Integers are left untouched.
pub fn quantize_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let q = quantize(n.as_f64().expect("f64 number"));
            if let Some(num) = Number::from_f64(q) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_value),
        Value::Object(map) => map.values_mut().for_each(quantize_value),
        _ => {}
    }
}

/// Serializes through a `Value`, whose maps keep keys sorted.
pub fn to_value<T: Serialize>(v: &T) -> serde_json::Result<Value> {
    let mut value = serde_json::to_value(v)?;
    quantize_value(&mut value);
    Ok(value)
}

pub fn value_bytes(v: &Value) -> Vec<u8> {
    let mut canon = v.clone();
    quantize_value(&mut canon);
    serde_json::to_vec(&canon).expect("a JSON value always serializes")
}

pub fn to_bytes<T: Serialize>(v: &T) -> serde_json::Result<Vec<u8>> {
    Ok(value_bytes(&to_value(v)?))
}

/// Round-trips `v` through its canonical form.
pub fn normalize<T: Serialize + DeserializeOwned>(v: &T) -> serde_json::Result<T> {
    serde_json::from_value(to_value(v)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
