//! Serializes amplitudes with 17 significant digits so every `f64` survives a
//! JSON round trip bit-for-bit.

use serde::ser::{SerializeSeq, Serializer};
use serde_json::value::RawValue;

fn raw(x: f64) -> Box<RawValue> {
    // `{:.16e}` gives 1 + 16 significant digits and is always a valid JSON number
    // for finite input.
    let s = if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_owned()
    };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

pub fn matrix<S: Serializer>(rows: &[Vec<f64>], ser: S) -> Result<S::Ok, S::Error> {
    let mut outer = ser.serialize_seq(Some(rows.len()))?;
    for row in rows {
        let row: Vec<Box<RawValue>> = row.iter().copied().map(raw).collect();
        outer.serialize_element(&row)?;
    }
    outer.end()
}
