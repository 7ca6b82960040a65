//! Output formatting shared by the command-line front end.
//!
//! Every float is written with 12 significant digits, so repeated runs with
//! the same configuration produce byte-identical output.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest form of [`round_sig`]`(x)`, in exponent notation for very small
/// or large magnitudes. Non-finite values print as `NaN`, `inf` or `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        let r = round_sig(x);
        if r == 0.0 || (1e-4..1e15).contains(&r.abs()) {
            format!("{r}")
        } else {
            format!("{r:e}")
        }
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// `value` as a JSON tree with every float rounded.
pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed JSON with every float rounded.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_value(value)?)?)
}
