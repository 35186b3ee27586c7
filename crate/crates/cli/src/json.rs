//! JSON rendering with every float printed to 17 significant digits.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const SCHEMA: &str = "causal-kit/1";

pub fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::new(1, "INTERNAL", e.to_string()))
}

/// Top-level document: schema tag, command, echoed config and result fields.
pub fn document(command: &str, config: Value, result: Map<String, Value>) -> Value {
    let mut doc = Map::new();
    doc.insert("schema".into(), SCHEMA.into());
    doc.insert("command".into(), command.into());
    doc.insert("config".into(), config);
    doc.extend(result);
    Value::Object(doc)
}

pub fn error_document(err: &CliError) -> Value {
    serde_json::json!({
        "schema": SCHEMA,
        "error": { "code": err.code, "message": err.message, "exit_code": err.exit },
    })
}

/// Formats like C's `%.17g`, keeping a `.0` on integral values so that they
/// still read back as floats.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{:.16e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let sign = if x < 0.0 { "-" } else { "" };
    if (-4..17).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            let (int, frac) = if digits.len() > split {
                (digits[..split].to_string(), &digits[split..])
            } else {
                (format!("{digits:0<split$}"), "")
            };
            let frac = if frac.is_empty() { "0" } else { frac };
            format!("{sign}{int}.{frac}")
        } else {
            format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
        }
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        format!("{sign}{head}{tail}e{exp}")
    }
}

pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n("  ", k));
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_g17_layout() {
        let cases = [
            (0.5, "0.5"),
            (1.0, "1.0"),
            (-2.25, "-2.25"),
            (100.0, "100.0"),
            (0.1, "0.10000000000000001"),
            (1e-5, "1.0000000000000001e-5"),
            (1e20, "1e20"),
            (0.000123, "0.00012300000000000001"),
            (0.25, "0.25"),
        ];
        for (x, s) in cases {
            assert_eq!(format_float(x), s);
        }
        let mut rng = 0x9e3779b97f4a7c15u64;
        for _ in 0..10_000 {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            let x = f64::from_bits(rng);
            if x.is_finite() {
                assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
            }
        }
    }

    #[test]
    fn rendered_documents_parse_back() {
        let v = serde_json::json!({"a": [1.5, 2, {"b": null}], "c": "x\"y", "d": [], "e": {}});
        let back: Value = serde_json::from_str(&render(&v)).unwrap();
        assert_eq!(back, v);
    }
}
