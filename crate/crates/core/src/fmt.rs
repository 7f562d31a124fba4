//! Fixed-precision text output.
//!
//! Every floating-point number leaving the crate (CSV or JSON) is written with
//! 17 significant digits in scientific notation, which round-trips any `f64`
//! exactly and keeps output byte-stable across platforms.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// Formats `x` with 17 significant digits, e.g. `6.2500000000000000e-1`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` as indented JSON with every float written to 17
/// significant digits. Integers are written as integers; non-finite floats
/// become `null`.
pub fn to_json_17<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &tree, 0)?;
    Ok(out)
}

fn write_value(out: &mut String, value: &Value, depth: usize) -> serde_json::Result<()> {
    const INDENT: &str = "  ";
    match value {
        Value::Number(n) if n.is_f64() => match n.as_f64() {
            Some(x) if x.is_finite() => out.push_str(&fmt_f64(x)),
            _ => out.push_str("null"),
        },
        Value::Array(items) if !items.is_empty() => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&INDENT.repeat(depth + 1));
                write_value(out, item, depth + 1)?;
            }
            let _ = write!(out, "\n{}]", INDENT.repeat(depth));
        }
        Value::Object(map) if !map.is_empty() => {
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&INDENT.repeat(depth + 1));
                out.push_str(&serde_json::to_string(key)?);
                out.push_str(": ");
                write_value(out, item, depth + 1)?;
            }
            let _ = write!(out, "\n{}}}", INDENT.repeat(depth));
        }
        other => out.push_str(&serde_json::to_string(other)?),
    }
    Ok(())
}
