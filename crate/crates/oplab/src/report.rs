//! Deterministic serialization helpers shared by all artifact writers.
//!
//! Floats are rendered with 17 significant digits in scientific notation so
//! that re-running an experiment yields byte-identical CSV/JSON output.

use std::fmt::Write as _;

/// Fixed 17-significant-digit rendering used in every artifact.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{v:.16e}")
}

/// Minimal JSON document builder with fixed key order and fixed number
/// formatting. Only what the reports need.
#[derive(Debug, Clone)]
pub enum JsonValue {
    /// Pre-rendered token (numbers, booleans, null).
    Raw(String),
    String(String),
    Array(Vec<JsonValue>),
    Object(Vec<(String, JsonValue)>),
}

impl JsonValue {
    pub fn str(s: &str) -> Self {
        JsonValue::String(s.to_string())
    }

    pub fn string(s: &String) -> Self {
        JsonValue::String(s.clone())
    }

    pub fn number(v: f64) -> Self {
        JsonValue::Raw(fmt_f64(v))
    }

    pub fn integer(v: u64) -> Self {
        JsonValue::Raw(v.to_string())
    }

    pub fn boolean(v: bool) -> Self {
        JsonValue::Raw(if v { "true" } else { "false" }.to_string())
    }

    pub fn object(fields: Vec<(&str, JsonValue)>) -> Self {
        JsonValue::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn numbers(vs: &[f64]) -> Self {
        JsonValue::Array(vs.iter().map(|v| JsonValue::number(*v)).collect())
    }

    fn write_into(&self, out: &mut String) {
        match self {
            JsonValue::Raw(s) => out.push_str(s),
            JsonValue::String(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\t' => out.push_str("\\t"),
                        '\r' => out.push_str("\\r"),
                        c if (c as u32) < 0x20 => {
                            let _ = write!(out, "\\u{:04x}", c as u32);
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            JsonValue::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_into(out);
                }
                out.push(']');
            }
            JsonValue::Object(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    JsonValue::String(k.clone()).write_into(out);
                    out.push(':');
                    v.write_into(out);
                }
                out.push('}');
            }
        }
    }

    /// Render the document with a trailing newline.
    pub fn to_string_pretty_stable(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out);
        out.push('\n');
        out
    }
}

/// Build a CSV document from a header and row iterator, using the fixed
/// float format for every cell.
pub fn csv_document(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
