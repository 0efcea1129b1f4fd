//! Canonical float text used by every file format the crate writes.

use std::fmt::Write;

/// Shortest text that parses back to the same `f64`, always carrying a
/// decimal point or exponent (`2.0`, `0.3`, `1e-7`).
pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn push_float(out: &mut String, v: f64) {
    let _ = write!(out, "{v:?}");
}
