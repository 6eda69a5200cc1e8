//! Serialization helpers: significant-digit rounding, matrix layout and
//! output destinations.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use eapm_core::linalg::ComplexMatrix;
use serde::Serialize;
use serde_json::{Map, Number, Value};

pub const SIG_DIGITS: usize = 12;

/// Environment variable naming the directory outputs go to when `--out` is
/// absent.
pub const OUTPUT_DIR_VAR: &str = "EAPM_OUTPUT_DIR";

/// `v` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

pub fn fmt_num(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// Rounds every non-integer number in `v`.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap_or(f64::NAN);
            Number::from_f64(round_sig(f)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(
            o.into_iter()
                .map(|(k, v)| (k, round_value(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// Rows of `[re, im]` pairs.
pub fn matrix(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

#[derive(Serialize)]
pub struct Document<C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub paper_anchor: Vec<&'static str>,
    pub config: C,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Document<C, R> {
    pub fn new(
        command: &'static str,
        paper_anchor: Vec<&'static str>,
        config: C,
        result: R,
    ) -> Self {
        Self {
            tool: "eapm",
            version: env!("CARGO_PKG_VERSION"),
            command,
            paper_anchor,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(&round_value(serde_json::to_value(self)?))?;
        s.push('\n');
        Ok(s)
    }
}

/// `--out` if given, else `default_name` inside `$EAPM_OUTPUT_DIR` if set,
/// else standard output (`None`).
pub fn destination(out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUTPUT_DIR_VAR)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(default_name))
}

pub fn emit(text: &str, dest: Option<&Path>) -> io::Result<()> {
    match dest {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(2.0 / 3.0), 0.666666666667);
        assert_eq!(round_sig(1e-20 / 3.0), 3.33333333333e-21);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(fmt_num(0.5), "0.5");
        let v = round_value(serde_json::json!({"a": [0.1 + 0.2, 3], "b": 1.0 / 7.0}));
        assert_eq!(v.to_string(), r#"{"a":[0.3,3],"b":0.142857142857}"#);
    }

    #[test]
    fn matrix_layout() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            serde_json::to_string(&matrix(&m)).unwrap(),
            "[[[1.0,0.0],[2.0,0.0]],[[3.0,0.0],[4.0,0.0]]]"
        );
    }
}
