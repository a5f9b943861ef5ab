//! Deterministic JSON and CSV serialization.
//!
//! Objects are written with sorted keys and floats with 17 significant
//! digits, so identical reports are byte-identical.

use serde_json::Value;
use std::fmt::Write;

/// `x` with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a JSON value. Fails on a non-finite number, naming its path.
pub fn to_json(v: &Value) -> Result<String, String> {
    let mut out = String::new();
    write_value(v, 0, "$", &mut out)?;
    out.push('\n');
    Ok(out)
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, path: &str, out: &mut String) -> Result<(), String> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let x = n.as_f64().ok_or_else(|| format!("{path}: unrepresentable number"))?;
                out.push_str(&fmt_float(x));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            // short numeric rows stay on one line
            let flat = items.len() <= 10 && items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                if flat {
                    if k > 0 {
                        out.push(' ');
                    }
                } else {
                    out.push('\n');
                    indent(out, level + 1);
                }
                write_value(item, level + 1, &format!("{path}[{k}]"), out)?;
            }
            if !flat {
                out.push('\n');
                indent(out, level);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push('\n');
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push_str(": ");
                write_value(&map[*key], level + 1, &format!("{path}.{key}"), out)?;
            }
            out.push('\n');
            indent(out, level);
            out.push('}');
        }
    }
    Ok(())
}

/// A float as a JSON value; `None` for NaN or infinities.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Rejects reports with a null left behind by [`num`].
pub fn check_finite(v: &Value, path: &str) -> Result<(), String> {
    match v {
        Value::Null => Err(format!("{path} is not finite")),
        Value::Array(items) => items.iter().enumerate().try_for_each(|(k, x)| check_finite(x, &format!("{path}[{k}]"))),
        Value::Object(map) => map.iter().try_for_each(|(k, x)| check_finite(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

/// CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| fmt_float(x)).collect());
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed_width() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": {"z": true, "y": "s"}});
        let s = to_json(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("[1, 2.5000000000000000e0]"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn serialization_is_repeatable() {
        let v = json!({"x": [0.3, -1e-300, 7], "k": {"q": 2.0}});
        assert_eq!(to_json(&v).unwrap(), to_json(&v.clone()).unwrap());
    }

    #[test]
    fn non_finite_is_reported() {
        let v = json!({"a": {"b": num(f64::NAN)}});
        assert_eq!(check_finite(&v, "$").unwrap_err(), "$.a.b is not finite");
    }

    #[test]
    fn csv_has_header() {
        let mut t = Table::new(&["x", "y"]);
        t.push_floats(&[1.0, 0.5]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s.lines().next(), Some("x,y"));
        assert_eq!(s.lines().count(), 2);
    }
}
