//! Brute-force reference implementations used by the acceptance suite.
//!
//! Nothing here calls into the library's tokenizer, classifier or statistics.
//! Lexicon entries and corpus pairs are read as plain data; everything else
//! is recomputed the slow, obvious way.

pub mod oracle;
pub mod textbook;

/// Differences between two JSON documents as `path: left != right` lines.
/// Integers must match exactly; other numbers to a relative 1e-9.
pub fn json_diff(left: &serde_json::Value, right: &serde_json::Value) -> Vec<String> {
    use serde_json::Value;
    fn walk(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                let keys_x: Vec<&String> = x.keys().collect();
                let keys_y: Vec<&String> = y.keys().collect();
                if keys_x != keys_y {
                    out.push(format!("{path}: keys {keys_x:?} != {keys_y:?}"));
                    return;
                }
                for (k, v) in x {
                    walk(&format!("{path}.{k}"), v, &y[k], out);
                }
            }
            (Value::Array(x), Value::Array(y)) => {
                if x.len() != y.len() {
                    out.push(format!("{path}: length {} != {}", x.len(), y.len()));
                    return;
                }
                for (i, (v, w)) in x.iter().zip(y).enumerate() {
                    walk(&format!("{path}[{i}]"), v, w, out);
                }
            }
            (Value::Number(x), Value::Number(y)) => {
                let equal = match (x.as_u64(), y.as_u64()) {
                    (Some(p), Some(q)) => p == q,
                    _ => {
                        let (p, q) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                        p == q || (p - q).abs() <= 1e-9 * p.abs().max(q.abs())
                    }
                };
                if !equal {
                    out.push(format!("{path}: {x} != {y}"));
                }
            }
            _ if a == b => {}
            _ => out.push(format!("{path}: {a} != {b}")),
        }
    }
    let mut out = Vec::new();
    walk("$", left, right, &mut out);
    out
}
