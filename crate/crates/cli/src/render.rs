//! Text view of a JSON report: one `path: value` line per leaf, so the text
//! carries exactly the data of the JSON.

use serde_json::Value;

pub fn text(v: &Value) -> String {
    let mut out = String::new();
    walk(v, "", &mut out);
    out
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".to_string(),
        other => other.to_string(),
    }
}

fn walk(v: &Value, path: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(child, &p, out);
            }
        }
        // short arrays of scalars stay on one line
        Value::Array(items) if items.iter().all(is_scalar) => {
            let body: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{path}: [{}]\n", body.join(", ")));
        }
        Value::Array(items) => {
            if items.iter().all(|i| matches!(i, Value::Array(a) if a.iter().all(is_scalar))) {
                out.push_str(&format!("{path}: ({} rows)\n", items.len()));
            }
            for (i, child) in items.iter().enumerate() {
                walk(child, &format!("{path}[{i}]"), out);
            }
        }
        leaf => out.push_str(&format!("{path}: {}\n", scalar(leaf))),
    }
}
