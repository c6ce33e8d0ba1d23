use serde::Serialize;

/// Wilson score interval at 95% for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> [f64; 2] {
    if n == 0 {
        return [0.0, 1.0];
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let center = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    [lo, hi]
}

/// Output of `simulate`. `wall_time_s` is the only field that varies
/// between identical invocations.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub mode: &'static str,
    pub config: serde_json::Value,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub ci95: [f64; 2],
    pub analytic: serde_json::Value,
    pub breakdown: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_trial: Option<serde_json::Value>,
    pub wall_time_s: f64,
}

/// Render a JSON document as indented `key: value` lines, with arrays of
/// flat objects shown as aligned tables.
pub fn pretty(v: &serde_json::Value) -> String {
    let mut out = String::new();
    render(v, 0, &mut out);
    out
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn is_flat_rows(items: &[serde_json::Value]) -> bool {
    !items.is_empty()
        && items.iter().all(|i| {
            i.as_object()
                .is_some_and(|o| o.values().all(|v| !v.is_object() && !v.is_array()))
        })
}

fn render(v: &serde_json::Value, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                match val {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render(val, indent + 2, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar(val))),
                }
            }
        }
        serde_json::Value::Array(items) if is_flat_rows(items) => {
            let cols: Vec<String> = items[0].as_object().unwrap().keys().cloned().collect();
            let cells: Vec<Vec<String>> = items
                .iter()
                .map(|i| cols.iter().map(|c| scalar(&i[c.as_str()])).collect())
                .collect();
            let widths: Vec<usize> = cols
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    cells
                        .iter()
                        .map(|r| r[j].len())
                        .max()
                        .unwrap_or(0)
                        .max(c.len())
                })
                .collect();
            let line = |row: &[String]| {
                let parts: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect();
                format!("{pad}{}\n", parts.join("  ").trim_end())
            };
            out.push_str(&line(&cols));
            for r in &cells {
                out.push_str(&line(r));
            }
        }
        serde_json::Value::Array(items) => {
            for i in items {
                match i {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        render(i, indent + 2, out);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", scalar(i))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}
