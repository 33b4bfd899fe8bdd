//! Cross-run aggregation: median, sample standard deviation and max of
//! every numeric metric found in the runs' `report.json` files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use latree_core::metrics::Summary;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io;

/// Numeric leaves of a JSON document keyed by dotted path. Array elements
/// are numbered from 1, so `f1_target.2` is the second parsing layer.
pub fn flatten(value: &Value) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    walk(value, String::new(), &mut out);
    out
}

fn walk(value: &Value, prefix: String, out: &mut BTreeMap<String, f64>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", prefix, k)
        }
    };
    match value {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                out.insert(prefix, x);
            }
        }
        Value::Object(m) => {
            for (k, v) in m {
                walk(v, join(k), out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                walk(v, join(&(i + 1).to_string()), out);
            }
        }
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Whether a flattened key is bookkeeping (sentence counts, bucket bounds)
/// rather than a score.
fn is_bookkeeping(key: &str) -> bool {
    key == "sentences" || matches!(key.rsplit('.').next(), Some("lo" | "hi" | "count"))
}

/// Metrics from `report.json` in a run directory (or the file itself).
pub fn read_run_metrics(path: &Path) -> Result<BTreeMap<String, f64>> {
    let file = if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    };
    let value: Value =
        serde_json::from_str(&io::read_text(&file)?).with_context(|| format!("parsing {}", file.display()))?;
    let mut metrics = flatten(&value);
    metrics.retain(|k, _| !is_bookkeeping(k));
    Ok(metrics)
}

/// One row per metric present in at least one run, over the runs that have it.
pub fn aggregate(runs: &[BTreeMap<String, f64>]) -> Result<Vec<MetricRow>> {
    let mut by_metric: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for (k, v) in run {
            by_metric.entry(k).or_default().push(*v);
        }
    }
    by_metric
        .into_iter()
        .map(|(metric, values)| {
            Ok(MetricRow {
                metric: metric.to_string(),
                summary: Summary::of(&values)?,
            })
        })
        .collect()
}

pub fn format_table(rows: &[MetricRow]) -> String {
    let width = rows.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
    let mut out = format!(
        "{:<width$}  {:>12}  {:>12}  {:>12}  {:>3}\n",
        "metric", "median", "std", "max", "n"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>12.4}  {:>12.4}  {:>12.4}  {:>3}\n",
            r.metric, r.summary.median, r.summary.std, r.summary.max, r.summary.count
        ));
    }
    out
}
