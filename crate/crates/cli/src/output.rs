//! report.json, fields/*.csv and metrics/*.bin.

use std::fs;
use std::path::Path;

use hermlab_core::field::sample_metric;
use hermlab_core::samples::write_metric_samples;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario::{MetricOutput, Outcome};

/// Writes the CSV fields and binary samples requested by the config and
/// returns the written paths (relative to `dir`) and skip notes.
pub fn write_artifacts(
    dir: &Path,
    outcome: &Outcome,
    fields: bool,
    metrics: bool,
    provenance: &Value,
) -> Result<Value, CliError> {
    let mut written_fields = vec![];
    let mut written_metrics = vec![];
    let mut notes = vec![];
    if fields {
        fs::create_dir_all(dir.join("fields"))?;
        for (name, report) in &outcome.fields {
            let rel = format!("fields/{name}.csv");
            fs::write(dir.join(&rel), report.points_csv())?;
            written_fields.push(rel);
        }
    }
    if metrics {
        fs::create_dir_all(dir.join("metrics"))?;
        for (name, m) in &outcome.metrics {
            let samples = match m {
                MetricOutput::Samples(s) => s.clone(),
                MetricOutput::Field(h, domain) => match sample_metric(h, domain) {
                    Ok(s) => s.samples,
                    Err(e) => {
                        notes.push(format!("{name}: not sampled ({e})"));
                        continue;
                    }
                },
            };
            let bad = samples.non_finite_indices().len();
            if bad > 0 && !matches!(m, MetricOutput::Samples(_)) {
                notes.push(format!("{name}: {bad} non-finite samples, not written"));
                continue;
            }
            let rel = format!("metrics/{name}.bin");
            let prov = json!({ "scenario": provenance, "metric": name });
            write_metric_samples(&dir.join(&rel), &samples, &prov)
                .map_err(|e| CliError::core(format!("writing {rel}"), e))?;
            written_metrics.push(rel);
        }
    }
    Ok(json!({ "fields": written_fields, "metrics": written_metrics, "notes": notes }))
}

pub fn write_report(dir: &Path, report: &Value) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("report.json"), text + "\n")?;
    Ok(())
}
