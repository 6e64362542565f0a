//! Run directories: reports, flat CSV logs and the manifest that closes a run.
//!
//! Every float written here goes through [`round_sig`] so reruns diff cleanly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::experiments::{ablation_deltas, reference_comparison, ExperimentKind, ExperimentReport, ExperimentRun};
use crate::game::DyadResult;

pub const REPORT_FILE: &str = "report.json";
pub const DYADS_FILE: &str = "dyads.csv";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const DYAD_RESULTS_FILE: &str = "dyad_results.json";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const ABLATION_FILE: &str = "ablation_deltas.csv";
pub const RELIANCE_FILE: &str = "reliance.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Significant digits kept in every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    round_sig(x).to_string()
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)?;
    round_floats(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub version: String,
    pub created_at: String,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
}

/// `runs/<UTC timestamp>-<config hash>` under `root`.
pub fn default_run_dir(root: &Path, config_hash: &str) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    root.join("runs").join(format!("{stamp}-{config_hash}"))
}

struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl RunWriter {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = to_rounded_json(value)?;
        self.write_text(name, &text)
    }

    fn write_csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header)?;
        for row in rows {
            out.write_record(row)?;
        }
        let bytes = out
            .into_inner()
            .map_err(|e| LabError::Invariant(format!("csv buffer: {e}")))?;
        let text = String::from_utf8(bytes).map_err(|e| LabError::Invariant(e.to_string()))?;
        self.write_text(name, &text)
    }

    /// Writes the manifest last, after checking that every artifact exists.
    fn finish(self, report: &ExperimentReport) -> Result<RunManifest> {
        for name in &self.artifacts {
            if !self.dir.join(name).is_file() {
                return Err(LabError::Invariant(format!("artifact {name} missing before manifest")));
            }
        }
        let run_id = self
            .dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| report.provenance.config_hash.clone());
        let manifest = RunManifest {
            run_id,
            experiment: report.experiment,
            config_hash: report.provenance.config_hash.clone(),
            version: report.provenance.version.clone(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            artifacts: self.artifacts,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = to_rounded_json(&manifest)?;
        fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
        Ok(manifest)
    }
}

fn dyad_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    report
        .dyads
        .iter()
        .map(|r| {
            vec![
                r.condition.clone(),
                r.dyad_id.to_string(),
                r.seed.to_string(),
                fmt_num(r.efficiency),
                fmt_num(r.fairness),
                fmt_num(r.stability),
                fmt_num(r.tie_fraction),
                fmt_num(r.timeout_fraction),
                fmt_num(r.reliance_1),
                fmt_num(r.reliance_2),
                fmt_num(r.reliance),
                r.high_wins_1.to_string(),
                r.high_wins_2.to_string(),
                r.longest_dominance_run.to_string(),
                r.longest_alternation_run.to_string(),
            ]
        })
        .collect()
}

const DYAD_HEADER: [&str; 15] = [
    "condition",
    "dyad_id",
    "seed",
    "efficiency",
    "fairness",
    "stability",
    "tie_fraction",
    "timeout_fraction",
    "reliance_1",
    "reliance_2",
    "reliance",
    "high_wins_1",
    "high_wins_2",
    "longest_dominance_run",
    "longest_alternation_run",
];

fn round_rows(run: &ExperimentRun) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for (label, dyads) in &run.dyads {
        let summary = run
            .report
            .condition(label)
            .ok_or_else(|| LabError::Shape(format!("no summary for condition {label}")))?;
        for (dyad_id, dyad) in dyads.iter().enumerate() {
            for (round, o) in dyad.outcomes.iter().enumerate() {
                rows.push(vec![
                    label.clone(),
                    dyad_id.to_string(),
                    (round + 1).to_string(),
                    summary.mode.label().to_string(),
                    summary.payoffs.label(),
                    o.actions[0].label().to_string(),
                    o.actions[1].label().to_string(),
                    o.category.label().to_string(),
                    fmt_num(o.rewards[0]),
                    fmt_num(o.rewards[1]),
                    fmt_num(o.duration),
                    match o.end {
                        crate::game::EndKind::Reached => "reached",
                        crate::game::EndKind::Timeout => "timeout",
                    }
                    .to_string(),
                ]);
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredCondition {
    pub condition: String,
    pub dyads: Vec<DyadResult>,
}

/// Writes every artifact of `run` into `dir`, manifest last.
pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<RunManifest> {
    let report = &run.report;
    let mut w = RunWriter::create(dir)?;
    w.write_json(REPORT_FILE, report)?;
    w.write_csv(DYADS_FILE, &DYAD_HEADER, dyad_rows(report))?;
    w.write_csv(
        ROUNDS_FILE,
        &[
            "condition",
            "dyad_id",
            "round",
            "mode",
            "payoff_condition",
            "action1",
            "action2",
            "category",
            "r1",
            "r2",
            "duration",
            "end",
        ],
        round_rows(run)?,
    )?;
    let stored: Vec<StoredCondition> = run
        .dyads
        .iter()
        .map(|(label, dyads)| StoredCondition {
            condition: label.clone(),
            dyads: dyads.clone(),
        })
        .collect();
    w.write_json(DYAD_RESULTS_FILE, &stored)?;

    match report.experiment {
        ExperimentKind::Benchmark => {
            let rows = reference_comparison(report)?
                .into_iter()
                .map(|c| {
                    vec![
                        c.metric.label().to_string(),
                        c.condition,
                        c.model,
                        fmt_num(c.simulated_mean),
                        fmt_num(c.simulated_se),
                        fmt_num(c.reference_mean),
                        fmt_num(c.human_mean),
                        fmt_num(c.delta),
                    ]
                })
                .collect();
            w.write_csv(
                COMPARISON_FILE,
                &[
                    "metric",
                    "condition",
                    "model",
                    "simulated_mean",
                    "simulated_se",
                    "reference_mean",
                    "human_mean",
                    "delta",
                ],
                rows,
            )?;
        }
        ExperimentKind::Ablation => {
            let rows = ablation_deltas(report)?
                .into_iter()
                .map(|d| {
                    vec![
                        d.metric.label().to_string(),
                        d.ablated,
                        d.full,
                        fmt_num(d.ablated_mean),
                        fmt_num(d.full_mean),
                        fmt_num(d.delta),
                        fmt_num(d.p_value),
                    ]
                })
                .collect();
            w.write_csv(
                ABLATION_FILE,
                &[
                    "metric",
                    "ablated",
                    "full",
                    "ablated_mean",
                    "full_mean",
                    "delta",
                    "p_value",
                ],
                rows,
            )?;
        }
        ExperimentKind::Sweep => {
            let rows = report
                .conditions
                .iter()
                .map(|c| {
                    vec![
                        c.label.clone(),
                        fmt_num(c.payoffs.high_value),
                        fmt_num(c.payoffs.low_value),
                        fmt_num(c.reliance.mean),
                        fmt_num(c.reliance.se),
                        c.dyads.to_string(),
                    ]
                })
                .collect();
            w.write_csv(
                RELIANCE_FILE,
                &[
                    "condition",
                    "high_value",
                    "low_value",
                    "reliance_mean",
                    "reliance_se",
                    "dyads",
                ],
                rows,
            )?;
        }
        ExperimentKind::Simulate => {}
    }
    w.finish(report)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn require_run(dir: &Path) -> Result<()> {
    if dir.join(REPORT_FILE).is_file() {
        Ok(())
    } else {
        Err(LabError::NotFound(format!(
            "{} is not a completed run directory (no {REPORT_FILE})",
            dir.display()
        )))
    }
}

pub fn load_report(dir: &Path) -> Result<ExperimentReport> {
    require_run(dir)?;
    read_json(&dir.join(REPORT_FILE))
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest> {
    read_json(&dir.join(MANIFEST_FILE))
}

pub fn load_dyad_results(dir: &Path) -> Result<Vec<StoredCondition>> {
    require_run(dir)?;
    read_json(&dir.join(DYAD_RESULTS_FILE))
}

/// Reads one metric column of a per-dyad CSV, grouped by the `condition` column.
pub fn read_metric_column(path: &Path, metric: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Invariant(format!("{other:?}")),
    })?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::config(name, format!("no such column in {}", path.display())))
    };
    let cond_col = find("condition")?;
    let metric_col = find(metric)?;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let label = &record[cond_col];
        let raw = &record[metric_col];
        let value: f64 = raw
            .parse()
            .map_err(|_| LabError::config(metric, format!("non-numeric value {raw:?}")))?;
        match groups.iter_mut().find(|(l, _)| l == label) {
            Some((_, values)) => values.push(value),
            None => groups.push((label.to_string(), vec![value])),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(123456.7890123456), 123456.789012);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
        assert_eq!(fmt_num(2.0), "2");
    }

    #[test]
    fn rounded_json_touches_only_floats() {
        let text = to_rounded_json(&serde_json::json!({"a": [0.30000000000000004, 7], "b": "x"})).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["a"][0], 0.3);
        assert_eq!(v["a"][1], 7);
        assert_eq!(v["b"], "x");
    }
}
