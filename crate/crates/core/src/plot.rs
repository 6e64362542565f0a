//! Dependency-free SVG figures for finished runs: grouped metric bars,
//! per-dyad convention traces and the adaptive-reliance curve.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::experiments::{ExperimentReport, Metric};
use crate::game::OutcomeCategory;
use crate::metrics::{mean, surprisal_series};
use crate::output::{load_dyad_results, load_report, StoredCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Bars,
    Conventions,
    Reliance,
}

impl PlotKind {
    pub fn label(self) -> &'static str {
        match self {
            PlotKind::Bars => "bars",
            PlotKind::Conventions => "conventions",
            PlotKind::Reliance => "reliance",
        }
    }
}

impl FromStr for PlotKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bars" => Ok(PlotKind::Bars),
            "conventions" => Ok(PlotKind::Conventions),
            "reliance" => Ok(PlotKind::Reliance),
            _ => Err(LabError::config(
                "kind",
                format!("unknown plot kind {s:?} (expected bars, conventions or reliance)"),
            )),
        }
    }
}

const P1_COLOR: &str = "#c0392b";
const P2_COLOR: &str = "#2e6da4";
const TIE_COLOR: &str = "#111111";
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Svg {
            body: String::new(),
            width,
            height,
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1.2"/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{escaped}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Plot area with a linear y axis from 0 to `y_max`.
struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    y_max: f64,
}

impl Panel {
    fn y_of(&self, v: f64) -> f64 {
        self.y + self.h - (v / self.y_max).clamp(0.0, 1.0) * self.h
    }

    fn axes(&self, svg: &mut Svg, ticks: usize) {
        svg.line(self.x, self.y, self.x, self.y + self.h, "#333");
        svg.line(self.x, self.y + self.h, self.x + self.w, self.y + self.h, "#333");
        for i in 0..=ticks {
            let v = self.y_max * i as f64 / ticks as f64;
            let y = self.y_of(v);
            svg.line(self.x - 4.0, y, self.x, y, "#333");
            svg.text(self.x - 6.0, y + 3.0, 9.0, "end", &format!("{v:.2}"));
        }
    }
}

/// Conditions grouped by payoff label, in first-appearance order.
fn payoff_groups(report: &ExperimentReport) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, c) in report.conditions.iter().enumerate() {
        let label = c.payoffs.label();
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, members)) => members.push(i),
            None => groups.push((label, vec![i])),
        }
    }
    groups
}

/// One row per payoff condition, one column per metric (efficiency,
/// fairness, stability); bars are conditions with standard-error whiskers.
pub fn bars_svg(report: &ExperimentReport) -> Result<String> {
    if report.conditions.is_empty() {
        return Err(LabError::Empty("report has no conditions"));
    }
    let metrics = [Metric::Efficiency, Metric::Fairness, Metric::Stability];
    let groups = payoff_groups(report);
    let (pw, ph) = (260.0, 200.0);
    let mut svg = Svg::new(
        60.0 + pw * 3.0 + 40.0 * 2.0 + 20.0,
        40.0 + groups.len() as f64 * (ph + 90.0),
    );
    for (row, (payoff, members)) in groups.iter().enumerate() {
        for (col, metric) in metrics.iter().enumerate() {
            let y_max = match metric {
                Metric::Stability => 1.6,
                _ => 1.0,
            };
            let panel = Panel {
                x: 60.0 + col as f64 * (pw + 40.0),
                y: 40.0 + row as f64 * (ph + 90.0),
                w: pw,
                h: ph,
                y_max,
            };
            panel.axes(&mut svg, 4);
            svg.text(
                panel.x + pw / 2.0,
                panel.y - 10.0,
                12.0,
                "middle",
                &format!("{} ({payoff})", metric.label()),
            );
            let slot = pw / members.len() as f64;
            for (k, &ci) in members.iter().enumerate() {
                let c = &report.conditions[ci];
                let s = c.metric(*metric);
                let x = panel.x + k as f64 * slot + slot * 0.15;
                let w = slot * 0.7;
                let top = panel.y_of(s.mean);
                svg.rect(x, top, w, panel.y + ph - top, PALETTE[k % PALETTE.len()]);
                let cx = x + w / 2.0;
                let (lo, hi) = (panel.y_of(s.mean - s.se), panel.y_of(s.mean + s.se));
                svg.line(cx, lo, cx, hi, "#000");
                svg.line(cx - 5.0, lo, cx + 5.0, lo, "#000");
                svg.line(cx - 5.0, hi, cx + 5.0, hi, "#000");
                svg.text(cx, panel.y + ph + 14.0, 9.0, "middle", &c.label);
            }
        }
    }
    Ok(svg.finish())
}

/// Per-round high-reward winner bars with the surprisal trace underneath.
pub fn conventions_svg(stored: &[StoredCondition], condition: Option<&str>, dyad: u32) -> Result<String> {
    let chosen = match condition {
        Some(label) => stored.iter().find(|c| c.condition == label).ok_or_else(|| {
            let known: Vec<&str> = stored.iter().map(|c| c.condition.as_str()).collect();
            LabError::NotFound(format!("unknown condition {label:?}; run has {}", known.join(", ")))
        })?,
        None => stored
            .iter()
            .find(|c| c.condition.contains("dynamic") && c.condition.contains("high"))
            .or_else(|| stored.first())
            .ok_or(LabError::Empty("run has no conditions"))?,
    };
    let n = chosen.dyads.len();
    let result = chosen.dyads.get(dyad as usize).ok_or_else(|| {
        LabError::NotFound(format!(
            "dyad {dyad} not in condition {}; valid dyad ids are 0..={}",
            chosen.condition,
            n.saturating_sub(1)
        ))
    })?;
    let rounds = result.outcomes.len().max(1);
    let series = surprisal_series(result);
    let (w, bar_h, trace_h) = (720.0, 60.0, 180.0);
    let mut svg = Svg::new(w + 100.0, bar_h + trace_h + 130.0);
    svg.text(
        60.0 + w / 2.0,
        20.0,
        13.0,
        "middle",
        &format!("{} dyad {dyad}: high-reward winner per round", chosen.condition),
    );
    let slot = w / rounds as f64;
    for (i, o) in result.outcomes.iter().enumerate() {
        let fill = match o.category {
            OutcomeCategory::P1High => P1_COLOR,
            OutcomeCategory::P2High => P2_COLOR,
            OutcomeCategory::Tie => TIE_COLOR,
        };
        svg.rect(60.0 + i as f64 * slot + 0.5, 35.0, (slot - 1.0).max(0.5), bar_h, fill);
    }
    let legend_y = 35.0 + bar_h + 16.0;
    for (k, (label, color)) in [("player 1", P1_COLOR), ("player 2", P2_COLOR), ("tie", TIE_COLOR)]
        .iter()
        .enumerate()
    {
        let x = 60.0 + k as f64 * 110.0;
        svg.rect(x, legend_y - 9.0, 10.0, 10.0, color);
        svg.text(x + 14.0, legend_y, 10.0, "start", label);
    }
    let y_max = series.iter().cloned().fold(3.0_f64.ln(), f64::max).ceil().max(1.0);
    let panel = Panel {
        x: 60.0,
        y: legend_y + 20.0,
        w,
        h: trace_h,
        y_max,
    };
    panel.axes(&mut svg, 4);
    let points: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| (60.0 + (i as f64 + 0.5) * slot, panel.y_of(*s)))
        .collect();
    svg.polyline(&points, "#333");
    svg.text(
        60.0 + w / 2.0,
        panel.y + trace_h + 24.0,
        11.0,
        "middle",
        &format!("surprisal (nats) per round, mean {:.3}", mean(&series)),
    );
    Ok(svg.finish())
}

/// Mean adaptive-layer reliance per condition with standard-error bars.
pub fn reliance_svg(report: &ExperimentReport) -> Result<String> {
    if report.conditions.is_empty() {
        return Err(LabError::Empty("report has no conditions"));
    }
    let (w, h) = (560.0, 300.0);
    let mut svg = Svg::new(w + 100.0, h + 90.0);
    let panel = Panel {
        x: 60.0,
        y: 30.0,
        w,
        h,
        y_max: 1.0,
    };
    panel.axes(&mut svg, 5);
    svg.text(60.0 + w / 2.0, 18.0, 13.0, "middle", "adaptive-layer reliance");
    let n = report.conditions.len();
    let x_of = |i: usize| 60.0 + w * (i as f64 + 0.5) / n as f64;
    let points: Vec<(f64, f64)> = report
        .conditions
        .iter()
        .enumerate()
        .map(|(i, c)| (x_of(i), panel.y_of(c.reliance.mean)))
        .collect();
    svg.polyline(&points, PALETTE[0]);
    for (i, c) in report.conditions.iter().enumerate() {
        let x = x_of(i);
        let (lo, hi) = (
            panel.y_of(c.reliance.mean - c.reliance.se),
            panel.y_of(c.reliance.mean + c.reliance.se),
        );
        svg.line(x, lo, x, hi, "#000");
        svg.line(x - 4.0, lo, x + 4.0, lo, "#000");
        svg.line(x - 4.0, hi, x + 4.0, hi, "#000");
        svg.circle(x, panel.y_of(c.reliance.mean), 3.5, PALETTE[0]);
        svg.text(x, 30.0 + h + 16.0, 10.0, "middle", &c.payoffs.label());
    }
    svg.line(60.0, panel.y_of(2.0 / 3.0), 60.0 + w, panel.y_of(2.0 / 3.0), "#bbbbbb");
    Ok(svg.finish())
}

/// Renders `kind` for the run in `dir` and writes the SVG next to the report.
pub fn plot_run(dir: &Path, kind: PlotKind, condition: Option<&str>, dyad: u32) -> Result<PathBuf> {
    let (name, svg) = match kind {
        PlotKind::Bars => ("bars.svg".to_string(), bars_svg(&load_report(dir)?)?),
        PlotKind::Reliance => ("reliance.svg".to_string(), reliance_svg(&load_report(dir)?)?),
        PlotKind::Conventions => (
            format!("conventions-dyad{dyad}.svg"),
            conventions_svg(&load_dyad_results(dir)?, condition, dyad)?,
        ),
    };
    let path = dir.join(name);
    std::fs::write(&path, svg).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}
