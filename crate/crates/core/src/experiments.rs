//! Batched studies over seeded dyads: the 2x2 benchmark, the layer
//! ablations and the payoff-difference sweep, with their statistical
//! batteries and the comparison against published means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::AgentVariant;
use crate::config::{derive_seed, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::game::{play_dyad, DyadResult, GameMode, PayoffScheme};
use crate::metrics::{dyad_metrics, DyadMetrics};
use crate::stats::{self, StatTestResult};

pub const HIGH_ROUNDS: u32 = 50;
pub const LOW_ROUNDS: u32 = 60;

/// High/low payoff pairs of the sweep, from equal payoffs to 32-1.
pub const SWEEP_PAYOFFS: [(f64, f64); 6] = [(1.0, 1.0), (2.0, 1.0), (4.0, 1.0), (8.0, 1.0), (16.0, 1.0), (32.0, 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Benchmark,
    Ablation,
    Sweep,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Benchmark => "benchmark",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

/// One cell of an experiment: a label and the fully specified config its
/// dyads run under.
#[derive(Debug, Clone)]
pub struct Condition {
    pub label: String,
    pub config: ExperimentConfig,
}

impl Condition {
    fn derived(
        base: &ExperimentConfig,
        label: String,
        mode: GameMode,
        payoffs: PayoffScheme,
        rounds: u32,
        variant: AgentVariant,
    ) -> Self {
        let mut config = base.clone();
        config.mode = mode;
        config.payoffs = payoffs;
        config.rounds = rounds;
        config.agents.variant = variant;
        Condition { label, config }
    }
}

fn payoff_tag(payoffs: &PayoffScheme) -> &'static str {
    if payoffs.high_value >= 4.0 * payoffs.low_value {
        "high"
    } else {
        "low"
    }
}

fn rounds_for(payoffs: &PayoffScheme) -> u32 {
    if payoff_tag(payoffs) == "high" {
        HIGH_ROUNDS
    } else {
        LOW_ROUNDS
    }
}

pub fn simulate_conditions(base: &ExperimentConfig) -> Vec<Condition> {
    let label = format!(
        "{}-{}-{}",
        base.mode.label(),
        base.payoffs.label(),
        base.agents.variant.label()
    );
    vec![Condition {
        label,
        config: base.clone(),
    }]
}

/// {ballistic, dynamic} x {high 4-1, low 2-1}. The ballistic arm is the
/// adaptive layer alone resolved as a matrix game.
pub fn benchmark_conditions(base: &ExperimentConfig) -> Vec<Condition> {
    let mut out = Vec::new();
    for (mode, variant) in [
        (GameMode::Ballistic, AgentVariant::AdaptiveOnly),
        (GameMode::Dynamic, AgentVariant::FullCrl),
    ] {
        for payoffs in [PayoffScheme::HIGH, PayoffScheme::LOW] {
            let label = format!("{}-{}", mode.label(), payoff_tag(&payoffs));
            out.push(Condition::derived(
                base,
                label,
                mode,
                payoffs,
                rounds_for(&payoffs),
                variant,
            ));
        }
    }
    out
}

/// Dynamic play with each single layer, plus the full agent for reference.
/// The full-agent cells reuse the benchmark labels, so their dyads match
/// the benchmark's exactly.
pub fn ablation_conditions(base: &ExperimentConfig) -> Vec<Condition> {
    let mut out = Vec::new();
    for variant in [
        AgentVariant::FullCrl,
        AgentVariant::ReactiveOnly,
        AgentVariant::AdaptiveOnly,
    ] {
        for payoffs in [PayoffScheme::HIGH, PayoffScheme::LOW] {
            let label = match variant {
                AgentVariant::FullCrl => format!("dynamic-{}", payoff_tag(&payoffs)),
                other => format!("{}-{}", other.label(), payoff_tag(&payoffs)),
            };
            out.push(Condition::derived(
                base,
                label,
                GameMode::Dynamic,
                payoffs,
                rounds_for(&payoffs),
                variant,
            ));
        }
    }
    out
}

pub fn sweep_conditions(base: &ExperimentConfig) -> Vec<Condition> {
    SWEEP_PAYOFFS
        .iter()
        .map(|&(h, l)| {
            let payoffs = PayoffScheme::new(h, l);
            Condition::derived(
                base,
                format!("sweep-{}", payoffs.label()),
                GameMode::Dynamic,
                payoffs,
                base.rounds,
                AgentVariant::FullCrl,
            )
        })
        .collect()
}

/// Flat per-dyad metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadRow {
    pub condition: String,
    pub dyad_id: u32,
    pub seed: u64,
    pub efficiency: f64,
    pub fairness: f64,
    pub stability: f64,
    pub tie_fraction: f64,
    pub timeout_fraction: f64,
    pub reliance_1: f64,
    pub reliance_2: f64,
    pub reliance: f64,
    pub high_wins_1: u32,
    pub high_wins_2: u32,
    pub longest_dominance_run: usize,
    pub longest_alternation_run: usize,
}

impl DyadRow {
    pub fn new(condition: &str, dyad_id: u32, seed: u64, m: &DyadMetrics) -> Self {
        DyadRow {
            condition: condition.to_string(),
            dyad_id,
            seed,
            efficiency: m.efficiency,
            fairness: m.fairness,
            stability: m.stability_mean_surprisal,
            tie_fraction: m.tie_fraction,
            timeout_fraction: m.timeout_fraction,
            reliance_1: m.reliance[0],
            reliance_2: m.reliance[1],
            reliance: m.mean_reliance(),
            high_wins_1: m.high_wins[0],
            high_wins_2: m.high_wins[1],
            longest_dominance_run: m.longest_dominance_run,
            longest_alternation_run: m.longest_alternation_run,
        }
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Efficiency => self.efficiency,
            Metric::Fairness => self.fairness,
            Metric::Stability => self.stability,
            Metric::TieFraction => self.tie_fraction,
            Metric::Reliance => self.reliance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Efficiency,
    Fairness,
    Stability,
    TieFraction,
    Reliance,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Efficiency,
        Metric::Fairness,
        Metric::Stability,
        Metric::TieFraction,
        Metric::Reliance,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Efficiency => "efficiency",
            Metric::Fairness => "fairness",
            Metric::Stability => "stability",
            Metric::TieFraction => "tie_fraction",
            Metric::Reliance => "reliance",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub label: String,
    pub mode: GameMode,
    pub variant: AgentVariant,
    pub payoffs: PayoffScheme,
    pub rounds: u32,
    pub dyads: u32,
    pub efficiency: Summary,
    pub fairness: Summary,
    pub stability: Summary,
    pub tie_fraction: Summary,
    pub reliance: Summary,
}

impl ConditionSummary {
    pub fn metric(&self, metric: Metric) -> Summary {
        match metric {
            Metric::Efficiency => self.efficiency,
            Metric::Fairness => self.fairness,
            Metric::Stability => self.stability,
            Metric::TieFraction => self.tie_fraction,
            Metric::Reliance => self.reliance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub metric: Metric,
    pub groups: Vec<String>,
    pub result: StatTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub provenance: Provenance,
    pub conditions: Vec<ConditionSummary>,
    pub dyads: Vec<DyadRow>,
    pub tests: Vec<TestRecord>,
}

impl ExperimentReport {
    pub fn condition(&self, label: &str) -> Option<&ConditionSummary> {
        self.conditions.iter().find(|c| c.label == label)
    }

    pub fn rows<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a DyadRow> + 'a {
        self.dyads.iter().filter(move |r| r.condition == label)
    }

    pub fn values(&self, label: &str, metric: Metric) -> Vec<f64> {
        self.rows(label).map(|r| r.metric(metric)).collect()
    }

    pub fn test(&self, metric: Metric, groups: &[&str]) -> Option<&StatTestResult> {
        self.tests
            .iter()
            .find(|t| t.metric == metric && t.groups.iter().map(String::as_str).eq(groups.iter().copied()))
            .map(|t| &t.result)
    }
}

/// Report plus the raw dyad logs it was computed from, in condition order.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub dyads: Vec<(String, Vec<DyadResult>)>,
}

/// Runs every dyad of one condition. Work items are independent and the
/// output is ordered by dyad index regardless of scheduling.
pub fn run_condition(
    condition: &Condition,
    master_seed: u64,
    parallelism: u32,
) -> Result<(Vec<DyadRow>, Vec<DyadResult>)> {
    let order: Vec<u32> = (0..condition.config.dyads).collect();
    run_condition_in_order(condition, master_seed, parallelism, &order)
}

/// Same as [`run_condition`] but dispatches dyads in the given order.
pub fn run_condition_in_order(
    condition: &Condition,
    master_seed: u64,
    parallelism: u32,
    order: &[u32],
) -> Result<(Vec<DyadRow>, Vec<DyadResult>)> {
    condition.config.validate()?;
    let config = &condition.config;
    let work = |&index: &u32| -> Result<(u32, DyadRow, DyadResult)> {
        let seed = derive_seed(master_seed, &condition.label, index);
        let result = play_dyad(config, seed)?;
        let metrics = dyad_metrics(&result, &config.payoffs, config.metrics.fairness)?;
        Ok((index, DyadRow::new(&condition.label, index, seed, &metrics), result))
    };
    let mut done: Vec<(u32, DyadRow, DyadResult)> = if parallelism <= 1 {
        order.iter().map(work).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism as usize)
            .build()
            .map_err(|e| LabError::Invariant(format!("thread pool: {e}")))?;
        pool.install(|| order.par_iter().map(work).collect::<Result<_>>())?
    };
    done.sort_by_key(|(i, _, _)| *i);
    Ok(done.into_iter().map(|(_, row, res)| (row, res)).unzip())
}

pub fn summarize(label: &str, config: &ExperimentConfig, rows: &[DyadRow]) -> Result<ConditionSummary> {
    let summary = |metric: Metric| -> Result<Summary> {
        let values: Vec<f64> = rows.iter().map(|r| r.metric(metric)).collect();
        let (mean, se) = stats::describe(&values)?;
        Ok(Summary { mean, se })
    };
    Ok(ConditionSummary {
        label: label.to_string(),
        mode: config.mode,
        variant: config.agents.variant,
        payoffs: config.payoffs,
        rounds: config.rounds,
        dyads: rows.len() as u32,
        efficiency: summary(Metric::Efficiency)?,
        fairness: summary(Metric::Fairness)?,
        stability: summary(Metric::Stability)?,
        tie_fraction: summary(Metric::TieFraction)?,
        reliance: summary(Metric::Reliance)?,
    })
}

fn run_conditions(kind: ExperimentKind, base: &ExperimentConfig, conditions: &[Condition]) -> Result<ExperimentRun> {
    base.validate()?;
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    let mut logs = Vec::new();
    for condition in conditions {
        let (cond_rows, results) = run_condition(condition, base.master_seed, base.parallelism)?;
        summaries.push(summarize(&condition.label, &condition.config, &cond_rows)?);
        rows.extend(cond_rows);
        logs.push((condition.label.clone(), results));
    }
    let mut report = ExperimentReport {
        experiment: kind,
        provenance: Provenance {
            config: base.canonical(),
            config_hash: base.fingerprint(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: base.master_seed,
        },
        conditions: summaries,
        dyads: rows,
        tests: Vec::new(),
    };
    report.tests = test_battery(&report)?;
    Ok(ExperimentRun { report, dyads: logs })
}

fn mwu(report: &ExperimentReport, metric: Metric, a: &str, b: &str) -> Result<TestRecord> {
    Ok(TestRecord {
        metric,
        groups: vec![a.to_string(), b.to_string()],
        result: stats::mann_whitney_u(&report.values(a, metric), &report.values(b, metric))?,
    })
}

fn kw(report: &ExperimentReport, metric: Metric, labels: &[&str]) -> Result<TestRecord> {
    let groups: Vec<Vec<f64>> = labels.iter().map(|l| report.values(l, metric)).collect();
    Ok(TestRecord {
        metric,
        groups: labels.iter().map(|s| s.to_string()).collect(),
        result: stats::kruskal_wallis(&groups)?,
    })
}

fn test_battery(report: &ExperimentReport) -> Result<Vec<TestRecord>> {
    let mut tests = Vec::new();
    match report.experiment {
        ExperimentKind::Simulate => {}
        ExperimentKind::Benchmark => {
            for metric in [Metric::Efficiency, Metric::Fairness, Metric::Stability] {
                tests.push(kw(
                    report,
                    metric,
                    &["ballistic-high", "ballistic-low", "dynamic-high", "dynamic-low"],
                )?);
                for tag in ["high", "low"] {
                    let (b, d) = (format!("ballistic-{tag}"), format!("dynamic-{tag}"));
                    tests.push(kw(report, metric, &[&b, &d])?);
                    tests.push(mwu(report, metric, &b, &d)?);
                }
            }
            tests.push(mwu(report, Metric::Stability, "dynamic-high", "dynamic-low")?);
        }
        ExperimentKind::Ablation => {
            for ablated in ["reactive_only", "adaptive_only"] {
                for tag in ["high", "low"] {
                    let (a, full) = (format!("{ablated}-{tag}"), format!("dynamic-{tag}"));
                    for metric in [
                        Metric::Efficiency,
                        Metric::Fairness,
                        Metric::Stability,
                        Metric::TieFraction,
                    ] {
                        tests.push(mwu(report, metric, &a, &full)?);
                    }
                }
            }
        }
        ExperimentKind::Sweep => {
            let labels: Vec<&str> = report.conditions.iter().map(|c| c.label.as_str()).collect();
            tests.push(kw(report, Metric::Reliance, &labels)?);
            let ratios: Vec<f64> = report
                .conditions
                .iter()
                .map(|c| c.payoffs.high_value / c.payoffs.low_value)
                .collect();
            let means: Vec<f64> = report.conditions.iter().map(|c| c.reliance.mean).collect();
            tests.push(TestRecord {
                metric: Metric::Reliance,
                groups: labels.iter().map(|s| s.to_string()).collect(),
                result: spearman_trend(&ratios, &means)?,
            });
        }
    }
    Ok(tests)
}

/// Spearman's rho with a one-sided exact permutation p-value (rho at least
/// as large as observed).
pub fn spearman_trend(x: &[f64], y: &[f64]) -> Result<StatTestResult> {
    let rho = stats::spearman(x, y)?;
    let mut perm: Vec<f64> = y.to_vec();
    let (mut hits, mut total) = (0u64, 0u64);
    permute(&mut perm, 0, &mut |p| {
        total += 1;
        if stats::spearman(x, p).is_ok_and(|r| r >= rho - 1e-12) {
            hits += 1;
        }
    });
    Ok(StatTestResult {
        statistic: rho,
        p_value: hits as f64 / total as f64,
        method: "spearman_permutation".into(),
        n: vec![x.len()],
    })
}

fn permute(v: &mut Vec<f64>, k: usize, visit: &mut dyn FnMut(&[f64])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn run_simulate(base: &ExperimentConfig) -> Result<ExperimentRun> {
    run_conditions(ExperimentKind::Simulate, base, &simulate_conditions(base))
}

pub fn run_benchmark(base: &ExperimentConfig) -> Result<ExperimentRun> {
    run_conditions(ExperimentKind::Benchmark, base, &benchmark_conditions(base))
}

pub fn run_ablation(base: &ExperimentConfig) -> Result<ExperimentRun> {
    run_conditions(ExperimentKind::Ablation, base, &ablation_conditions(base))
}

pub fn run_payoff_sweep(base: &ExperimentConfig) -> Result<ExperimentRun> {
    run_conditions(ExperimentKind::Sweep, base, &sweep_conditions(base))
}

/// Published model and human means for the benchmark cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceMean {
    pub metric: Metric,
    pub condition: &'static str,
    pub model_label: &'static str,
    pub model_mean: f64,
    pub human_mean: f64,
}

const fn reference(metric: Metric, condition: &'static str, model_mean: f64, human_mean: f64) -> ReferenceMean {
    let model_label = if matches!(condition.as_bytes()[0], b'b') {
        "TD-learning"
    } else {
        "CRL"
    };
    ReferenceMean {
        metric,
        condition,
        model_label,
        model_mean,
        human_mean,
    }
}

pub const REFERENCE_MEANS: [ReferenceMean; 12] = [
    reference(Metric::Efficiency, "ballistic-low", 0.45, 0.70),
    reference(Metric::Efficiency, "ballistic-high", 0.46, 0.69),
    reference(Metric::Efficiency, "dynamic-low", 0.86, 0.85),
    reference(Metric::Efficiency, "dynamic-high", 0.88, 0.84),
    reference(Metric::Fairness, "ballistic-low", 0.61, 0.61),
    reference(Metric::Fairness, "ballistic-high", 0.50, 0.50),
    reference(Metric::Fairness, "dynamic-low", 0.69, 0.69),
    reference(Metric::Fairness, "dynamic-high", 0.68, 0.69),
    reference(Metric::Stability, "ballistic-low", 1.18, 0.61),
    reference(Metric::Stability, "ballistic-high", 1.16, 0.61),
    reference(Metric::Stability, "dynamic-low", 1.17, 0.61),
    reference(Metric::Stability, "dynamic-high", 1.09, 0.56),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: Metric,
    pub condition: String,
    pub model: String,
    pub simulated_mean: f64,
    pub simulated_se: f64,
    pub reference_mean: f64,
    pub human_mean: f64,
    pub delta: f64,
}

/// Joins a benchmark report against [`REFERENCE_MEANS`].
pub fn reference_comparison(report: &ExperimentReport) -> Result<Vec<ComparisonRow>> {
    REFERENCE_MEANS
        .iter()
        .map(|r| {
            let cond = report.condition(r.condition).ok_or_else(|| {
                LabError::Shape(format!(
                    "{} report has no condition {}; reference means need a benchmark run",
                    report.experiment.label(),
                    r.condition
                ))
            })?;
            let s = cond.metric(r.metric);
            Ok(ComparisonRow {
                metric: r.metric,
                condition: r.condition.to_string(),
                model: r.model_label.to_string(),
                simulated_mean: s.mean,
                simulated_se: s.se,
                reference_mean: r.model_mean,
                human_mean: r.human_mean,
                delta: s.mean - r.model_mean,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationDelta {
    pub metric: Metric,
    pub ablated: String,
    pub full: String,
    pub ablated_mean: f64,
    pub full_mean: f64,
    pub delta: f64,
    pub p_value: f64,
}

/// Ablated minus full-agent means for each metric, with the MWU p-value.
pub fn ablation_deltas(report: &ExperimentReport) -> Result<Vec<AblationDelta>> {
    if report.experiment != ExperimentKind::Ablation {
        return Err(LabError::Shape(format!(
            "expected an ablation report, got {}",
            report.experiment.label()
        )));
    }
    let mut out = Vec::new();
    for ablated in ["reactive_only", "adaptive_only"] {
        for tag in ["high", "low"] {
            let (a, full) = (format!("{ablated}-{tag}"), format!("dynamic-{tag}"));
            let (ca, cf) = match (report.condition(&a), report.condition(&full)) {
                (Some(ca), Some(cf)) => (ca, cf),
                _ => return Err(LabError::Shape(format!("missing {a} or {full}"))),
            };
            for metric in [
                Metric::Efficiency,
                Metric::Fairness,
                Metric::Stability,
                Metric::TieFraction,
            ] {
                let p = report
                    .test(metric, &[&a, &full])
                    .map(|t| t.p_value)
                    .ok_or_else(|| LabError::Shape(format!("missing test {a} vs {full}")))?;
                out.push(AblationDelta {
                    metric,
                    ablated: a.clone(),
                    full: full.clone(),
                    ablated_mean: ca.metric(metric).mean,
                    full_mean: cf.metric(metric).mean,
                    delta: ca.metric(metric).mean - cf.metric(metric).mean,
                    p_value: p,
                });
            }
        }
    }
    Ok(out)
}
