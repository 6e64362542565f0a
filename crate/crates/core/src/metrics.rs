//! Per-dyad scoring: efficiency, fairness and surprisal-based stability,
//! plus convention detectors used by the reports.

use serde::{Deserialize, Serialize};

use crate::adaptive::ActionChoice;
use crate::error::{LabError, Result};
use crate::game::{DyadResult, OutcomeCategory, PayoffScheme};

/// How high-reward wins are compared between the two players.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessRule {
    /// 1 - |n1 - n2| / (n1 + n2)
    #[default]
    L1,
    /// min(n1, n2) / max(n1, n2)
    #[serde(rename = "minmax")]
    MinMax,
}

/// Collective reward over the maximum collectable reward.
pub fn efficiency(dyad: &DyadResult, payoffs: &PayoffScheme) -> Result<f64> {
    if dyad.outcomes.is_empty() {
        return Err(LabError::Empty("dyad has no rounds"));
    }
    let earned: f64 = dyad.outcomes.iter().map(|o| o.rewards[0] + o.rewards[1]).sum();
    Ok(earned / (dyad.rounds() as f64 * payoffs.max_total()))
}

pub fn high_wins(categories: impl IntoIterator<Item = OutcomeCategory>) -> (u32, u32) {
    categories.into_iter().fold((0, 0), |(n1, n2), c| match c {
        OutcomeCategory::P1High => (n1 + 1, n2),
        OutcomeCategory::P2High => (n1, n2 + 1),
        OutcomeCategory::Tie => (n1, n2),
    })
}

pub fn fairness_from_counts(n1: u32, n2: u32, rule: FairnessRule) -> f64 {
    if n1 + n2 == 0 {
        return 1.0;
    }
    let (n1, n2) = (f64::from(n1), f64::from(n2));
    match rule {
        FairnessRule::L1 => 1.0 - (n1 - n2).abs() / (n1 + n2),
        FairnessRule::MinMax => n1.min(n2) / n1.max(n2),
    }
}

pub fn fairness(dyad: &DyadResult, rule: FairnessRule) -> f64 {
    let (n1, n2) = high_wins(dyad.categories());
    fairness_from_counts(n1, n2, rule)
}

/// Surprisal (nats) of each outcome under an add-one smoothed running
/// frequency of the outcomes seen so far.
pub fn surprisal_of(categories: &[OutcomeCategory]) -> Vec<f64> {
    let k = OutcomeCategory::ALL.len() as f64;
    let mut counts = [0u32; 3];
    categories
        .iter()
        .enumerate()
        .map(|(seen, c)| {
            let p = (f64::from(counts[c.index()]) + 1.0) / (seen as f64 + k);
            counts[c.index()] += 1;
            -p.ln()
        })
        .collect()
}

pub fn surprisal_series(dyad: &DyadResult) -> Vec<f64> {
    let categories: Vec<_> = dyad.categories().collect();
    surprisal_of(&categories)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Longest streak of consecutive rounds won (high reward) by the same player.
pub fn longest_dominance_run(categories: &[OutcomeCategory]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut last = None;
    for &c in categories {
        if c == OutcomeCategory::Tie {
            run = 0;
            last = None;
            continue;
        }
        run = if last == Some(c) { run + 1 } else { 1 };
        last = Some(c);
        best = best.max(run);
    }
    best
}

/// Longest streak of consecutive rounds whose high-reward winner alternates.
pub fn longest_alternation_run(categories: &[OutcomeCategory]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut last = None;
    for &c in categories {
        if c == OutcomeCategory::Tie {
            run = 0;
            last = None;
            continue;
        }
        run = match last {
            Some(prev) if prev != c => run + 1,
            _ => 1,
        };
        last = Some(c);
        best = best.max(run);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadMetrics {
    pub efficiency: f64,
    pub fairness: f64,
    pub stability_mean_surprisal: f64,
    pub surprisal_series: Vec<f64>,
    pub tie_fraction: f64,
    pub timeout_fraction: f64,
    /// Share of rounds in which each agent's adaptive layer chose a spot.
    pub reliance: [f64; 2],
    pub high_wins: [u32; 2],
    pub longest_dominance_run: usize,
    pub longest_alternation_run: usize,
}

impl DyadMetrics {
    pub fn mean_reliance(&self) -> f64 {
        (self.reliance[0] + self.reliance[1]) / 2.0
    }
}

pub fn dyad_metrics(dyad: &DyadResult, payoffs: &PayoffScheme, rule: FairnessRule) -> Result<DyadMetrics> {
    let efficiency = efficiency(dyad, payoffs)?;
    let categories: Vec<_> = dyad.categories().collect();
    let series = surprisal_of(&categories);
    let rounds = dyad.rounds() as f64;
    let (n1, n2) = high_wins(categories.iter().copied());
    let ties = categories.iter().filter(|c| **c == OutcomeCategory::Tie).count();
    let timeouts = dyad
        .outcomes
        .iter()
        .filter(|o| o.end == crate::game::EndKind::Timeout)
        .count();
    let nones = [0, 1].map(|i| {
        dyad.outcomes
            .iter()
            .filter(|o| o.actions[i] == ActionChoice::None)
            .count()
    });
    if nones.iter().zip(dyad.none_counts).any(|(a, b)| *a as u32 != b) {
        return Err(LabError::Invariant("none counts disagree with round log".into()));
    }
    Ok(DyadMetrics {
        efficiency,
        fairness: fairness_from_counts(n1, n2, rule),
        stability_mean_surprisal: mean(&series),
        surprisal_series: series,
        tie_fraction: ties as f64 / rounds,
        timeout_fraction: timeouts as f64 / rounds,
        reliance: dyad.none_counts.map(|n| (rounds - f64::from(n)) / rounds),
        high_wins: [n1, n2],
        longest_dominance_run: longest_dominance_run(&categories),
        longest_alternation_run: longest_alternation_run(&categories),
    })
}
