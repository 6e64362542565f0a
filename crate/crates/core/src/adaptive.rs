//! Adaptive layer: tabular actor-critic TD learning over the previous-round
//! outcome (three states) and the three round-level actions.
//!
//! Per round the sequence is select (from the previous state) -> observe
//! reward and new state -> TD error -> critic update -> actor update. The TD
//! error is always computed from the values before either update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameState {
    High,
    Low,
    Tie,
}

impl GameState {
    pub const ALL: [GameState; 3] = [GameState::High, GameState::Low, GameState::Tie];

    /// State assumed before the first round of a dyad.
    pub const INITIAL: GameState = GameState::Tie;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            GameState::High => "high",
            GameState::Low => "low",
            GameState::Tie => "tie",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionChoice {
    GoHigh,
    GoLow,
    None,
}

impl ActionChoice {
    pub const ALL: [ActionChoice; 3] = [ActionChoice::GoHigh, ActionChoice::GoLow, ActionChoice::None];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ActionChoice::GoHigh => "go_high",
            ActionChoice::GoLow => "go_low",
            ActionChoice::None => "none",
        }
    }

    /// Resolves `None` with a fair coin between the two spots; other actions
    /// pass through without consuming randomness.
    pub fn resolve_none<R: Rng + ?Sized>(self, rng: &mut R) -> ActionChoice {
        match self {
            ActionChoice::None => {
                if rng.gen_bool(0.5) {
                    ActionChoice::GoHigh
                } else {
                    ActionChoice::GoLow
                }
            }
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    /// Discount factor.
    pub gamma: f64,
    /// Critic learning rate.
    pub eta: f64,
    /// Actor learning rate.
    pub delta: f64,
    /// Number of actions used by the add-one smoothing.
    pub k: usize,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            gamma: 0.40,
            eta: 0.15,
            delta: 0.45,
            k: 3,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(LabError::config(
                "adaptive.gamma",
                format!("adaptive.gamma ∈ [0,1] required, got {}", self.gamma),
            ));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(LabError::config(
                "adaptive.eta",
                format!("adaptive.eta > 0 required, got {}", self.eta),
            ));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(LabError::config(
                "adaptive.delta",
                format!("adaptive.delta > 0 required, got {}", self.delta),
            ));
        }
        if self.k != ActionChoice::ALL.len() {
            return Err(LabError::config("adaptive.k", "must equal the number of actions (3)"));
        }
        Ok(())
    }
}

/// Critic values and actor counts. Both start at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    /// V(s), indexed by `GameState::index`.
    pub values: [f64; 3],
    /// C(a, s), indexed `[state][action]`. Never negative.
    pub counts: [[f64; 3]; 3],
}

impl PolicyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, s: GameState) -> f64 {
        self.values[s.index()]
    }

    pub fn count(&self, a: ActionChoice, s: GameState) -> f64 {
        self.counts[s.index()][a.index()]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0) && self.counts.iter().flatten().all(|c| *c == 0.0)
    }
}

/// Add-one smoothed action distribution for state `s`, ordered as `ActionChoice::ALL`.
pub fn action_probabilities(policy: &PolicyTable, s: GameState, params: &LearningParams) -> [f64; 3] {
    let row = &policy.counts[s.index()];
    let denom: f64 = row.iter().sum::<f64>() + params.k as f64;
    row.map(|c| (c + 1.0) / denom)
}

/// Samples an action for the round. Consumes exactly one uniform draw.
pub fn select_action<R: Rng + ?Sized>(
    policy: &PolicyTable,
    s_prev: GameState,
    params: &LearningParams,
    rng: &mut R,
) -> ActionChoice {
    let probs = action_probabilities(policy, s_prev, params);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (action, p) in ActionChoice::ALL.into_iter().zip(probs) {
        acc += p;
        if u < acc {
            return action;
        }
    }
    ActionChoice::None
}

pub fn td_error(reward: f64, s_prev: GameState, s_t: GameState, policy: &PolicyTable, params: &LearningParams) -> f64 {
    reward + params.gamma * policy.value(s_t) - policy.value(s_prev)
}

pub fn update_critic(policy: &mut PolicyTable, s_prev: GameState, e: f64, params: &LearningParams) {
    policy.values[s_prev.index()] += params.eta * e;
}

pub fn update_actor(policy: &mut PolicyTable, a_t: ActionChoice, s_prev: GameState, e: f64, params: &LearningParams) {
    let c = &mut policy.counts[s_prev.index()][a_t.index()];
    *c = (*c + params.delta * e).max(0.0);
}

/// One full learning step; returns the TD error that was applied.
pub fn learn(
    policy: &mut PolicyTable,
    a_t: ActionChoice,
    s_prev: GameState,
    reward: f64,
    s_t: GameState,
    params: &LearningParams,
) -> f64 {
    let e = td_error(reward, s_prev, s_t, policy, params);
    update_critic(policy, s_prev, e, params);
    update_actor(policy, a_t, s_prev, e, params);
    e
}
