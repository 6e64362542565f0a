//! A CRL agent: the adaptive layer picks a round-level action and gates the
//! reactive layer through an inhibition mask. Also hosts the two ablated
//! variants.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adaptive::{self, ActionChoice, GameState, LearningParams, PolicyTable};
use crate::reactive::{compose_behaviors, InhibitionMask, ReactiveParams};
use crate::sim::{MotorCommand, SensorReading};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentVariant {
    #[default]
    FullCrl,
    ReactiveOnly,
    AdaptiveOnly,
}

impl AgentVariant {
    pub fn label(self) -> &'static str {
        match self {
            AgentVariant::FullCrl => "full_crl",
            AgentVariant::ReactiveOnly => "reactive_only",
            AgentVariant::AdaptiveOnly => "adaptive_only",
        }
    }

    pub fn learns(self) -> bool {
        !matches!(self, AgentVariant::ReactiveOnly)
    }
}

/// Inhibition implied by an executed action.
pub fn mask_for(action: ActionChoice) -> InhibitionMask {
    match action {
        ActionChoice::GoHigh => InhibitionMask {
            inhibit_low_seek: true,
            ..InhibitionMask::NONE
        },
        ActionChoice::GoLow => InhibitionMask {
            inhibit_high_seek: true,
            ..InhibitionMask::NONE
        },
        ActionChoice::None => InhibitionMask::NONE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRoundPlan {
    /// What the adaptive layer sampled; this is what gets credited by
    /// learning and counted for reliance.
    pub chosen: ActionChoice,
    /// What the body executes. Differs from `chosen` only for the
    /// adaptive-only variant, which resolves `None` with a coin.
    pub action: ActionChoice,
    pub mask: InhibitionMask,
}

impl AgentRoundPlan {
    /// The mask agrees with the executed action. Avoidance may only be
    /// inhibited by the adaptive-only variant.
    pub fn is_consistent(&self, variant: AgentVariant) -> bool {
        let seek_ok = {
            let m = mask_for(self.action);
            m.inhibit_high_seek == self.mask.inhibit_high_seek && m.inhibit_low_seek == self.mask.inhibit_low_seek
        };
        let avoid_ok = self.mask.inhibit_avoidance == (variant == AgentVariant::AdaptiveOnly);
        seek_ok && avoid_ok
    }
}

pub fn begin_round<R: Rng + ?Sized>(
    variant: AgentVariant,
    policy: &PolicyTable,
    s_prev: GameState,
    params: &LearningParams,
    rng: &mut R,
) -> AgentRoundPlan {
    match variant {
        AgentVariant::FullCrl => {
            let chosen = adaptive::select_action(policy, s_prev, params, rng);
            AgentRoundPlan {
                chosen,
                action: chosen,
                mask: mask_for(chosen),
            }
        }
        AgentVariant::ReactiveOnly => AgentRoundPlan {
            chosen: ActionChoice::None,
            action: ActionChoice::None,
            mask: InhibitionMask::NONE,
        },
        AgentVariant::AdaptiveOnly => {
            let chosen = adaptive::select_action(policy, s_prev, params, rng);
            let action = chosen.resolve_none(rng);
            AgentRoundPlan {
                chosen,
                action,
                mask: InhibitionMask {
                    inhibit_avoidance: true,
                    ..mask_for(action)
                },
            }
        }
    }
}

/// Reactive composition under the plan's mask plus per-wheel Gaussian noise.
/// Always consumes two normal draws so streams stay aligned across noise levels.
pub fn control_step<R: Rng + ?Sized>(
    plan: &AgentRoundPlan,
    reading: &SensorReading,
    params: ReactiveParams,
    noise_sigma: f64,
    rng: &mut R,
) -> MotorCommand {
    let base = compose_behaviors(reading, plan.mask, params);
    let nl: f64 = rng.sample(StandardNormal);
    let nr: f64 = rng.sample(StandardNormal);
    if noise_sigma == 0.0 {
        return base;
    }
    MotorCommand::new(base.left + noise_sigma * nl, base.right + noise_sigma * nr).clamped()
}

/// Applies the round's learning update. Returns the TD error, or `None`
/// for variants that do not learn.
#[allow(clippy::too_many_arguments)]
pub fn end_round(
    variant: AgentVariant,
    policy: &mut PolicyTable,
    a_t: ActionChoice,
    s_prev: GameState,
    r_t: f64,
    s_t: GameState,
    params: &LearningParams,
) -> Option<f64> {
    variant
        .learns()
        .then(|| adaptive::learn(policy, a_t, s_prev, r_t, s_t, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SensorPair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const P: LearningParams = LearningParams {
        gamma: 0.40,
        eta: 0.15,
        delta: 0.45,
        k: 3,
    };

    #[test]
    fn full_crl_fresh_policy_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = PolicyTable::new();
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let plan = begin_round(AgentVariant::FullCrl, &policy, GameState::Tie, &P, &mut rng);
            assert!(plan.is_consistent(AgentVariant::FullCrl));
            assert_eq!(plan.chosen, plan.action);
            counts[plan.action.index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
        }
    }

    #[test]
    fn reactive_only_never_inhibits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in GameState::ALL {
            let plan = begin_round(AgentVariant::ReactiveOnly, &PolicyTable::new(), s, &P, &mut rng);
            assert_eq!(plan.action, ActionChoice::None);
            assert_eq!(plan.mask, InhibitionMask::NONE);
        }
    }

    #[test]
    fn adaptive_only_resolves_none_with_a_coin() {
        let mut policy = PolicyTable::new();
        policy.counts[GameState::Tie.index()][ActionChoice::None.index()] = 1e12;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut high = 0usize;
        let n = 20_000;
        for _ in 0..n {
            let plan = begin_round(AgentVariant::AdaptiveOnly, &policy, GameState::Tie, &P, &mut rng);
            assert_eq!(plan.chosen, ActionChoice::None);
            assert_ne!(plan.action, ActionChoice::None);
            assert!(plan.mask.inhibit_avoidance);
            assert!(plan.is_consistent(AgentVariant::AdaptiveOnly));
            if plan.action == ActionChoice::GoHigh {
                high += 1;
            }
        }
        assert!((high as f64 / n as f64 - 0.5).abs() < 0.015);
    }

    #[test]
    fn inhibited_spot_contributes_nothing() {
        let plan = AgentRoundPlan {
            chosen: ActionChoice::GoHigh,
            action: ActionChoice::GoHigh,
            mask: mask_for(ActionChoice::GoHigh),
        };
        let reading = SensorReading {
            low: SensorPair::new(0.8, 0.1),
            ..SensorReading::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cmd = control_step(&plan, &reading, ReactiveParams::default(), 0.0, &mut rng);
        assert_eq!(cmd, MotorCommand::new(0.3, 0.3));
    }

    #[test]
    fn zero_noise_matches_composition() {
        let plan = AgentRoundPlan {
            chosen: ActionChoice::None,
            action: ActionChoice::None,
            mask: InhibitionMask::NONE,
        };
        let reading = SensorReading {
            high: SensorPair::new(0.4, 0.0),
            low: SensorPair::new(0.0, 0.4),
            agent: SensorPair::new(0.1, 0.3),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cmd = control_step(&plan, &reading, ReactiveParams::default(), 0.0, &mut rng);
        assert_eq!(
            cmd,
            compose_behaviors(&reading, InhibitionMask::NONE, ReactiveParams::default())
        );

        let symmetric = SensorReading {
            high: SensorPair::new(0.6, 0.2),
            low: SensorPair::new(0.2, 0.6),
            agent: SensorPair::default(),
        };
        let cmd = control_step(&plan, &symmetric, ReactiveParams::default(), 0.0, &mut rng);
        assert!((cmd.left - 0.3).abs() < 1e-12 && (cmd.right - 0.3).abs() < 1e-12);
    }

    #[test]
    fn noisy_step_stays_clamped() {
        let plan = AgentRoundPlan {
            chosen: ActionChoice::None,
            action: ActionChoice::None,
            mask: InhibitionMask::NONE,
        };
        let reading = SensorReading {
            high: SensorPair::new(1.0, 0.0),
            ..SensorReading::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let cmd = control_step(&plan, &reading, ReactiveParams::default(), 0.5, &mut rng);
            assert!(cmd.left.abs() <= 1.0 && cmd.right.abs() <= 1.0);
        }
    }

    #[test]
    fn end_round_examples() {
        let mut policy = PolicyTable::new();
        assert!(end_round(
            AgentVariant::ReactiveOnly,
            &mut policy,
            ActionChoice::None,
            GameState::Tie,
            4.0,
            GameState::High,
            &P
        )
        .is_none());
        assert!(policy.is_zero());

        end_round(
            AgentVariant::FullCrl,
            &mut policy,
            ActionChoice::GoHigh,
            GameState::Tie,
            4.0,
            GameState::High,
            &P,
        );
        assert!((policy.value(GameState::Tie) - 0.6).abs() < 1e-12);
        assert!((policy.count(ActionChoice::GoHigh, GameState::Tie) - 1.8).abs() < 1e-12);

        let mut fresh = PolicyTable::new();
        let e = end_round(
            AgentVariant::FullCrl,
            &mut fresh,
            ActionChoice::GoLow,
            GameState::Tie,
            0.0,
            GameState::Tie,
            &P,
        );
        assert_eq!(e, Some(0.0));
        assert!(fresh.is_zero());
    }
}
