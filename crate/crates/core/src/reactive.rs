//! Reactive layer: pre-wired Braitenberg behaviors.
//!
//! Reward seeking uses crossed excitation with direct inhibition, so the agent
//! turns toward the more activated side. Collision avoidance uses the opposite
//! wiring and turns away from the other agent. Both add a constant forward
//! drive `f`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::sim::{MotorCommand, SensorPair, SensorReading};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReactiveParams {
    /// Forward speed constant in motor units.
    pub f: f64,
}

impl Default for ReactiveParams {
    fn default() -> Self {
        ReactiveParams { f: 0.3 }
    }
}

impl ReactiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(LabError::config("reactive.f", format!("must be > 0, got {}", self.f)));
        }
        Ok(())
    }
}

/// Which behaviors the adaptive layer switches off for the current round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InhibitionMask {
    pub inhibit_high_seek: bool,
    pub inhibit_low_seek: bool,
    /// Only the adaptive-only ablation sets this; the full agent never
    /// inhibits avoidance.
    #[serde(default)]
    pub inhibit_avoidance: bool,
}

impl InhibitionMask {
    pub const NONE: InhibitionMask = InhibitionMask {
        inhibit_high_seek: false,
        inhibit_low_seek: false,
        inhibit_avoidance: false,
    };
}

pub fn reward_seeking(s_left: f64, s_right: f64, f: f64) -> MotorCommand {
    MotorCommand::new(f + s_right - s_left, f + s_left - s_right)
}

pub fn collision_avoidance(s_left: f64, s_right: f64, f: f64) -> MotorCommand {
    MotorCommand::new(f + s_left - s_right, f + s_right - s_left)
}

/// Turning term of a behavior: its output with the forward drive removed.
fn turning(behavior: fn(f64, f64, f64) -> MotorCommand, pair: SensorPair) -> (f64, f64) {
    let out = behavior(pair.left, pair.right, 0.0);
    (out.left, out.right)
}

/// Superposes the turning terms of every active behavior onto one forward
/// drive and clamps the result to [-1, 1].
pub fn compose_behaviors(reading: &SensorReading, mask: InhibitionMask, params: ReactiveParams) -> MotorCommand {
    let mut left = params.f;
    let mut right = params.f;
    let active = [
        (
            !mask.inhibit_high_seek,
            reward_seeking as fn(_, _, _) -> _,
            reading.high,
        ),
        (!mask.inhibit_low_seek, reward_seeking, reading.low),
        (!mask.inhibit_avoidance, collision_avoidance, reading.agent),
    ];
    for (on, behavior, pair) in active {
        if on {
            let (dl, dr) = turning(behavior, pair);
            left += dl;
            right += dr;
        }
    }
    MotorCommand::new(left, right).clamped()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_cmd(cmd: MotorCommand, left: f64, right: f64) {
        assert!(
            (cmd.left - left).abs() < 1e-9 && (cmd.right - right).abs() < 1e-9,
            "{cmd:?} vs ({left}, {right})"
        );
    }

    #[test]
    fn reward_seeking_examples() {
        approx_cmd(reward_seeking(0.0, 0.0, 0.3), 0.3, 0.3);
        approx_cmd(reward_seeking(0.5, 0.0, 0.3), -0.2, 0.8);
        approx_cmd(reward_seeking(0.4, 0.4, 0.3), 0.3, 0.3);
    }

    #[test]
    fn collision_avoidance_examples() {
        approx_cmd(collision_avoidance(0.0, 0.0, 0.3), 0.3, 0.3);
        approx_cmd(collision_avoidance(0.5, 0.0, 0.3), 0.8, -0.2);
        approx_cmd(collision_avoidance(0.3, 0.3, 0.3), 0.3, 0.3);
    }

    #[test]
    fn compose_examples() {
        let params = ReactiveParams::default();
        let quiet = SensorReading::default();
        for mask in [
            InhibitionMask::NONE,
            InhibitionMask {
                inhibit_low_seek: true,
                ..InhibitionMask::NONE
            },
            InhibitionMask {
                inhibit_high_seek: true,
                ..InhibitionMask::NONE
            },
        ] {
            approx_cmd(compose_behaviors(&quiet, mask, params), 0.3, 0.3);
        }

        let reading = SensorReading {
            high: SensorPair::new(0.5, 0.0),
            low: SensorPair::default(),
            agent: SensorPair::new(0.0, 0.2),
        };
        let mask = InhibitionMask {
            inhibit_low_seek: true,
            ..InhibitionMask::NONE
        };
        approx_cmd(compose_behaviors(&reading, mask, params), -0.4, 1.0);

        let opposed = SensorReading {
            high: SensorPair::new(0.9, 0.0),
            low: SensorPair::new(0.0, 0.9),
            agent: SensorPair::default(),
        };
        approx_cmd(compose_behaviors(&opposed, InhibitionMask::NONE, params), 0.3, 0.3);
    }

    #[test]
    fn composition_clamps() {
        let reading = SensorReading {
            high: SensorPair::new(1.0, 0.0),
            low: SensorPair::new(1.0, 0.0),
            agent: SensorPair::new(0.0, 1.0),
        };
        let cmd = compose_behaviors(&reading, InhibitionMask::NONE, ReactiveParams::default());
        approx_cmd(cmd, -1.0, 1.0);
    }

    #[test]
    fn inhibited_avoidance_ignores_agent_sensors() {
        let reading = SensorReading {
            agent: SensorPair::new(0.7, 0.1),
            ..SensorReading::default()
        };
        let mask = InhibitionMask {
            inhibit_avoidance: true,
            ..InhibitionMask::NONE
        };
        approx_cmd(compose_behaviors(&reading, mask, ReactiveParams::default()), 0.3, 0.3);
    }
}
