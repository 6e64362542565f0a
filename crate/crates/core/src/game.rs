//! Battle of the Exes rounds and dyads.
//!
//! Two agents compete for a high and a low reward spot. Choosing the same
//! target is a tie worth nothing. In ballistic mode a round is a one-shot
//! matrix game; in dynamic mode both agents steer through the arena until one
//! of them reaches a spot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptive::{ActionChoice, GameState, LearningParams, PolicyTable};
use crate::agent::{self, AgentRoundPlan};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::reactive::ReactiveParams;
use crate::sim::{
    integrate_kinematics, read_sensors, round_end_check, ArenaConfig, EndStatus, Player, Pose, SpotKind, WorldState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameMode {
    Ballistic,
    Dynamic,
}

impl GameMode {
    pub fn label(self) -> &'static str {
        match self {
            GameMode::Ballistic => "ballistic",
            GameMode::Dynamic => "dynamic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffScheme {
    pub high_value: f64,
    pub low_value: f64,
    #[serde(default)]
    pub tie_value: f64,
}

impl PayoffScheme {
    pub const HIGH: PayoffScheme = PayoffScheme::new(4.0, 1.0);
    pub const LOW: PayoffScheme = PayoffScheme::new(2.0, 1.0);

    pub const fn new(high_value: f64, low_value: f64) -> Self {
        PayoffScheme {
            high_value,
            low_value,
            tie_value: 0.0,
        }
    }

    pub fn value(&self, spot: SpotKind) -> f64 {
        match spot {
            SpotKind::High => self.high_value,
            SpotKind::Low => self.low_value,
        }
    }

    /// Combined payoff of a non-tie round.
    pub fn max_total(&self) -> f64 {
        self.high_value + self.low_value
    }

    /// Short label such as `4-1`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.high_value, self.low_value)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tie_value != 0.0 {
            return Err(LabError::config("payoffs.tie_value", "must be 0"));
        }
        if !(self.low_value.is_finite() && self.low_value > self.tie_value) {
            return Err(LabError::config(
                "payoffs.low_value",
                format!("must be > payoffs.tie_value, got {}", self.low_value),
            ));
        }
        if !(self.high_value.is_finite() && self.high_value >= self.low_value) {
            return Err(LabError::config(
                "payoffs.high_value",
                format!("must be >= payoffs.low_value, got {}", self.high_value),
            ));
        }
        Ok(())
    }
}

/// How the agent that did not end a dynamic round is paid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoserPayoff {
    /// Payoff-matrix reading: it receives the other spot's value.
    #[default]
    Matrix,
    /// Embodied reading: it receives the other spot's value only while
    /// inside that spot's contact radius when the round ends.
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCategory {
    P1High,
    P2High,
    Tie,
}

impl OutcomeCategory {
    pub const ALL: [OutcomeCategory; 3] = [OutcomeCategory::P1High, OutcomeCategory::P2High, OutcomeCategory::Tie];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            OutcomeCategory::P1High => "p1_high",
            OutcomeCategory::P2High => "p2_high",
            OutcomeCategory::Tie => "tie",
        }
    }

    pub fn high_holder(player: Player) -> OutcomeCategory {
        match player {
            Player::One => OutcomeCategory::P1High,
            Player::Two => OutcomeCategory::P2High,
        }
    }

    pub fn swapped(self) -> OutcomeCategory {
        match self {
            OutcomeCategory::P1High => OutcomeCategory::P2High,
            OutcomeCategory::P2High => OutcomeCategory::P1High,
            OutcomeCategory::Tie => OutcomeCategory::Tie,
        }
    }

    /// The state each player observes after this outcome.
    pub fn states(self) -> [GameState; 2] {
        match self {
            OutcomeCategory::P1High => [GameState::High, GameState::Low],
            OutcomeCategory::P2High => [GameState::Low, GameState::High],
            OutcomeCategory::Tie => [GameState::Tie, GameState::Tie],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Reached,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub rewards: [f64; 2],
    pub category: OutcomeCategory,
    /// Actions sampled by each agent's adaptive layer.
    pub actions: [ActionChoice; 2],
    pub end: EndKind,
    /// Seconds of simulated time (0 for ballistic rounds).
    pub duration: f64,
    pub states: [GameState; 2],
}

impl RoundOutcome {
    fn tie(actions: [ActionChoice; 2], payoffs: &PayoffScheme, end: EndKind, duration: f64) -> Self {
        RoundOutcome {
            rewards: [payoffs.tie_value; 2],
            category: OutcomeCategory::Tie,
            actions,
            end,
            duration,
            states: OutcomeCategory::Tie.states(),
        }
    }

    fn split(high_holder: Player, rewards: [f64; 2], actions: [ActionChoice; 2], duration: f64) -> Self {
        let category = OutcomeCategory::high_holder(high_holder);
        RoundOutcome {
            rewards,
            category,
            actions,
            end: EndKind::Reached,
            duration,
            states: category.states(),
        }
    }
}

pub fn resolve_ballistic_round<R: Rng + ?Sized>(
    a1: ActionChoice,
    a2: ActionChoice,
    payoffs: &PayoffScheme,
    rng: &mut R,
) -> RoundOutcome {
    let t1 = a1.resolve_none(rng);
    let t2 = a2.resolve_none(rng);
    let actions = [a1, a2];
    if t1 == t2 {
        return RoundOutcome::tie(actions, payoffs, EndKind::Reached, 0.0);
    }
    if t1 == ActionChoice::GoHigh {
        RoundOutcome::split(Player::One, [payoffs.high_value, payoffs.low_value], actions, 0.0)
    } else {
        RoundOutcome::split(Player::Two, [payoffs.low_value, payoffs.high_value], actions, 0.0)
    }
}

/// Fair draw of which position holds the high reward this round.
pub fn allocate_spots<R: Rng + ?Sized>(rng: &mut R) -> bool {
    rng.gen_bool(0.5)
}

/// Start-of-round world: fresh allocation, then jittered start headings for
/// player one and player two, in that draw order.
pub fn initial_world<R: Rng + ?Sized>(arena: &ArenaConfig, rng: &mut R) -> WorldState {
    let high_at_a = allocate_spots(rng);
    let mut jittered = |pose: Pose| {
        let u: f64 = rng.gen();
        Pose::new(pose.x, pose.y, pose.heading + (2.0 * u - 1.0) * arena.heading_jitter)
    };
    let pose_1 = jittered(arena.start_pose_1);
    let pose_2 = jittered(arena.start_pose_2);
    WorldState::new(pose_1, pose_2, high_at_a)
}

/// Everything a dynamic round needs besides the world and the generator.
#[derive(Debug, Clone, Copy)]
pub struct DynamicRules<'a> {
    pub arena: &'a ArenaConfig,
    pub payoffs: &'a PayoffScheme,
    pub reactive: ReactiveParams,
    pub loser_payoff: LoserPayoff,
}

pub fn run_dynamic_round<R: Rng + ?Sized>(
    plans: &[AgentRoundPlan; 2],
    world: WorldState,
    rules: &DynamicRules<'_>,
    rng: &mut R,
) -> RoundOutcome {
    simulate_round(plans, world, rules, rng, None).0
}

/// Like [`run_dynamic_round`] but also returns the poses after every step.
pub fn run_dynamic_round_traced<R: Rng + ?Sized>(
    plans: &[AgentRoundPlan; 2],
    world: WorldState,
    rules: &DynamicRules<'_>,
    rng: &mut R,
) -> (RoundOutcome, Vec<[Pose; 2]>) {
    let mut trace = Vec::new();
    let (outcome, _) = simulate_round(plans, world, rules, rng, Some(&mut trace));
    (outcome, trace)
}

fn simulate_round<R: Rng + ?Sized>(
    plans: &[AgentRoundPlan; 2],
    mut world: WorldState,
    rules: &DynamicRules<'_>,
    rng: &mut R,
    mut trace: Option<&mut Vec<[Pose; 2]>>,
) -> (RoundOutcome, WorldState) {
    let arena = rules.arena;
    let actions = [plans[0].chosen, plans[1].chosen];
    let max_steps = arena.max_steps();
    for step in 1..=max_steps {
        let readings = Player::BOTH.map(|p| read_sensors(world.pose(p), &world, arena, p));
        let cmds = Player::BOTH.map(|p| {
            agent::control_step(
                &plans[p.index()],
                &readings[p.index()],
                rules.reactive,
                arena.motor_noise_sigma,
                rng,
            )
        });
        for p in Player::BOTH {
            let next = integrate_kinematics(world.pose(p), cmds[p.index()], arena);
            *world.pose_mut(p) = next;
        }
        world.elapsed = if step == max_steps {
            arena.round_timeout
        } else {
            step as f64 * arena.dt
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push([world.pose_1, world.pose_2]);
        }
        match round_end_check(&world, arena) {
            EndStatus::Ongoing => continue,
            EndStatus::Timeout => {
                return (
                    RoundOutcome::tie(actions, rules.payoffs, EndKind::Timeout, world.elapsed),
                    world,
                )
            }
            EndStatus::Reached { player, spot } => {
                return (resolve_contact(player, spot, &world, rules, actions), world)
            }
        }
    }
    unreachable!("the final step always reports reached or timeout")
}

fn resolve_contact(
    winner: Player,
    spot: SpotKind,
    world: &WorldState,
    rules: &DynamicRules<'_>,
    actions: [ActionChoice; 2],
) -> RoundOutcome {
    let arena = rules.arena;
    let payoffs = rules.payoffs;
    let spot_pos = world.spot_position(spot, arena);
    let inside_tie = |p: Player| world.pose(p).position().distance(spot_pos) < arena.tie_radius;
    if inside_tie(Player::One) && inside_tie(Player::Two) {
        return RoundOutcome::tie(actions, payoffs, EndKind::Reached, world.elapsed);
    }
    let loser = winner.other();
    let other_spot = spot.other();
    let loser_reward = match rules.loser_payoff {
        LoserPayoff::Matrix => payoffs.value(other_spot),
        LoserPayoff::Contact => {
            let d = world
                .pose(loser)
                .position()
                .distance(world.spot_position(other_spot, arena));
            if d < arena.spot_radius(other_spot) {
                payoffs.value(other_spot)
            } else {
                payoffs.tie_value
            }
        }
    };
    let mut rewards = [0.0; 2];
    rewards[winner.index()] = payoffs.value(spot);
    rewards[loser.index()] = loser_reward;
    let high_holder = if spot == SpotKind::High { winner } else { loser };
    RoundOutcome::split(high_holder, rewards, actions, world.elapsed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadResult {
    pub outcomes: Vec<RoundOutcome>,
    /// Rounds in which each agent's adaptive layer chose `None`.
    pub none_counts: [u32; 2],
    pub seed: u64,
    pub config_fingerprint: String,
    /// Final learned tables of player one and player two.
    pub policies: [PolicyTable; 2],
}

impl DyadResult {
    pub fn rounds(&self) -> usize {
        self.outcomes.len()
    }

    pub fn categories(&self) -> impl Iterator<Item = OutcomeCategory> + '_ {
        self.outcomes.iter().map(|o| o.category)
    }
}

/// Plays one dyad for the configured number of rounds. Deterministic in
/// `(config, seed)`; every random draw comes from one generator seeded with `seed`.
pub fn play_dyad(config: &ExperimentConfig, seed: u64) -> Result<DyadResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variant = config.agents.variant;
    let learning: LearningParams = config.adaptive;
    let rules = DynamicRules {
        arena: &config.arena,
        payoffs: &config.payoffs,
        reactive: config.reactive,
        loser_payoff: config.game.loser_payoff,
    };

    let mut policies = [PolicyTable::new(), PolicyTable::new()];
    let mut states = [GameState::INITIAL; 2];
    let mut none_counts = [0u32; 2];
    let mut outcomes = Vec::with_capacity(config.rounds as usize);

    for _ in 0..config.rounds {
        let plans = [0, 1].map(|i| agent::begin_round(variant, &policies[i], states[i], &learning, &mut rng));
        for (plan, count) in plans.iter().zip(none_counts.iter_mut()) {
            if !plan.is_consistent(variant) {
                return Err(LabError::Invariant(format!("inconsistent round plan {plan:?}")));
            }
            if plan.chosen == ActionChoice::None {
                *count += 1;
            }
        }

        let outcome = match config.mode {
            GameMode::Ballistic => resolve_ballistic_round(plans[0].action, plans[1].action, &config.payoffs, &mut rng),
            GameMode::Dynamic => {
                let world = initial_world(&config.arena, &mut rng);
                run_dynamic_round(&plans, world, &rules, &mut rng)
            }
        };
        // learning credits the sampled action even when the body executed a coin flip
        let outcome = RoundOutcome {
            actions: [plans[0].chosen, plans[1].chosen],
            ..outcome
        };

        for i in 0..2 {
            agent::end_round(
                variant,
                &mut policies[i],
                plans[i].chosen,
                states[i],
                outcome.rewards[i],
                outcome.states[i],
                &learning,
            );
        }
        states = outcome.states;
        outcomes.push(outcome);
    }

    Ok(DyadResult {
        outcomes,
        none_counts,
        seed,
        config_fingerprint: config.fingerprint(),
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::mask_for;
    use rand::rngs::mock::StepRng;

    fn plan(a: ActionChoice) -> AgentRoundPlan {
        AgentRoundPlan {
            chosen: a,
            action: a,
            mask: mask_for(a),
        }
    }

    fn quiet_arena() -> ArenaConfig {
        ArenaConfig {
            motor_noise_sigma: 0.0,
            heading_jitter: 0.0,
            ..ArenaConfig::default()
        }
    }

    #[test]
    fn ballistic_split_and_tie() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = resolve_ballistic_round(ActionChoice::GoHigh, ActionChoice::GoLow, &PayoffScheme::HIGH, &mut rng);
        assert_eq!(o.rewards, [4.0, 1.0]);
        assert_eq!(o.category, OutcomeCategory::P1High);
        assert_eq!(o.states, [GameState::High, GameState::Low]);
        assert_eq!(o.duration, 0.0);

        let o = resolve_ballistic_round(
            ActionChoice::GoHigh,
            ActionChoice::GoHigh,
            &PayoffScheme::HIGH,
            &mut rng,
        );
        assert_eq!(o.rewards, [0.0, 0.0]);
        assert_eq!(o.category, OutcomeCategory::Tie);

        let o = resolve_ballistic_round(ActionChoice::GoLow, ActionChoice::GoHigh, &PayoffScheme::LOW, &mut rng);
        assert_eq!(o.rewards, [1.0, 2.0]);
        assert_eq!(o.category, OutcomeCategory::P2High);
    }

    #[test]
    fn ballistic_none_takes_the_coin() {
        // StepRng(0, 0) makes gen_bool(0.5) return true -> GoHigh
        let mut heads = StepRng::new(0, 0);
        let o = resolve_ballistic_round(ActionChoice::None, ActionChoice::GoLow, &PayoffScheme::HIGH, &mut heads);
        assert_eq!(o.rewards, [4.0, 1.0]);
        assert_eq!(o.actions, [ActionChoice::None, ActionChoice::GoLow]);
        let mut tails = StepRng::new(u64::MAX, 0);
        let o = resolve_ballistic_round(ActionChoice::None, ActionChoice::GoLow, &PayoffScheme::HIGH, &mut tails);
        assert_eq!(o.category, OutcomeCategory::Tie);
    }

    #[test]
    fn allocation_is_fair_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 10_000;
        let hits = (0..n).filter(|_| allocate_spots(&mut rng)).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.02);
        let seq = |s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            (0..64).map(|_| allocate_spots(&mut r)).collect::<Vec<_>>()
        };
        assert_eq!(seq(4), seq(4));
    }

    #[test]
    fn flipped_allocation_mirrors_the_world() {
        let arena = ArenaConfig::default();
        let w = WorldState::new(arena.start_pose_1, arena.start_pose_2, true);
        let m = w.mirrored_swap();
        for spot in [SpotKind::High, SpotKind::Low] {
            assert_eq!(m.spot_position(spot, &arena), w.spot_position(spot, &arena).mirrored());
        }
        assert_eq!(m.pose_1.position(), w.pose_2.position().mirrored());
    }

    #[test]
    fn same_target_inside_tie_circle_is_a_tie() {
        let arena = quiet_arena();
        let payoffs = PayoffScheme::HIGH;
        let rules = DynamicRules {
            arena: &arena,
            payoffs: &payoffs,
            reactive: ReactiveParams::default(),
            loser_payoff: LoserPayoff::Matrix,
        };
        // both close to the high spot at A, agent one slightly closer
        let world = WorldState::new(
            Pose::new(3.6, 4.0, 0.0),
            Pose::new(5.0, 2.0, std::f64::consts::FRAC_PI_2),
            true,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = run_dynamic_round(
            &[plan(ActionChoice::GoHigh), plan(ActionChoice::GoHigh)],
            world,
            &rules,
            &mut rng,
        );
        assert_eq!(o.category, OutcomeCategory::Tie);
        assert_eq!(o.rewards, [0.0, 0.0]);
        assert_eq!(o.end, EndKind::Reached);
    }

    #[test]
    fn lone_winner_under_contact_rule() {
        let arena = quiet_arena();
        let payoffs = PayoffScheme::HIGH;
        let rules = DynamicRules {
            arena: &arena,
            payoffs: &payoffs,
            reactive: ReactiveParams::default(),
            loser_payoff: LoserPayoff::Contact,
        };
        // agent one next to the high spot at A, agent two far away
        let world = WorldState::new(Pose::new(3.5, 4.0, 0.0), Pose::new(-8.0, -8.0, 0.0), true);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = run_dynamic_round(
            &[plan(ActionChoice::GoHigh), plan(ActionChoice::GoLow)],
            world,
            &rules,
            &mut rng,
        );
        assert_eq!(o.category, OutcomeCategory::P1High);
        assert_eq!(o.rewards, [4.0, 0.0]);
        assert_eq!(o.states, [GameState::High, GameState::Low]);

        let matrix = DynamicRules {
            loser_payoff: LoserPayoff::Matrix,
            ..rules
        };
        let o = run_dynamic_round(
            &[plan(ActionChoice::GoHigh), plan(ActionChoice::GoLow)],
            world,
            &matrix,
            &mut rng,
        );
        assert_eq!(o.rewards, [4.0, 1.0]);
    }

    #[test]
    fn circling_agents_time_out() {
        let arena = ArenaConfig {
            spot_sense_range: 0.1,
            ..quiet_arena()
        };
        let payoffs = PayoffScheme::HIGH;
        let rules = DynamicRules {
            arena: &arena,
            payoffs: &payoffs,
            reactive: ReactiveParams::default(),
            loser_payoff: LoserPayoff::Matrix,
        };
        let spin = AgentRoundPlan {
            chosen: ActionChoice::None,
            action: ActionChoice::None,
            mask: crate::reactive::InhibitionMask::NONE,
        };
        // blind agents drive straight into the west wall and stay there
        let world = WorldState::new(
            Pose::new(-5.0, 4.0, std::f64::consts::PI),
            Pose::new(-5.0, -4.0, std::f64::consts::PI),
            true,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = run_dynamic_round(&[spin, spin], world, &rules, &mut rng);
        assert_eq!(o.end, EndKind::Timeout);
        assert_eq!(o.category, OutcomeCategory::Tie);
        assert_eq!(o.rewards, [0.0, 0.0]);
        assert_eq!(o.duration, arena.round_timeout);
    }
}
