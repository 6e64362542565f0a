//! Arena geometry, differential-drive kinematics and the proximity sensors
//! that feed the reactive layer.
//!
//! Coordinates are arena units with the origin at the arena center. Headings
//! are radians measured counter-clockwise from +x, so a positive bearing is
//! on the observer's left.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Reflection across the y = 0 axis.
    pub fn mirrored(self) -> Point {
        Point::new(self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Always in (-pi, pi].
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Reflection across the y = 0 axis (heading is negated).
    pub fn mirrored(&self) -> Pose {
        Pose::new(self.x, -self.y, -self.heading)
    }
}

/// The two players of a dyad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpotKind {
    High,
    Low,
}

impl SpotKind {
    pub fn other(self) -> SpotKind {
        match self {
            SpotKind::High => SpotKind::Low,
            SpotKind::Low => SpotKind::High,
        }
    }
}

/// Physical parameters of the arena, bodies, sensors and motors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    pub half_width: f64,
    pub half_height: f64,
    pub spot_pos_a: Point,
    pub spot_pos_b: Point,
    pub start_pose_1: Pose,
    pub start_pose_2: Pose,
    pub high_spot_radius: f64,
    pub low_spot_radius: f64,
    pub tie_radius: f64,
    pub agent_radius: f64,
    pub wheel_base: f64,
    /// Arena units per second per motor unit.
    pub motor_gain: f64,
    pub dt: f64,
    pub round_timeout: f64,
    pub spot_sense_range: f64,
    pub agent_sense_range: f64,
    pub motor_noise_sigma: f64,
    /// Start headings are jittered uniformly in [-heading_jitter, heading_jitter].
    pub heading_jitter: f64,
}

/// Calibrated baseline: agents start 5 units apart so that same-spot races
/// are close enough to tie; see the README for the calibration notes.
impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            half_width: 10.0,
            half_height: 10.0,
            spot_pos_a: Point::new(5.0, 4.0),
            spot_pos_b: Point::new(5.0, -4.0),
            start_pose_1: Pose::new(-5.0, 2.5, 0.0),
            start_pose_2: Pose::new(-5.0, -2.5, 0.0),
            high_spot_radius: 1.0,
            low_spot_radius: 0.6,
            tie_radius: 2.8,
            agent_radius: 0.5,
            wheel_base: 1.0,
            motor_gain: 10.0,
            dt: 0.05,
            round_timeout: 10.0,
            spot_sense_range: 25.0,
            agent_sense_range: 5.0,
            motor_noise_sigma: 0.02,
            heading_jitter: 5.0_f64.to_radians(),
        }
    }
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arena.half_width", self.half_width),
            ("arena.half_height", self.half_height),
            ("arena.low_spot_radius", self.low_spot_radius),
            ("arena.agent_radius", self.agent_radius),
            ("arena.wheel_base", self.wheel_base),
            ("arena.motor_gain", self.motor_gain),
            ("arena.dt", self.dt),
            ("arena.round_timeout", self.round_timeout),
            ("arena.spot_sense_range", self.spot_sense_range),
            ("arena.agent_sense_range", self.agent_sense_range),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(LabError::config(key, format!("must be > 0, got {value}")));
            }
        }
        for (key, value) in [
            ("arena.motor_noise_sigma", self.motor_noise_sigma),
            ("arena.heading_jitter", self.heading_jitter),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(LabError::config(key, format!("must be >= 0, got {value}")));
            }
        }
        if self.high_spot_radius < self.low_spot_radius {
            return Err(LabError::config(
                "arena.high_spot_radius",
                "must be >= arena.low_spot_radius",
            ));
        }
        if self.tie_radius <= self.high_spot_radius {
            return Err(LabError::config("arena.tie_radius", "must be > arena.high_spot_radius"));
        }
        if self.spot_pos_a == self.spot_pos_b {
            return Err(LabError::config("arena.spot_pos_b", "spot positions must be distinct"));
        }
        for (key, p) in [
            ("arena.spot_pos_a", self.spot_pos_a),
            ("arena.spot_pos_b", self.spot_pos_b),
            ("arena.start_pose_1", self.start_pose_1.position()),
            ("arena.start_pose_2", self.start_pose_2.position()),
        ] {
            if !self.contains(p) {
                return Err(LabError::config(key, "must lie inside the arena"));
            }
        }
        if !self.is_mirror_symmetric() {
            return Err(LabError::config(
                "arena.start_pose_2",
                "start poses must mirror each other across the axis between the spots",
            ));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_height
    }

    /// The start poses must be reflections of each other across the line
    /// through the spots' midpoint perpendicular to the A-B segment.
    pub fn is_mirror_symmetric(&self) -> bool {
        let (a, b) = (self.spot_pos_a, self.spot_pos_b);
        let mid = Point::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let (ux, uy) = {
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let n = dx.hypot(dy);
            (dx / n, dy / n)
        };
        let reflect = |p: Point| {
            let along = (p.x - mid.x) * ux + (p.y - mid.y) * uy;
            Point::new(p.x - 2.0 * along * ux, p.y - 2.0 * along * uy)
        };
        let p1 = self.start_pose_1.position();
        let p2 = self.start_pose_2.position();
        let r = reflect(p1);
        const EPS: f64 = 1e-9;
        if r.distance(p2) > EPS {
            return false;
        }
        // heading reflects as the direction vector does
        let (hx, hy) = (self.start_pose_1.heading.cos(), self.start_pose_1.heading.sin());
        let along = hx * ux + hy * uy;
        let (rx, ry) = (hx - 2.0 * along * ux, hy - 2.0 * along * uy);
        let (h2x, h2y) = (self.start_pose_2.heading.cos(), self.start_pose_2.heading.sin());
        (rx - h2x).abs() < EPS && (ry - h2y).abs() < EPS
    }

    pub fn spot_radius(&self, spot: SpotKind) -> f64 {
        match spot {
            SpotKind::High => self.high_spot_radius,
            SpotKind::Low => self.low_spot_radius,
        }
    }

    pub fn start_pose(&self, player: Player) -> Pose {
        match player {
            Player::One => self.start_pose_1,
            Player::Two => self.start_pose_2,
        }
    }

    /// Number of integration steps until the round times out.
    pub fn max_steps(&self) -> u32 {
        (self.round_timeout / self.dt).round().max(1.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub pose_1: Pose,
    pub pose_2: Pose,
    /// Whether spot position A currently holds the high reward.
    pub high_at_a: bool,
    pub elapsed: f64,
}

impl WorldState {
    pub fn new(pose_1: Pose, pose_2: Pose, high_at_a: bool) -> Self {
        WorldState {
            pose_1,
            pose_2,
            high_at_a,
            elapsed: 0.0,
        }
    }

    pub fn pose(&self, player: Player) -> &Pose {
        match player {
            Player::One => &self.pose_1,
            Player::Two => &self.pose_2,
        }
    }

    pub fn pose_mut(&mut self, player: Player) -> &mut Pose {
        match player {
            Player::One => &mut self.pose_1,
            Player::Two => &mut self.pose_2,
        }
    }

    pub fn spot_position(&self, spot: SpotKind, arena: &ArenaConfig) -> Point {
        let at_a = match spot {
            SpotKind::High => self.high_at_a,
            SpotKind::Low => !self.high_at_a,
        };
        if at_a {
            arena.spot_pos_a
        } else {
            arena.spot_pos_b
        }
    }

    /// Swaps the players and reflects everything across y = 0. Only
    /// meaningful for arenas symmetric about that axis, like the default.
    pub fn mirrored_swap(&self) -> WorldState {
        WorldState {
            pose_1: self.pose_2.mirrored(),
            pose_2: self.pose_1.mirrored(),
            high_at_a: !self.high_at_a,
            elapsed: self.elapsed,
        }
    }
}

/// Left/right activations of one entity's sensor pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorPair {
    pub left: f64,
    pub right: f64,
}

impl SensorPair {
    pub fn new(left: f64, right: f64) -> Self {
        SensorPair { left, right }
    }

    pub fn swapped(self) -> SensorPair {
        SensorPair::new(self.right, self.left)
    }

    pub fn is_zero(self) -> bool {
        self.left == 0.0 && self.right == 0.0
    }
}

/// The six proximity sensor activations of one agent, each in [0, 1].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub high: SensorPair,
    pub low: SensorPair,
    pub agent: SensorPair,
}

impl SensorReading {
    pub fn mirrored(self) -> SensorReading {
        SensorReading {
            high: self.high.swapped(),
            low: self.low.swapped(),
            agent: self.agent.swapped(),
        }
    }
}

/// Wheel commands in motor units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand {
    pub left: f64,
    pub right: f64,
}

impl MotorCommand {
    pub fn new(left: f64, right: f64) -> Self {
        MotorCommand { left, right }
    }

    pub fn clamped(self) -> MotorCommand {
        MotorCommand::new(self.left.clamp(-1.0, 1.0), self.right.clamp(-1.0, 1.0))
    }
}

/// Activation of a cosine-lobe sensor pair (lobes at +/-45 degrees) for an
/// entity at `distance` and `bearing` relative to the observer's heading.
pub fn sense_entity(distance: f64, bearing: f64, range: f64) -> SensorPair {
    if distance >= range {
        return SensorPair::default();
    }
    let proximity = (1.0 - distance / range).max(0.0);
    SensorPair::new(
        proximity * (bearing - FRAC_PI_4).cos().max(0.0),
        proximity * (bearing + FRAC_PI_4).cos().max(0.0),
    )
}

fn sense_point(observer: &Pose, target: Point, range: f64) -> SensorPair {
    let (dx, dy) = (target.x - observer.x, target.y - observer.y);
    let distance = dx.hypot(dy);
    let bearing = normalize_angle(dy.atan2(dx) - observer.heading);
    sense_entity(distance, bearing, range)
}

pub fn read_sensors(observer: &Pose, world: &WorldState, arena: &ArenaConfig, observer_id: Player) -> SensorReading {
    let other = world.pose(observer_id.other()).position();
    SensorReading {
        high: sense_point(
            observer,
            world.spot_position(SpotKind::High, arena),
            arena.spot_sense_range,
        ),
        low: sense_point(
            observer,
            world.spot_position(SpotKind::Low, arena),
            arena.spot_sense_range,
        ),
        agent: sense_point(observer, other, arena.agent_sense_range),
    }
}

/// One Euler step of differential-drive motion. The heading is updated first
/// and the translation uses the new heading. Positions are clipped to the arena.
pub fn integrate_kinematics(pose: &Pose, cmd: MotorCommand, arena: &ArenaConfig) -> Pose {
    let v = arena.motor_gain * (cmd.left + cmd.right) / 2.0;
    let omega = arena.motor_gain * (cmd.right - cmd.left) / arena.wheel_base;
    let heading = normalize_angle(pose.heading + omega * arena.dt);
    let x = pose.x + v * heading.cos() * arena.dt;
    let y = pose.y + v * heading.sin() * arena.dt;
    Pose {
        x: x.clamp(-arena.half_width, arena.half_width),
        y: y.clamp(-arena.half_height, arena.half_height),
        heading,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndStatus {
    Ongoing,
    Reached { player: Player, spot: SpotKind },
    Timeout,
}

pub fn round_end_check(world: &WorldState, arena: &ArenaConfig) -> EndStatus {
    let mut best: Option<(f64, Player, SpotKind)> = None;
    for player in Player::BOTH {
        let pos = world.pose(player).position();
        for spot in [SpotKind::High, SpotKind::Low] {
            let d = pos.distance(world.spot_position(spot, arena));
            if d < arena.spot_radius(spot) && best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, player, spot));
            }
        }
    }
    match best {
        Some((_, player, spot)) => EndStatus::Reached { player, spot },
        None if world.elapsed >= arena.round_timeout => EndStatus::Timeout,
        None => EndStatus::Ongoing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn normalize_covers_half_open_interval() {
        approx(normalize_angle(PI), PI, 0.0);
        approx(normalize_angle(-PI), PI, 1e-15);
        approx(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, 1e-12);
        approx(normalize_angle(0.25), 0.25, 0.0);
    }

    #[test]
    fn sensor_at_range_is_zero() {
        let pair = sense_entity(5.0, 0.0, 5.0);
        assert_eq!(pair, SensorPair::default());
    }

    #[test]
    fn sensor_dead_ahead_at_half_range() {
        let pair = sense_entity(2.5, 0.0, 5.0);
        approx(pair.left, 0.5 * FRAC_1_SQRT_2, 1e-12);
        approx(pair.right, 0.5 * FRAC_1_SQRT_2, 1e-12);
        approx(pair.left, 0.3536, 1e-4);
    }

    #[test]
    fn sensor_at_left_lobe_axis() {
        let pair = sense_entity(2.5, FRAC_PI_4, 5.0);
        approx(pair.left, 0.5, 1e-12);
        approx(pair.right, 0.0, 1e-12);
    }

    #[test]
    fn sensor_behind_is_blind() {
        let pair = sense_entity(1.0, PI, 5.0);
        assert_eq!(pair, SensorPair::default());
    }

    #[test]
    fn read_sensors_places_spots_by_allocation() {
        let arena = ArenaConfig::default();
        // observer at origin facing +x; A = (5, 4) is to the left
        let observer = Pose::new(0.0, 0.0, 0.0);
        let far = Pose::new(-9.0, -9.0, 0.0);
        let world = WorldState::new(observer, far, true);
        let r = read_sensors(&observer, &world, &arena, Player::One);
        assert!(r.high.left > r.high.right);
        assert!(r.low.right > r.low.left);
        assert!(r.agent.is_zero());
        let flipped = WorldState::new(observer, far, false);
        let r2 = read_sensors(&observer, &flipped, &arena, Player::One);
        assert_eq!(r2.high, r.low);
        assert_eq!(r2.low, r.high);
    }

    #[test]
    fn straight_drive_translates() {
        let arena = ArenaConfig::default();
        let p = integrate_kinematics(&Pose::new(0.0, 0.0, 0.0), MotorCommand::new(0.3, 0.3), &arena);
        approx(p.x, 10.0 * 0.3 * 0.05, 1e-12);
        assert_eq!(p.y, 0.0);
        assert_eq!(p.heading, 0.0);
    }

    #[test]
    fn opposite_wheels_rotate_in_place() {
        let arena = ArenaConfig::default();
        let p = integrate_kinematics(&Pose::new(1.0, 2.0, 0.3), MotorCommand::new(-0.5, 0.5), &arena);
        assert_eq!((p.x, p.y), (1.0, 2.0));
        approx(p.heading, 0.3 + 10.0 * 1.0 / 1.0 * 0.05, 1e-12);
    }

    #[test]
    fn kinematics_hand_evaluated_step() {
        let arena = ArenaConfig {
            motor_gain: 10.0,
            dt: 0.05,
            wheel_base: 1.0,
            ..ArenaConfig::default()
        };
        let p = integrate_kinematics(&Pose::new(0.0, 0.0, 0.0), MotorCommand::new(0.2, 0.4), &arena);
        approx(p.heading, 0.1, 1e-12);
        approx(p.x, 3.0 * 0.1_f64.cos() * 0.05, 1e-12);
        approx(p.x, 0.14925, 1e-5);
        approx(p.y, 0.014975, 1e-6);
    }

    #[test]
    fn kinematics_clips_to_arena() {
        let arena = ArenaConfig::default();
        let p = integrate_kinematics(&Pose::new(9.99, 0.0, 0.0), MotorCommand::new(1.0, 1.0), &arena);
        assert_eq!(p.x, 10.0);
    }

    #[test]
    fn end_check_cases() {
        let arena = ArenaConfig::default();
        let mut world = WorldState::new(arena.start_pose_1, arena.start_pose_2, true);
        assert_eq!(round_end_check(&world, &arena), EndStatus::Ongoing);

        world.pose_1 = Pose::new(5.0, 4.0, 0.0);
        assert_eq!(
            round_end_check(&world, &arena),
            EndStatus::Reached {
                player: Player::One,
                spot: SpotKind::High
            }
        );

        let mut timed_out = WorldState::new(arena.start_pose_1, arena.start_pose_2, true);
        timed_out.elapsed = arena.round_timeout;
        assert_eq!(round_end_check(&timed_out, &arena), EndStatus::Timeout);
    }

    #[test]
    fn simultaneous_contact_goes_to_closer_agent() {
        let arena = ArenaConfig::default();
        let world = WorldState {
            pose_1: Pose::new(5.5, 4.0, 0.0),
            pose_2: Pose::new(5.0, -3.8, 0.0),
            high_at_a: false,
            elapsed: 0.0,
        };
        assert_eq!(
            round_end_check(&world, &arena),
            EndStatus::Reached {
                player: Player::Two,
                spot: SpotKind::High
            }
        );
    }

    #[test]
    fn default_arena_is_valid_and_symmetric() {
        let arena = ArenaConfig::default();
        arena.validate().unwrap();
        assert!(arena.is_mirror_symmetric());
        assert_eq!(arena.max_steps(), 200);
        let bad = ArenaConfig {
            start_pose_2: Pose::new(-5.0, -3.0, 0.0),
            ..ArenaConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad_radii = ArenaConfig {
            tie_radius: 0.9,
            ..ArenaConfig::default()
        };
        assert!(bad_radii.validate().is_err());
    }
}
