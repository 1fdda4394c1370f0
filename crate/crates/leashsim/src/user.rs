//! The simulated user and the elastic leash: waypoint pursuit in the virtual
//! environment, heading compliance with leash tension, and reset-compliant
//! in-place turning.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::math::{wrap_angle_signed, Vec2};
use crate::world::Pose;

/// Elastic leash: a linear spring that only pulls when stretched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeashState {
    /// Rest length (m).
    pub rest_length: f64,
    /// Spring stiffness (N/m).
    pub stiffness: f64,
    pub engaged: bool,
}

impl Default for LeashState {
    fn default() -> Self {
        LeashState {
            rest_length: 1.8,
            stiffness: 20.0,
            engaged: true,
        }
    }
}

impl LeashState {
    pub fn validate(&self) -> Result<()> {
        if self.rest_length <= 0.0 {
            return Err(SimError::InvalidScenario("leash rest_length must be > 0".into()));
        }
        if self.stiffness < 0.0 {
            return Err(SimError::InvalidScenario("leash stiffness must be >= 0".into()));
        }
        Ok(())
    }
}

/// Force on the user, pointing toward the robot, zero while the leash is
/// slack, disengaged, or the endpoints coincide.
pub fn leash_force(user_p: Vec2, robot_p: Vec2, leash: &LeashState) -> Vec2 {
    if !leash.engaged {
        return Vec2::ZERO;
    }
    let delta = robot_p - user_p;
    let dist = delta.norm();
    if dist <= leash.rest_length || dist == 0.0 {
        return Vec2::ZERO;
    }
    delta * (leash.stiffness * (dist - leash.rest_length) / dist)
}

/// Simulated-user tuning from the scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserParams {
    pub walk_speed: f64,
    pub turn_rate_max: f64,
    /// Heading-blend gain per newton of leash tension ((m/s)/N in the
    /// formulation; dimensionless weight per N here).
    pub compliance: f64,
    pub arrived_radius: f64,
}

impl Default for UserParams {
    fn default() -> Self {
        UserParams {
            walk_speed: 1.0,
            turn_rate_max: 2.0,
            compliance: 0.15,
            arrived_radius: 0.5,
        }
    }
}

impl UserParams {
    pub fn validate(&self) -> Result<()> {
        if self.walk_speed <= 0.0 {
            return Err(SimError::InvalidScenario("user walk_speed must be > 0".into()));
        }
        if self.turn_rate_max <= 0.0 || self.arrived_radius <= 0.0 {
            return Err(SimError::InvalidScenario(
                "user turn_rate_max and arrived_radius must be > 0".into(),
            ));
        }
        if self.compliance < 0.0 {
            return Err(SimError::InvalidScenario("user compliance must be >= 0".into()));
        }
        Ok(())
    }
}

/// In-place turn command issued by an active reset (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetCommand {
    pub turn_command: f64,
}

/// What the user actually did this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserStep {
    pub pose: Pose,
    /// Executed walk speed (m/s).
    pub walk_speed: f64,
    /// Executed turn rate (rad/s).
    pub turn_rate: f64,
}

/// Advance the user by one step.
///
/// During a reset the user turns in place exactly as commanded and does not
/// translate. Otherwise the desired heading is the bearing to the waypoint's
/// physical image, pulled toward the leash-force direction with weight
/// min(1, compliance * |force|); the heading change is clamped to the turn
/// rate and the user walks along the new heading. Within the arrived radius
/// the waypoint exerts no pull and the user only walks while a felt tug is
/// ahead of them, so a taut leash still draws them toward the robot.
pub fn user_step(
    physical: &Pose,
    params: &UserParams,
    waypoint_phys: Vec2,
    force: Vec2,
    reset: Option<ResetCommand>,
    dt: f64,
) -> UserStep {
    debug_assert!(dt > 0.0);

    if let Some(cmd) = reset {
        return UserStep {
            pose: Pose::new(physical.p, physical.theta + cmd.turn_command * dt),
            walk_speed: 0.0,
            turn_rate: cmd.turn_command,
        };
    }

    let to_waypoint = waypoint_phys - physical.p;
    let arrived = to_waypoint.norm() <= params.arrived_radius;
    let force_mag = force.norm();
    let weight = (params.compliance * force_mag).min(1.0);

    let base = if arrived {
        physical.theta
    } else {
        to_waypoint.angle()
    };
    let desired = if force_mag > 0.0 && weight > 0.0 {
        base + weight * wrap_angle_signed(force.angle() - base)
    } else {
        base
    };

    let max_turn = params.turn_rate_max * dt;
    let turn = wrap_angle_signed(desired - physical.theta).clamp(-max_turn, max_turn);
    let theta = physical.theta + turn;

    let walking = if arrived {
        // Waypoint reached: only a felt tug roughly ahead gets them moving.
        weight > 0.0
            && wrap_angle_signed(force.angle() - theta).abs() <= std::f64::consts::FRAC_PI_2
    } else {
        true
    };
    let step = if walking { params.walk_speed * dt } else { 0.0 };

    UserStep {
        pose: Pose::new(physical.p + Vec2::from_angle(theta) * step, theta),
        walk_speed: step / dt,
        turn_rate: turn / dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn leash_slack_taut_degenerate() {
        let leash = LeashState::default();
        // Inside the rest length: slack.
        assert_eq!(
            leash_force(Vec2::ZERO, Vec2::new(1.0, 0.0), &leash),
            Vec2::ZERO
        );
        // Stretched 0.5 m at k = 20: 10 N toward the robot.
        let f = leash_force(Vec2::ZERO, Vec2::new(leash.rest_length + 0.5, 0.0), &leash);
        assert_relative_eq!(f.norm(), 10.0, epsilon = 1e-12);
        assert!(f.x > 0.0);
        // Coincident endpoints: direction undefined, force zero.
        assert_eq!(leash_force(Vec2::ZERO, Vec2::ZERO, &leash), Vec2::ZERO);
        // Disengaged leash never pulls.
        let off = LeashState {
            engaged: false,
            ..leash
        };
        assert_eq!(
            leash_force(Vec2::ZERO, Vec2::new(5.0, 0.0), &off),
            Vec2::ZERO
        );
    }

    #[test]
    fn walks_straight_at_waypoint_without_force() {
        let params = UserParams::default();
        let user = Pose::new(Vec2::ZERO, 0.0);
        let dt = 1.0 / 90.0;
        let out = user_step(&user, &params, Vec2::new(10.0, 0.0), Vec2::ZERO, None, dt);
        assert_relative_eq!(out.pose.p.x, params.walk_speed * dt, epsilon = 1e-15);
        assert_relative_eq!(out.pose.p.y, 0.0);
        assert_eq!(out.pose.theta, 0.0);
        assert_relative_eq!(out.walk_speed, params.walk_speed);
        assert_eq!(out.turn_rate, 0.0);
    }

    #[test]
    fn reset_turns_in_place() {
        let params = UserParams::default();
        let user = Pose::new(Vec2::new(1.0, 1.0), 0.5);
        let dt = 1.0 / 90.0;
        let cmd = ResetCommand { turn_command: 1.2 };
        let out = user_step(
            &user,
            &params,
            Vec2::new(10.0, 0.0),
            Vec2::new(5.0, 0.0),
            Some(cmd),
            dt,
        );
        assert_eq!(out.pose.p, user.p);
        assert_relative_eq!(out.pose.theta, 0.5 + 1.2 * dt);
        assert_eq!(out.walk_speed, 0.0);
        assert_relative_eq!(out.turn_rate, 1.2);
    }

    #[test]
    fn saturated_force_owns_the_heading() {
        // compliance * |force| >= 1: the desired heading is the force
        // direction, reached as fast as the turn clamp allows.
        let params = UserParams::default();
        let user = Pose::new(Vec2::ZERO, 0.0);
        let dt = 1.0 / 90.0;
        let force = Vec2::new(0.0, 100.0); // straight left, far beyond saturation
        let out = user_step(&user, &params, Vec2::new(10.0, 0.0), force, None, dt);
        assert_relative_eq!(out.pose.theta, params.turn_rate_max * dt, epsilon = 1e-12);
        // With an unbounded turn budget the heading lands exactly on the force.
        let out = user_step(
            &user,
            &UserParams {
                turn_rate_max: 1e6,
                ..params
            },
            Vec2::new(10.0, 0.0),
            force,
            None,
            dt,
        );
        assert_relative_eq!(out.pose.theta, FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn zero_compliance_ignores_the_leash() {
        let params = UserParams {
            compliance: 0.0,
            ..UserParams::default()
        };
        let user = Pose::new(Vec2::ZERO, 0.0);
        let dt = 1.0 / 90.0;
        let force = Vec2::new(0.0, 50.0);
        let out = user_step(&user, &params, Vec2::new(10.0, 0.0), force, None, dt);
        assert_eq!(out.pose.theta, 0.0);
        // And an arrived zero-compliance user stands still under tension.
        let out = user_step(&user, &params, Vec2::new(0.1, 0.0), force, None, dt);
        assert_eq!(out.walk_speed, 0.0);
    }

    #[test]
    fn taut_leash_reels_in_an_arrived_user() {
        // Waypoint reached, robot 3 m away: the user turns to the tug and
        // walks until the leash goes slack, monotonically closing distance.
        let params = UserParams::default();
        let leash = LeashState::default();
        let robot = Vec2::new(3.0, 1.0);
        let mut user = Pose::new(Vec2::ZERO, std::f64::consts::PI); // facing away
        let dt = 1.0 / 90.0;
        let mut dist = user.p.distance(robot);
        let mut slack_at = None;
        for step in 0..2000 {
            let force = leash_force(user.p, robot, &leash);
            if force == Vec2::ZERO {
                slack_at = Some(step);
                break;
            }
            let out = user_step(&user, &params, user.p, force, None, dt);
            user = out.pose;
            let d = user.p.distance(robot);
            assert!(d <= dist + 1e-12, "distance increased: {dist} -> {d}");
            dist = d;
        }
        let reached = slack_at.expect("leash should go slack");
        assert!(reached > 0);
        assert!(user.p.distance(robot) <= leash.rest_length + 1e-9);
    }

    proptest! {
        // Kinematic bounds: displacement and heading change per step.
        #[test]
        fn step_bounds(
            theta in 0.0f64..std::f64::consts::TAU,
            wx in -10.0f64..10.0, wy in -10.0f64..10.0,
            fx in -50.0f64..50.0, fy in -50.0f64..50.0,
        ) {
            let params = UserParams::default();
            let user = Pose::new(Vec2::ZERO, theta);
            let dt = 1.0 / 90.0;
            let out = user_step(&user, &params, Vec2::new(wx, wy), Vec2::new(fx, fy), None, dt);
            prop_assert!(out.pose.p.distance(user.p) <= params.walk_speed * dt + 1e-12);
            prop_assert!(
                wrap_angle_signed(out.pose.theta - user.theta).abs()
                    <= params.turn_rate_max * dt + 1e-12
            );
        }

        // Monotone influence: growing the force magnitude never widens the
        // angle between the executed heading and the force direction.
        #[test]
        fn stronger_force_never_less_aligned(
            theta in 0.0f64..std::f64::consts::TAU,
            fdir in 0.0f64..std::f64::consts::TAU,
            mag_lo in 0.0f64..30.0,
            extra in 0.0f64..30.0,
        ) {
            let params = UserParams::default();
            let user = Pose::new(Vec2::ZERO, theta);
            let waypoint = Vec2::new(10.0, 0.0);
            let dt = 1.0 / 90.0;
            let f_lo = Vec2::from_angle(fdir) * mag_lo;
            let f_hi = Vec2::from_angle(fdir) * (mag_lo + extra);
            let lo = user_step(&user, &params, waypoint, f_lo, None, dt);
            let hi = user_step(&user, &params, waypoint, f_hi, None, dt);
            let a_lo = wrap_angle_signed(fdir - lo.pose.theta).abs();
            let a_hi = wrap_angle_signed(fdir - hi.pose.theta).abs();
            prop_assert!(a_hi <= a_lo + 1e-9);
        }
    }
}
