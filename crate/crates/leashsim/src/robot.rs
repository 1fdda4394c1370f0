//! The physical haptic proxy: relative co-location with the virtual dog,
//! circular-arc path planning, and differential-drive kinematics with
//! closed-form (drift-free) pose integration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::math::{wrap_angle_signed, Vec2};
use crate::world::Pose;

/// Lateral offsets below this are treated as dead ahead / dead behind.
pub const EPS_LATERAL: f64 = 1e-6;
/// Goals closer than this need no plan at all.
pub const ARRIVAL_EPS: f64 = 1e-9;

/// A drivable path primitive.
///
/// `Arc` radii are strictly positive and the start heading is tangent to the
/// circle; `turn_sign` is +1 for a left (CCW) turn, -1 for right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcPlan {
    Straight {
        remaining_length: f64,
    },
    Arc {
        radius: f64,
        center: Vec2,
        turn_sign: f64,
        remaining_length: f64,
    },
    /// Goal behind the robot: turn in place toward it, then plan again.
    PivotThenPlan {
        turn_sign: f64,
    },
}

impl ArcPlan {
    pub fn remaining_length(&self) -> f64 {
        match self {
            ArcPlan::Straight { remaining_length } | ArcPlan::Arc { remaining_length, .. } => {
                *remaining_length
            }
            ArcPlan::PivotThenPlan { .. } => 0.0,
        }
    }
}

/// Relative co-location mismatch between robot and dog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoLocationError {
    pub error: f64,
    pub physical_relative: Vec2,
    pub virtual_relative_in_physical_frame: Vec2,
}

/// Robot tuning from the scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    /// Distance between the wheels (m).
    pub wheelbase: f64,
    pub v_max: f64,
    /// Co-location error below which the robot idles (m).
    pub deadband: f64,
    /// Re-plan when the goal moves more than this from the planned goal (m).
    pub replan_goal_tolerance: f64,
    /// In-place pivot rate (rad/s).
    pub pivot_rate: f64,
    /// Pivot ends when the goal bearing error falls below this (rad).
    pub pivot_tolerance: f64,
    /// Zero-mean uniform actuation noise amplitude on each wheel (m/s).
    pub noise_amplitude: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            wheelbase: 0.2,
            v_max: 2.0,
            deadband: 0.15,
            replan_goal_tolerance: 0.05,
            pivot_rate: std::f64::consts::TAU,
            pivot_tolerance: 0.02,
            noise_amplitude: 0.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        if self.wheelbase <= 0.0 || self.v_max <= 0.0 {
            return Err(SimError::InvalidScenario(
                "robot wheelbase and v_max must be strictly positive".into(),
            ));
        }
        if self.deadband < 0.0 || self.noise_amplitude < 0.0 {
            return Err(SimError::InvalidScenario(
                "robot deadband and noise must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The differential-drive robot with its current plan and wheel command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    /// Wheelbase (m); cached from params so kinematics stay self-contained.
    pub wheelbase: f64,
    pub v_max: f64,
    pub goal: Option<Vec2>,
    pub plan: Option<ArcPlan>,
    /// Goal position the current plan was computed for.
    pub plan_goal: Option<Vec2>,
    /// Commanded wheel speeds (left, right) in m/s for the next step.
    pub wheel_cmd: (f64, f64),
}

impl RobotState {
    pub fn new(pose: Pose, params: &RobotParams) -> Self {
        RobotState {
            pose,
            wheelbase: params.wheelbase,
            v_max: params.v_max,
            goal: None,
            plan: None,
            plan_goal: None,
            wheel_cmd: (0.0, 0.0),
        }
    }
}

/// Mismatch between the robot's position relative to the physical user and
/// the dog's position relative to the virtual user, compared in the physical
/// frame by undoing the map rotation.
pub fn colocation_error(
    physical_user: &Pose,
    robot: &Pose,
    virtual_user: &Pose,
    dog_pos: Vec2,
    map_phi: f64,
) -> CoLocationError {
    let physical_relative = robot.p - physical_user.p;
    let virtual_relative_in_physical_frame = (dog_pos - virtual_user.p).rotated(-map_phi);
    CoLocationError {
        error: (physical_relative - virtual_relative_in_physical_frame).norm(),
        physical_relative,
        virtual_relative_in_physical_frame,
    }
}

/// Where the robot should be so the co-location error vanishes. Recomputed
/// every frame so injected map rotation immediately re-targets the robot.
pub fn robot_goal(
    physical_user: &Pose,
    virtual_user: &Pose,
    dog_pos: Vec2,
    map_phi: f64,
) -> Vec2 {
    physical_user.p + (dog_pos - virtual_user.p).rotated(-map_phi)
}

/// Plan a path from the robot pose to the goal.
///
/// The goal is expressed in the robot frame as (forward, lateral). Goals dead
/// ahead get a straight plan; goals behind the robot (arc sweep would exceed
/// half a turn) get an in-place pivot; everything else gets the unique circle
/// through the goal tangent to the robot heading.
pub fn plan_arc(robot: &Pose, goal: Vec2) -> Result<ArcPlan> {
    let rel = goal - robot.p;
    if rel.norm() <= ARRIVAL_EPS {
        return Err(SimError::InvalidGeometry(
            "plan_arc called with the goal at the robot position".into(),
        ));
    }
    let heading = robot.heading();
    let forward = heading.dot(rel);
    let lateral = heading.cross(rel); // positive = goal to the left

    if lateral.abs() < EPS_LATERAL {
        if forward > 0.0 {
            return Ok(ArcPlan::Straight {
                remaining_length: forward,
            });
        }
        // Dead behind: pivot; left by convention.
        return Ok(ArcPlan::PivotThenPlan { turn_sign: 1.0 });
    }

    // Sweep angle of the tangent circle is 2*atan2(|lateral|, forward); it
    // exceeds half a turn exactly when the goal lies behind the robot.
    if forward < 0.0 {
        return Ok(ArcPlan::PivotThenPlan {
            turn_sign: lateral.signum(),
        });
    }

    let radius = rel.norm_squared() / (2.0 * lateral.abs());
    let turn_sign = lateral.signum();
    let left_normal = heading.rotated(std::f64::consts::FRAC_PI_2);
    let center = robot.p + left_normal * (radius * turn_sign);
    let sweep = 2.0 * lateral.abs().atan2(forward);
    Ok(ArcPlan::Arc {
        radius,
        center,
        turn_sign,
        remaining_length: radius * sweep,
    })
}

/// Wheel speeds that drive the plan at commanded speed `v_cmd` for a robot
/// with wheel separation `d`. The outer wheel runs at `v_cmd`.
pub fn wheel_speeds(plan: &ArcPlan, v_cmd: f64, d: f64) -> Result<(f64, f64)> {
    match plan {
        ArcPlan::Straight { .. } => Ok((v_cmd, v_cmd)),
        ArcPlan::Arc {
            radius, turn_sign, ..
        } => {
            if *radius < d / 2.0 {
                return Err(SimError::InvalidGeometry(format!(
                    "arc radius {radius} is inside the minimum turning footprint {}",
                    d / 2.0
                )));
            }
            let inner = v_cmd * (radius - d / 2.0) / (radius + d / 2.0);
            if *turn_sign > 0.0 {
                // Left turn: right wheel is the outer wheel.
                Ok((inner, v_cmd))
            } else {
                Ok((v_cmd, inner))
            }
        }
        ArcPlan::PivotThenPlan { .. } => Err(SimError::InvalidGeometry(
            "wheel_speeds needs a straight or arc plan".into(),
        )),
    }
}

/// Advance the robot by one step from its commanded wheel speeds.
///
/// Unicycle twist: v = (vl + vr) / 2, omega = (vr - vl) / d. The pose update
/// rotates about the instantaneous center of curvature in closed form, so a
/// constant command traces an exact circle with no per-step integration
/// drift. Plan bookkeeping decrements the remaining length, clamping the
/// final step to land exactly at arrival.
pub fn robot_step(robot: &RobotState, dt: f64) -> RobotState {
    debug_assert!(dt >= 0.0);
    let mut next = *robot;
    if dt == 0.0 {
        return next;
    }
    let (vl, vr) = robot.wheel_cmd;
    let v = (vl + vr) / 2.0;
    let omega = (vr - vl) / robot.wheelbase;
    if v == 0.0 && omega == 0.0 {
        return next;
    }

    // Clamp the step so the plan ends exactly at its goal.
    let mut dt_eff = dt;
    if let Some(plan) = robot.plan {
        let remaining = plan.remaining_length();
        match plan {
            ArcPlan::Straight { .. } | ArcPlan::Arc { .. } if v > 0.0 => {
                if v * dt >= remaining {
                    dt_eff = remaining / v;
                }
                let travelled = v * dt_eff;
                next.plan = Some(match plan {
                    ArcPlan::Straight { remaining_length } => ArcPlan::Straight {
                        remaining_length: (remaining_length - travelled).max(0.0),
                    },
                    ArcPlan::Arc {
                        radius,
                        center,
                        turn_sign,
                        remaining_length,
                    } => ArcPlan::Arc {
                        radius,
                        center,
                        turn_sign,
                        remaining_length: (remaining_length - travelled).max(0.0),
                    },
                    p @ ArcPlan::PivotThenPlan { .. } => p,
                });
            }
            _ => {}
        }
    }

    if omega.abs() < 1e-12 {
        next.pose = Pose::new(
            robot.pose.p + robot.pose.heading() * (v * dt_eff),
            robot.pose.theta,
        );
    } else {
        // Exact constant-twist step, expressed in the robot frame so huge
        // turning radii never meet catastrophic cancellation:
        // forward = r sin(dθ), leftward = r (1 - cos(dθ)) = 2 r sin²(dθ/2).
        let r_signed = v / omega;
        let dtheta = omega * dt_eff;
        let half_sin = (dtheta / 2.0).sin();
        let local = Vec2::new(r_signed * dtheta.sin(), 2.0 * r_signed * half_sin * half_sin);
        next.pose = Pose::new(
            robot.pose.p + local.rotated(robot.pose.theta),
            robot.pose.theta + dtheta,
        );
    }
    next
}

/// One frame of the robot controller: retarget, re-plan when needed, drive.
///
/// The goal is recomputed upstream every frame; the controller idles inside
/// the co-location deadband, pivots when the plan demands it, and otherwise
/// follows the plan at `v_max` with optional zero-mean wheel noise.
pub fn control_step<R: Rng>(
    robot: &RobotState,
    params: &RobotParams,
    target: Vec2,
    rc_error: f64,
    dt: f64,
    rng: &mut R,
) -> RobotState {
    let mut state = *robot;
    state.goal = Some(target);

    if rc_error <= params.deadband {
        state.plan = None;
        state.plan_goal = None;
        state.wheel_cmd = (0.0, 0.0);
        return state;
    }

    let stale = match state.plan_goal {
        Some(g) => g.distance(target) > params.replan_goal_tolerance,
        None => true,
    };
    if stale || state.plan.is_none() {
        match plan_arc(&state.pose, target) {
            Ok(plan) => {
                state.plan = Some(plan);
                state.plan_goal = Some(target);
            }
            Err(_) => {
                // Goal coincides with the pose; nothing to drive.
                state.plan = None;
                state.plan_goal = None;
                state.wheel_cmd = (0.0, 0.0);
                return state;
            }
        }
    }

    let plan = state.plan.expect("plan set above");
    if let ArcPlan::PivotThenPlan { turn_sign } = plan {
        let bearing = (target - state.pose.p).angle();
        let err = wrap_angle_signed(bearing - state.pose.theta);
        if err.abs() <= params.pivot_tolerance {
            // Facing the goal: plan fresh from the new heading.
            match plan_arc(&state.pose, target) {
                Ok(p) => {
                    state.plan = Some(p);
                    state.plan_goal = Some(target);
                }
                Err(_) => {
                    state.plan = None;
                    return state;
                }
            }
        } else {
            // Turn in place; pick the pivot direction from the live bearing
            // error rather than the stale plan hint.
            let sign = if err != 0.0 { err.signum() } else { turn_sign };
            let turn = (params.pivot_rate * dt).min(err.abs()) * sign;
            let omega = turn / dt;
            let half = omega * state.wheelbase / 2.0;
            state.wheel_cmd = (-half, half);
            let mut next = robot_step(&state, dt);
            next.plan = Some(plan);
            return next;
        }
    }

    let plan = state.plan.expect("plan is straight or arc here");
    // Arc tighter than the wheel footprint cannot be driven: pivot instead.
    let (mut vl, mut vr) = match wheel_speeds(&plan, params.v_max, state.wheelbase) {
        Ok(w) => w,
        Err(_) => {
            state.plan = Some(ArcPlan::PivotThenPlan { turn_sign: 1.0 });
            return state;
        }
    };
    if params.noise_amplitude > 0.0 {
        vl += rng.random_range(-params.noise_amplitude..=params.noise_amplitude);
        vr += rng.random_range(-params.noise_amplitude..=params.noise_amplitude);
    }
    state.wheel_cmd = (vl, vr);
    robot_step(&state, dt)
}
