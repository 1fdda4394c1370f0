//! The virtual dog companion: a two-state FSM that walks ahead of the user
//! and, when distraction is requested, sprints to a goal chosen by casting
//! the user-to-room-center ray into the virtual environment.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::Vec2;
use crate::world::{segment_first_hit, Environment, Pose, TrackedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompanionMode {
    Follow,
    Distract,
}

/// Tunable companion behavior. All distances in meters, speeds in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompanionParams {
    pub speed_follow: f64,
    pub speed_run: f64,
    /// Follow-mode offset in the user's virtual frame (ahead, left).
    pub lead_offset: Vec2,
    /// Potential goals within this radius of the ray endpoint snap the goal.
    pub snap_radius: f64,
    /// Backoff from an obstructing obstacle edge along the ray.
    pub clearance: f64,
    /// Follow-mode target only moves while the user walks faster than this.
    pub user_speed_deadband: f64,
    /// Distraction counts as delivered once the dog is this close to its goal.
    pub goal_reached_radius: f64,
    /// The dog waits at its distraction goal until the user is back within
    /// this distance, so the proxy never tugs from behind a walking user.
    pub regroup_radius: f64,
}

impl Default for CompanionParams {
    fn default() -> Self {
        CompanionParams {
            speed_follow: 1.4,
            speed_run: 3.0,
            lead_offset: Vec2::new(1.2, 0.5),
            snap_radius: 0.5,
            clearance: 0.2,
            user_speed_deadband: 0.05,
            goal_reached_radius: 0.3,
            regroup_radius: 2.0,
        }
    }
}

impl CompanionParams {
    pub fn validate(&self) -> Result<()> {
        use crate::error::SimError;
        if self.speed_follow <= 0.0 || self.speed_run <= 0.0 {
            return Err(SimError::InvalidScenario(
                "companion speeds must be strictly positive".into(),
            ));
        }
        if self.snap_radius < 0.0 || self.clearance < 0.0 || self.goal_reached_radius <= 0.0 {
            return Err(SimError::InvalidScenario(
                "companion radii must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// FSM state of the dog. In `Distract` mode a goal is always set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompanionState {
    pub mode: CompanionMode,
    /// Dog position in the virtual environment.
    pub position: Vec2,
    pub current_goal: Option<Vec2>,
}

impl CompanionState {
    pub fn new(position: Vec2) -> Self {
        CompanionState {
            mode: CompanionMode::Follow,
            position,
            current_goal: None,
        }
    }
}

/// Everything `companion_step` needs to know about the rest of the world.
pub struct CompanionInputs<'a> {
    pub physical_user: &'a Pose,
    pub virtual_user: &'a Pose,
    pub map_phi: f64,
    pub space: &'a TrackedSpace,
    pub ve: &'a Environment,
    /// The user's executed walk speed last step (m/s).
    pub user_speed: f64,
    /// A reset is currently running.
    pub reset_active: bool,
    /// The user is still in the boundary danger zone heading outward.
    pub danger: bool,
    /// A distraction should start (or restart with a fresh goal) this step.
    pub request_distraction: bool,
}

/// Follow-mode target: the lead offset expressed in the user's virtual frame.
pub fn follow_target(virtual_user: &Pose, lead_offset: Vec2) -> Vec2 {
    virtual_user.p + lead_offset.rotated(virtual_user.theta)
}

/// Pick the distraction goal in the virtual environment.
///
/// The user-to-room-center vector is rotated into the virtual frame by the
/// current map rotation and laid off from the virtual user. A potential goal
/// near the endpoint snaps the choice; an obstructing obstacle pulls it back
/// to just short of the first hit; otherwise the endpoint itself is the goal.
pub fn select_distraction_goal(
    physical_user: &Pose,
    virtual_user: &Pose,
    map_phi: f64,
    space: &TrackedSpace,
    ve: &Environment,
    params: &CompanionParams,
) -> Vec2 {
    let w = space.center - physical_user.p;
    let Some(_) = w.normalized() else {
        // User standing exactly on the room center: no displacement to mirror.
        return follow_target(virtual_user, params.lead_offset);
    };
    let offset = w.rotated(map_phi);
    let endpoint = virtual_user.p + offset;

    let snapped = ve
        .potential_goals
        .iter()
        .map(|&g| (g, g.distance(endpoint)))
        .filter(|&(_, d)| d <= params.snap_radius)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((goal, _)) = snapped {
        return goal;
    }

    if let Some((_, hit_dist)) = segment_first_hit(virtual_user.p, endpoint, &ve.obstacles) {
        let dir = offset.normalized().expect("offset is nonzero here");
        return virtual_user.p + dir * (hit_dist - params.clearance).max(0.0);
    }

    endpoint
}

/// Advance the dog by one step: handle mode transitions, then move toward the
/// current mode's target, clamped to arrive exactly.
pub fn companion_step(
    state: &CompanionState,
    params: &CompanionParams,
    inputs: &CompanionInputs<'_>,
    dt: f64,
) -> CompanionState {
    debug_assert!(dt > 0.0);
    let mut next = *state;

    if inputs.request_distraction {
        next.mode = CompanionMode::Distract;
    }
    if next.mode == CompanionMode::Distract {
        // Re-select every frame: redirection keeps rotating the virtual
        // frame, and refreshing the ray keeps the goal's physical image
        // pinned on the room center instead of orbiting the user.
        let goal = select_distraction_goal(
            inputs.physical_user,
            inputs.virtual_user,
            inputs.map_phi,
            inputs.space,
            inputs.ve,
            params,
        );
        next.current_goal = Some(goal);
        if !inputs.request_distraction {
            let delivered = next.position.distance(goal) <= params.goal_reached_radius;
            let regrouped =
                inputs.virtual_user.p.distance(next.position) <= params.regroup_radius;
            if delivered && regrouped && !inputs.reset_active && !inputs.danger {
                next.mode = CompanionMode::Follow;
                next.current_goal = None;
            }
        }
    }

    match next.mode {
        CompanionMode::Follow => {
            // The dog stays put while the user stands still.
            if inputs.user_speed > params.user_speed_deadband {
                let target = follow_target(inputs.virtual_user, params.lead_offset);
                next.position = advance(next.position, target, params.speed_follow * dt);
            }
        }
        CompanionMode::Distract => {
            let goal = next.current_goal.expect("distract mode always has a goal");
            next.position = advance(next.position, goal, params.speed_run * dt);
        }
    }
    next
}

fn advance(from: Vec2, to: Vec2, max_step: f64) -> Vec2 {
    let delta = to - from;
    let dist = delta.norm();
    if dist <= max_step {
        to
    } else {
        from + delta * (max_step / dist)
    }
}
