//! Fixed-timestep episode loop wiring redirection, user, companion, and robot
//! together, with metrics collection and optional per-frame tracing.
//!
//! Step order: steer/reset decision, map update, user step, companion step,
//! robot retarget/plan/step, leash force for the next step, metrics.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::companion::{
    companion_step, follow_target, CompanionInputs, CompanionMode, CompanionState,
};
use crate::error::Result;
use crate::math::Vec2;
use crate::redirection::{inject_rotation, map_to_virtual, reset_step, steer_to_center, RedirectMap};
use crate::robot::{colocation_error, control_step, robot_goal, RobotState};
use crate::scenario::{Condition, Scenario};
use crate::user::{leash_force, user_step, ResetCommand};
use crate::world::{boundary_distance, Pose};

/// Per-episode metrics; one row of the experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub condition: Condition,
    /// Breaks in presence: the number of resets that began.
    pub bips: u32,
    pub completed: bool,
    /// Seconds to reach the goal; the time limit when not completed.
    pub completion_time: f64,
    pub mean_rc_error: f64,
    pub max_rc_error: f64,
    pub physical_path_length: f64,
    pub virtual_path_length: f64,
    /// The user escaped the tracked space and the episode was aborted.
    pub fault: bool,
}

/// One line of the JSONL trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub step: u64,
    pub physical_user: Pose,
    pub virtual_user: Pose,
    pub robot: Pose,
    pub dog: Vec2,
    pub companion_mode: CompanionMode,
    pub reset_active: bool,
    pub rc_error: f64,
    pub leash_tension: f64,
}

/// Where per-frame records go.
pub enum TraceSink<'a> {
    None,
    Memory(&'a mut Vec<FrameRecord>),
    Writer(&'a mut dyn Write),
}

impl TraceSink<'_> {
    fn record(&mut self, frame: FrameRecord) -> Result<()> {
        match self {
            TraceSink::None => {}
            TraceSink::Memory(v) => v.push(frame),
            TraceSink::Writer(w) => {
                serde_json::to_writer(&mut **w, &frame)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// The physical room has walls: the robot can be asked to co-locate with an
/// image outside them, but it can only ever drive to the nearest point inside.
fn clamp_into_room(p: Vec2, space: &crate::world::TrackedSpace) -> Vec2 {
    const WALL_MARGIN: f64 = 0.1;
    let hx = space.half_extents.x - WALL_MARGIN;
    let hy = space.half_extents.y - WALL_MARGIN;
    Vec2::new(
        (p.x - space.center.x).clamp(-hx, hx) + space.center.x,
        (p.y - space.center.y).clamp(-hy, hy) + space.center.y,
    )
}

/// Run one episode. The result is a pure function of (scenario, seed).
///
/// The scenario must already be validated; `Scenario::load` and
/// `Scenario::from_json` guarantee that.
pub fn run_episode(scenario: &Scenario, seed: u64) -> EpisodeResult {
    run_episode_traced(scenario, seed, TraceSink::None)
        .expect("episode without trace IO cannot fail")
}

pub fn run_episode_traced(
    scenario: &Scenario,
    seed: u64,
    mut trace: TraceSink<'_>,
) -> Result<EpisodeResult> {
    let dt = scenario.dt();
    let max_steps = scenario.max_steps();
    let guided = scenario.condition == Condition::Guided;
    let pe = &scenario.pe;
    let reset_params = scenario.redirection.reset;
    let steer_params = scenario.redirection.steer;
    let guidance_distance = scenario.redirection.guidance_distance;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start_physical = match scenario.start_physical {
        Some(p) => p,
        None => {
            // Jitter over the central half of the room, uniform heading.
            let hx = pe.half_extents.x / 2.0;
            let hy = pe.half_extents.y / 2.0;
            let x = pe.center.x + rng.random_range(-hx..=hx);
            let y = pe.center.y + rng.random_range(-hy..=hy);
            let theta = rng.random_range(0.0..TAU);
            Pose::new(Vec2::new(x, y), theta)
        }
    };

    let mut map = RedirectMap::aligning(&start_physical, &scenario.ve.task_start);
    let mut user_pose = start_physical;
    let mut virtual_user = map_to_virtual(&map, &user_pose);
    let mut companion = CompanionState::new(follow_target(
        &virtual_user,
        scenario.companion.lead_offset,
    ));
    // The robot starts co-located with the dog's relative position.
    let mut robot: Option<RobotState> = guided.then(|| {
        let goal = robot_goal(&user_pose, &virtual_user, companion.position, map.phi);
        RobotState::new(Pose::new(goal, user_pose.theta), &scenario.robot)
    });

    let mut reset_active = false;
    let mut prev_danger = false;
    let mut force = Vec2::ZERO;
    let mut prev_walk = 0.0;
    let mut prev_turn = 0.0;

    let mut bips: u32 = 0;
    let mut fault = false;
    let mut completed = false;
    let mut completion_time = scenario.run.time_limit;
    let mut physical_path = 0.0;
    let mut virtual_path = 0.0;
    let mut rc_sum = 0.0;
    let mut rc_max: f64 = 0.0;
    let mut rc_samples: u64 = 0;

    for step in 0..max_steps {
        // Boundary state decides resets and preemptive guidance.
        let (bd, normal) = match boundary_distance(pe, user_pose.p) {
            Ok(v) => v,
            Err(_) => {
                fault = true;
                break;
            }
        };
        let heading_out = user_pose.heading().dot(normal) > 0.0;

        let mut request_distraction = false;
        if !reset_active && bd < reset_params.trigger_distance && heading_out {
            reset_active = true;
            bips += 1;
            request_distraction = true;
        }
        // Preemptive guidance keys on radially outward motion: the nearest
        // wall's normal misses tangential approaches that skim one wall and
        // run into the next.
        let radial_out = user_pose.heading().dot(user_pose.p - pe.center) > 0.0;
        let danger = guided
            && guidance_distance > 0.0
            && !reset_active
            && bd < guidance_distance
            && radial_out;
        if danger && !prev_danger {
            request_distraction = true;
        }
        prev_danger = danger;

        let distracting = guided && companion.mode == CompanionMode::Distract;

        // Reset turning with counter-rotation, or steer-to-center injection.
        let mut reset_cmd: Option<ResetCommand> = None;
        if reset_active {
            let mut active = reset_params;
            active.active = true;
            let (turn_command, counter_delta, done) =
                reset_step(&active, &map, &user_pose, pe, dt);
            if done {
                reset_active = false;
            } else {
                map = inject_rotation(&map, counter_delta, virtual_user.p);
                reset_cmd = Some(ResetCommand { turn_command });
            }
        }
        if reset_cmd.is_none() {
            let delta = steer_to_center(
                &map,
                &user_pose,
                prev_walk,
                prev_turn,
                dt,
                pe,
                &steer_params,
                distracting,
            );
            if delta != 0.0 {
                map = inject_rotation(&map, delta, virtual_user.p);
            }
        }

        // User pursues the task goal's physical image, blended with the tug.
        let waypoint_phys = map.to_physical(scenario.ve.task_goal);
        let out = user_step(&user_pose, &scenario.user, waypoint_phys, force, reset_cmd, dt);
        physical_path += out.pose.p.distance(user_pose.p);
        user_pose = out.pose;
        prev_walk = out.walk_speed;
        prev_turn = out.turn_rate;
        let new_virtual = map_to_virtual(&map, &user_pose);
        virtual_path += new_virtual.p.distance(virtual_user.p);
        virtual_user = new_virtual;

        // Companion follows or runs its distraction.
        let inputs = CompanionInputs {
            physical_user: &user_pose,
            virtual_user: &virtual_user,
            map_phi: map.phi,
            space: pe,
            ve: &scenario.ve.env,
            user_speed: out.walk_speed,
            reset_active,
            danger,
            request_distraction,
        };
        companion = companion_step(&companion, &scenario.companion, &inputs, dt);

        // Robot chases the dog's relative position; leash force feeds the
        // next step.
        let mut rc_error = 0.0;
        let mut tension = 0.0;
        if let Some(rob) = robot.as_mut() {
            let target = clamp_into_room(
                robot_goal(&user_pose, &virtual_user, companion.position, map.phi),
                pe,
            );
            let rc = colocation_error(
                &user_pose,
                &rob.pose,
                &virtual_user,
                companion.position,
                map.phi,
            );
            *rob = control_step(rob, &scenario.robot, target, rc.error, dt, &mut rng);
            rc_error = rc.error;
            rc_sum += rc.error;
            rc_max = rc_max.max(rc.error);
            rc_samples += 1;
            force = leash_force(user_pose.p, rob.pose.p, &scenario.leash);
            tension = force.norm();
        }

        trace.record(FrameRecord {
            step,
            physical_user: user_pose,
            virtual_user,
            robot: robot.map_or(Pose::new(Vec2::ZERO, 0.0), |r| r.pose),
            dog: companion.position,
            companion_mode: companion.mode,
            reset_active,
            rc_error,
            leash_tension: tension,
        })?;

        if virtual_user.p.distance(scenario.ve.task_goal) <= scenario.user.arrived_radius {
            completed = true;
            completion_time = (step + 1) as f64 * dt;
            break;
        }
    }

    Ok(EpisodeResult {
        seed,
        condition: scenario.condition,
        bips,
        completed,
        completion_time,
        mean_rc_error: if rc_samples > 0 {
            rc_sum / rc_samples as f64
        } else {
            0.0
        },
        max_rc_error: rc_max,
        physical_path_length: physical_path,
        virtual_path_length: virtual_path,
        fault,
    })
}
