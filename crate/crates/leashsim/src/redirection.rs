//! Redirected walking: the rigid physical-to-virtual map, steer-to-center
//! gain injection, and the boundary reset state machine.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::{wrap_angle, wrap_angle_signed, Vec2};
use crate::world::{boundary_distance, Pose, TrackedSpace};

/// Rigid physical-to-virtual transform: rotation `phi` then translation `t`.
///
/// virtual position = rotate(phi) * physical position + t
/// virtual heading  = physical heading + phi  (mod 2*pi)
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedirectMap {
    pub phi: f64,
    pub t: Vec2,
}

impl RedirectMap {
    pub fn identity() -> Self {
        RedirectMap {
            phi: 0.0,
            t: Vec2::ZERO,
        }
    }

    /// Map that places physical pose `physical` at virtual pose `virtual_pose`.
    pub fn aligning(physical: &Pose, virtual_pose: &Pose) -> Self {
        let phi = wrap_angle(virtual_pose.theta - physical.theta);
        let t = virtual_pose.p - physical.p.rotated(phi);
        RedirectMap { phi, t }
    }

    /// Inverse image of a virtual point in the physical environment.
    pub fn to_physical(&self, virtual_point: Vec2) -> Vec2 {
        (virtual_point - self.t).rotated(-self.phi)
    }
}

/// Virtual pose of a physical pose under the map.
pub fn map_to_virtual(map: &RedirectMap, physical: &Pose) -> Pose {
    Pose::new(
        physical.p.rotated(map.phi) + map.t,
        physical.theta + map.phi,
    )
}

/// Rotate the virtual environment by `delta` around the user's current virtual
/// position. The anchor's virtual image is unchanged; the virtual heading
/// there changes by exactly `delta`.
pub fn inject_rotation(map: &RedirectMap, delta: f64, virtual_anchor: Vec2) -> RedirectMap {
    // t' = anchor - R(delta) * (anchor - t) keeps the anchor fixed without
    // ever evaluating trig of the accumulated phi.
    RedirectMap {
        phi: wrap_angle(map.phi + delta),
        t: virtual_anchor - (virtual_anchor - map.t).rotated(delta),
    }
}

/// Steering gains. All strictly positive; `distract_boost >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteerParams {
    /// Max injected curvature per meter walked (1/m).
    pub kappa_max: f64,
    /// Fraction of the user's own turn rate available for gain injection.
    pub rot_gain_spread: f64,
    /// Hard cap on injected rotation rate (rad/s).
    pub rho_max: f64,
    /// Gain multiplier while the companion is distracting.
    pub distract_boost: f64,
}

impl Default for SteerParams {
    fn default() -> Self {
        SteerParams {
            kappa_max: 1.0 / 7.5,
            rot_gain_spread: 0.2,
            rho_max: 0.35,
            distract_boost: 2.0,
        }
    }
}

impl SteerParams {
    pub fn validate(&self) -> Result<()> {
        use crate::error::SimError;
        if self.kappa_max <= 0.0 || self.rot_gain_spread <= 0.0 || self.rho_max <= 0.0 {
            return Err(SimError::InvalidScenario(
                "steer gains must be strictly positive".into(),
            ));
        }
        if self.distract_boost < 1.0 {
            return Err(SimError::InvalidScenario(
                "distract_boost must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Steer-to-center rotation injection for one step.
///
/// The magnitude combines a curvature gain on walked distance with a rotation
/// gain on the user's own turning, capped at `rho_max * dt`; the distraction
/// boost multiplies the capped value. The sign is chosen so that the user's
/// compensatory physical turn (always opposite the injected virtual rotation)
/// curves their physical path toward the center of the tracked space.
#[allow(clippy::too_many_arguments)]
pub fn steer_to_center(
    _map: &RedirectMap,
    physical_user: &Pose,
    walk_speed: f64,
    turn_rate: f64,
    dt: f64,
    space: &TrackedSpace,
    params: &SteerParams,
    distracting: bool,
) -> f64 {
    debug_assert!(dt > 0.0);
    if walk_speed == 0.0 && turn_rate == 0.0 {
        return 0.0;
    }
    let to_center = space.center - physical_user.p;
    let cross = physical_user.heading().cross(to_center);
    // Turning the user toward the center needs a physical turn of sign(cross);
    // the injected virtual rotation must be its negative.
    let sign = if cross > 0.0 {
        -1.0
    } else if cross < 0.0 {
        1.0
    } else {
        return 0.0; // at the center, or heading exactly along the center line
    };
    let magnitude = (params.rho_max * dt)
        .min(params.kappa_max * walk_speed * dt + params.rot_gain_spread * turn_rate.abs() * dt);
    let boost = if distracting {
        params.distract_boost
    } else {
        1.0
    };
    sign * magnitude * boost
}

/// Boundary reset: turn the user in place toward the room center while the
/// map counter-rotates so their virtual heading never changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResetState {
    #[serde(skip)]
    pub active: bool,
    /// Boundary distance below which a reset triggers (m).
    pub trigger_distance: f64,
    /// Remaining angular error at which the reset is complete (rad).
    pub completion_tolerance: f64,
    /// In-place turn rate of the simulated user during a reset (rad/s).
    pub turn_rate: f64,
}

impl Default for ResetState {
    fn default() -> Self {
        ResetState {
            active: false,
            trigger_distance: 0.5,
            completion_tolerance: 10.0_f64.to_radians(),
            turn_rate: 90.0_f64.to_radians(),
        }
    }
}

impl ResetState {
    pub fn validate(&self) -> Result<()> {
        use crate::error::SimError;
        if self.trigger_distance <= 0.0 {
            return Err(SimError::InvalidScenario(
                "reset trigger_distance must be > 0".into(),
            ));
        }
        if self.completion_tolerance <= 0.0 || self.completion_tolerance >= std::f64::consts::PI {
            return Err(SimError::InvalidScenario(
                "reset completion_tolerance must be in (0, pi)".into(),
            ));
        }
        if self.turn_rate <= 0.0 {
            return Err(SimError::InvalidScenario("reset turn_rate must be > 0".into()));
        }
        Ok(())
    }

    /// True when the user is close to a wall and still heading out of the room.
    pub fn should_trigger(&self, space: &TrackedSpace, physical_user: &Pose) -> Result<bool> {
        let (dist, normal) = boundary_distance(space, physical_user.p)?;
        Ok(dist < self.trigger_distance && physical_user.heading().dot(normal) > 0.0)
    }
}

/// One step of an active reset.
///
/// Returns the in-place turn command (rad/s), the counter-rotation to inject
/// into the map so the virtual heading stays constant, and whether the reset
/// has finished. The turn command is sized so `turn_command * dt` is exactly
/// the heading change the simulated user will execute this step.
pub fn reset_step(
    reset: &ResetState,
    _map: &RedirectMap,
    physical_user: &Pose,
    space: &TrackedSpace,
    dt: f64,
) -> (f64, f64, bool) {
    debug_assert!(reset.active);
    debug_assert!(dt > 0.0);
    let to_center = space.center - physical_user.p;
    let err = match to_center.normalized() {
        Some(dir) => wrap_angle_signed(dir.angle() - physical_user.theta),
        // Standing exactly on the center: any heading faces "inward".
        None => return (0.0, 0.0, true),
    };
    if err.abs() < reset.completion_tolerance {
        return (0.0, 0.0, true);
    }
    let max_turn = reset.turn_rate * dt;
    let turn = err.clamp(-max_turn, max_turn);
    (turn / dt, -turn, false)
}
