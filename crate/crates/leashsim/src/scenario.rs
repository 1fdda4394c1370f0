//! Scenario files: the JSON schema tying every module's parameters together,
//! validation, and the built-in city scenario used by the experiments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::companion::CompanionParams;
use crate::error::{Result, SimError};
use crate::math::Vec2;
use crate::redirection::{ResetState, SteerParams};
use crate::robot::RobotParams;
use crate::user::{LeashState, UserParams};
use crate::world::{point_in_polygon, Environment, PolygonObstacle, Pose, TrackedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Guided,
    Unguided,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Guided => "guided",
            Condition::Unguided => "unguided",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "guided" => Ok(Condition::Guided),
            "unguided" => Ok(Condition::Unguided),
            other => Err(SimError::InvalidScenario(format!(
                "unknown condition '{other}' (expected guided or unguided)"
            ))),
        }
    }
}

/// Simulation rate and episode budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunParams {
    /// Steps per second.
    pub hz: f64,
    /// Episode budget in seconds.
    pub time_limit: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            hz: 90.0,
            time_limit: 330.0,
        }
    }
}

/// Redirection section: steering gains, the reset machine, and the distance
/// at which the companion starts a preemptive distraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RedirectionParams {
    pub steer: SteerParams,
    pub reset: ResetState,
    /// Boundary distance at which guided runs launch the dog toward the room
    /// center before a reset becomes necessary. Must be >= the reset trigger
    /// distance; 0 disables preemptive guidance.
    pub guidance_distance: f64,
}

/// The virtual-environment section: geometry plus the navigation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualWorld {
    #[serde(flatten)]
    pub env: Environment,
    pub task_start: Pose,
    pub task_goal: Vec2,
}

/// A complete experiment setup. One scenario plus one seed fully determines
/// an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub condition: Condition,
    pub pe: TrackedSpace,
    pub ve: VirtualWorld,
    #[serde(default)]
    pub redirection: RedirectionParams,
    #[serde(default)]
    pub companion: CompanionParams,
    #[serde(default)]
    pub robot: RobotParams,
    #[serde(default)]
    pub user: UserParams,
    #[serde(default)]
    pub leash: LeashState,
    #[serde(default)]
    pub run: RunParams,
    /// Fixed physical start pose. When absent, each seed jitters the start
    /// position uniformly over the central half of the room with a uniform
    /// random heading.
    #[serde(default)]
    pub start_physical: Option<Pose>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.run.hz.is_finite() || self.run.hz <= 0.0 {
            return Err(SimError::InvalidScenario("hz must be > 0".into()));
        }
        if !self.run.time_limit.is_finite() || self.run.time_limit <= 0.0 {
            return Err(SimError::InvalidScenario("time_limit must be > 0".into()));
        }
        TrackedSpace::new(self.pe.center, self.pe.half_extents)?;
        if !self.ve.task_start.p.is_finite()
            || !self.ve.task_start.theta.is_finite()
            || !self.ve.task_goal.is_finite()
        {
            return Err(SimError::InvalidScenario(
                "task start and goal must be finite".into(),
            ));
        }
        self.redirection.steer.validate()?;
        self.redirection.reset.validate()?;
        if self.redirection.guidance_distance < 0.0 {
            return Err(SimError::InvalidScenario(
                "guidance_distance must be >= 0".into(),
            ));
        }
        if self.redirection.guidance_distance > 0.0
            && self.redirection.guidance_distance < self.redirection.reset.trigger_distance
        {
            return Err(SimError::InvalidScenario(
                "guidance_distance must be >= the reset trigger distance".into(),
            ));
        }
        self.companion.validate()?;
        self.robot.validate()?;
        self.user.validate()?;
        self.leash.validate()?;

        for poly in &self.ve.env.obstacles {
            if point_in_polygon(poly, self.ve.task_goal) {
                return Err(SimError::InvalidScenario(format!(
                    "task goal lies inside obstacle '{}'",
                    poly.id
                )));
            }
            for (i, g) in self.ve.env.potential_goals.iter().enumerate() {
                if point_in_polygon(poly, *g) {
                    return Err(SimError::InvalidScenario(format!(
                        "potential goal #{i} lies inside obstacle '{}'",
                        poly.id
                    )));
                }
            }
        }

        // One user in both environments; the controllers are single-user.
        if !self.ve.env.users.is_empty() && self.ve.env.users.len() != 1 {
            return Err(SimError::InvalidScenario(format!(
                "expected exactly one user, scenario declares {}",
                self.ve.env.users.len()
            )));
        }
        let known_ids: Vec<&str> = self
            .ve
            .env
            .obstacles
            .iter()
            .map(|o| o.id.as_str())
            .chain(std::iter::once("dog"))
            .collect();
        for id in &self.ve.env.objects_of_interest {
            if !known_ids.contains(&id.as_str()) {
                return Err(SimError::InvalidScenario(format!(
                    "object of interest '{id}' matches no obstacle or entity id"
                )));
            }
        }

        if let Some(start) = &self.start_physical {
            if !self.pe.contains(start.p) {
                return Err(SimError::InvalidScenario(
                    "start_physical lies outside the tracked space".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.run.hz
    }

    /// Total step budget for one episode.
    pub fn max_steps(&self) -> u64 {
        (self.run.time_limit * self.run.hz).round() as u64
    }

    pub fn with_condition(&self, condition: Condition) -> Scenario {
        Scenario {
            condition,
            ..self.clone()
        }
    }

    /// The built-in experiment: an 8 m x 8 m empty tracked room and a city
    /// block grid with the navigation goal one block (25 m) down a street.
    pub fn default_city() -> Scenario {
        let mut obstacles = Vec::new();
        // 4x4 grid of 6 m x 6 m buildings with 4 m streets between them.
        for bx in 0..4 {
            for by in 0..4 {
                let center = Vec2::new(5.0 + 10.0 * bx as f64, 5.0 + 10.0 * by as f64);
                obstacles.push(
                    PolygonObstacle::rect(center, 3.0, 3.0, format!("block_{bx}{by}"))
                        .expect("static geometry is valid"),
                );
            }
        }
        // Lamp posts and hydrants at street corners near the route.
        let potential_goals = vec![
            Vec2::new(10.0, 19.0),
            Vec2::new(10.0, 21.0),
            Vec2::new(20.0, 19.0),
            Vec2::new(20.0, 21.0),
            Vec2::new(30.0, 19.0),
            Vec2::new(30.0, 21.0),
            Vec2::new(20.0, 10.0),
            Vec2::new(20.0, 30.0),
        ];
        let task_start = Pose::new(Vec2::new(7.5, 20.0), 0.0);
        let ve = VirtualWorld {
            env: Environment {
                obstacles,
                users: vec![task_start],
                robots: Vec::new(),
                potential_goals,
                objects_of_interest: vec!["dog".to_string()],
            },
            task_start,
            task_goal: Vec2::new(32.5, 20.0),
        };
        let scenario = Scenario {
            condition: Condition::Guided,
            pe: TrackedSpace::new(Vec2::ZERO, Vec2::new(4.0, 4.0))
                .expect("static geometry is valid"),
            ve,
            redirection: RedirectionParams {
                guidance_distance: 2.5,
                ..RedirectionParams::default()
            },
            companion: CompanionParams::default(),
            robot: RobotParams::default(),
            user: UserParams::default(),
            leash: LeashState::default(),
            run: RunParams::default(),
            start_physical: None,
        };
        scenario.validate().expect("built-in scenario is valid");
        scenario
    }
}
