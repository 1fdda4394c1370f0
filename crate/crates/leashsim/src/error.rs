//! Error types for scenario loading and simulation faults.

use thiserror::Error;

use crate::math::Vec2;

#[derive(Debug, Error)]
pub enum SimError {
    /// A point that must lie inside the tracked space was strictly outside it.
    #[error("point ({}, {}) is outside the tracked space", .0.x, .0.y)]
    OutsideTrackedSpace(Vec2),

    /// Geometry that fails its construction invariants.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A scenario file that fails validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The simulated user escaped the tracked space; the episode is aborted.
    #[error("simulation fault: {0}")]
    Fault(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
