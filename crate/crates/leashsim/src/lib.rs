//! Deterministic desk-scale simulator of leash-tethered robot guidance for
//! redirected walking: a differential-drive haptic proxy stays co-located
//! with a virtual dog companion and tugs a simulated user away from the
//! tracked-space boundary while steer-to-center redirection bends their
//! physical path.

pub mod batch;
pub mod companion;
pub mod episode;
pub mod error;
pub mod math;
pub mod redirection;
pub mod robot;
pub mod scenario;
pub mod user;
pub mod world;

pub use error::{Result, SimError};
