//! Scenes, schedules, synthetic walkers and batch pipelines.

pub mod agent;
pub mod pipeline;
pub mod scene;
pub mod schedule;

pub use agent::{simulate_agent, Policy, Waypoint};
pub use pipeline::{analyze, simulate_batch, simulate_participant, SimulationConfig, StatsReport};
pub use scene::{load_scene, validate_scene, Scene, Side};
pub use schedule::{generate_schedule, Schedule, Trial};
