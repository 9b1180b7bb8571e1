//! Radiation field shading, trajectory exposure analytics and the
//! nonparametric statistics used to compare visual encodings.
//!
//! The crate is organized bottom-up: [`field`] evaluates dose rates,
//! [`encoding`] and [`stencil`] turn them into colors and masks, [`render`]
//! rasterizes shaded meshes, [`exposure`] scores walked trajectories,
//! [`stats`] compares encodings, and [`harness`] ties scenes, schedules and
//! simulated walkers together.

pub mod encoding;
pub mod error;
pub mod exposure;
pub mod field;
pub mod harness;
pub mod par;
pub mod render;
pub mod stats;
pub mod stencil;

pub use error::{Error, Result};
