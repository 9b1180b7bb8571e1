//! Session backend for running encoding walkthroughs with people.
//!
//! Movement is server-authoritative: clients send direction intents and the
//! server integrates position and dose. See [`api`] for the wire interface.

pub mod api;
pub mod error;
pub mod session;

pub use api::{app, router, serve, AppState, ServiceConfig};
pub use error::{ServiceError, ServiceResult};
pub use session::{Session, SessionState};
