//! HTTP service and command-line front end for the `ntrl` encounter
//! workbench: sessions with random parties, simulation, three-encounter
//! submissions, and DM / RND / NTRL suggestions.

pub mod api;
pub mod cli;
pub mod error;
pub mod store;

pub use api::{router, AppState, ServiceConfig};
pub use error::{ApiError, ErrorBody};
pub use store::Store;
