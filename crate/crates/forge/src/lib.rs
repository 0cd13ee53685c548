//! Command line runner and local HTTP session service.

pub mod archive;
pub mod server;

pub use archive::zip_bundle;
pub use server::{router, AppState};
