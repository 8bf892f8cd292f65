//! Command-line and HTTP gateway for the SLA registry and the path-ranking
//! query engine. The binary front-end lives in `main.rs`; these modules are
//! exposed as a library so integration tests can drive the service router
//! and the file store directly.

pub mod config;
pub mod ops;
pub mod output;
pub mod server;
pub mod store;
