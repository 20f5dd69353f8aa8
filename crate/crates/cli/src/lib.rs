//! HTTP routes and terminal rendering for the `askgraph` binary.

pub mod render;
pub mod server;
