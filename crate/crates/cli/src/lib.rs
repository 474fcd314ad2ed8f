//! Command-line driver and WebSocket session service for the live-wire
//! toolkit.

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;
