//! Framing, transport channels, session configuration and the party protocol.

pub mod channel;
pub mod config;
pub mod frame;
pub mod session;
