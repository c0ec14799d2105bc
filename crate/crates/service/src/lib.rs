//! Session service, wire protocol and batch tools around the skelforge
//! engine.

pub mod batch;
pub mod protocol;
pub mod server;
pub mod store;
