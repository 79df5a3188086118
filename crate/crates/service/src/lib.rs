//! Live training service: the engine on its own thread behind a
//! WebSocket endpoint.

pub mod hub;
pub mod messages;
pub mod server;

pub use hub::{ClientHandle, Hub, HubConfig, HubError};
pub use messages::{Inbound, InputMode, Outbound};
pub use server::{router, Service, ServiceConfig, ServiceError};
